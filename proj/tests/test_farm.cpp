#include "doctest.h"

#include "wakesteer/farm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace wakesteer;

namespace {

Turbine reference_turbine() {
    Turbine t;
    t.rotor_diameter = 178.3;
    t.hub_height = 119.0;
    t.cp_max = 0.45;
    t.rated_power = 10.64e6;
    return t;
}

Ambient reference_ambient() {
    Ambient a;
    a.wind_speed = 8.0;
    a.turbulence_intensity = 0.05;
    return a;
}

FarmLayout nine_turbine_layout() {
    return make_grid_layout(3, 3, 5.0, 3.0, reference_turbine());
}

} // namespace

TEST_CASE("wake deflection is zero without yaw") {
    const Turbine t = reference_turbine();
    const WakeParams p;
    for (double x : {0.5 * t.rotor_diameter, 3.0 * t.rotor_diameter,
                     12.0 * t.rotor_diameter}) {
        CHECK(wake_deflection(0.0, 0.8, x, p, t, 0.05) == 0.0);
    }
}

TEST_CASE("wake deflection is odd in yaw") {
    const Turbine t = reference_turbine();
    const WakeParams p;
    const double x = 5.0 * t.rotor_diameter;
    const double plus = wake_deflection(20.0, 0.8, x, p, t, 0.05);
    const double minus = wake_deflection(-20.0, 0.8, x, p, t, 0.05);
    CHECK(plus == doctest::Approx(-minus).epsilon(1e-12));
    CHECK(plus != 0.0);
}

TEST_CASE("wake deflection pinned regression value") {
    // independently scripted evaluation of the deflection formulas:
    // gamma = 25 deg, ct = 0.8, x = 5 D, D = 178.3 m, ti = 0.05
    const Turbine t = reference_turbine();
    const WakeParams p;
    const double off = wake_deflection(25.0, 0.8, 5.0 * t.rotor_diameter, p, t, 0.05);
    CHECK(off == doctest::Approx(60.78813624145873).epsilon(1e-10));
}

TEST_CASE("wake deflection magnitude is non-decreasing downstream") {
    const Turbine t = reference_turbine();
    const WakeParams p;
    double prev = 0.0;
    for (double xd = 1.0; xd <= 15.0; xd += 0.5) {
        const double off =
            std::abs(wake_deflection(20.0, 0.8, xd * t.rotor_diameter, p, t, 0.05));
        CHECK(off >= prev - 1e-9);
        prev = off;
    }
}

TEST_CASE("wake evaluation rejects bad domain inputs") {
    const Turbine t = reference_turbine();
    const WakeParams p;
    CHECK_THROWS_AS(wake_deflection(10.0, 0.8, 0.0, p, t, 0.05), std::domain_error);
    CHECK_THROWS_AS(wake_deflection(10.0, 0.8, -5.0, p, t, 0.05), std::domain_error);
    CHECK_THROWS_AS(wake_deflection(10.0, 1.5, 100.0, p, t, 0.05), std::domain_error);
    CHECK_THROWS_AS(wake_deficit(-1.0, 0.0, 0.0, 0.0, 0.8, p, t, 0.05),
                    std::domain_error);
    CHECK_THROWS_AS(wake_deficit(100.0, 0.0, 0.0, 0.0, 0.0, p, t, 0.05),
                    std::domain_error);
}

TEST_CASE("wake deficit vanishes far outside the wake") {
    const Turbine t = reference_turbine();
    const WakeParams p;
    const double x = 5.0 * t.rotor_diameter;
    CHECK(wake_deficit(x, 1e6, 0.0, 0.0, 0.8, p, t, 0.05) ==
          doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("wake deficit vanishes as thrust goes to zero") {
    const Turbine t = reference_turbine();
    const WakeParams p;
    const double x = 5.0 * t.rotor_diameter;
    CHECK(wake_deficit(x, 0.0, 0.0, 0.0, 1e-9, p, t, 0.05) < 1e-4);
}

TEST_CASE("wake deficit pinned regression value") {
    // independently scripted evaluation: x = 5 D centerline, gamma = 0,
    // ct = 0.8, ti = 0.05 (inside the near wake for these parameters)
    const Turbine t = reference_turbine();
    const WakeParams p;
    const double def =
        wake_deficit(5.0 * t.rotor_diameter, 0.0, 0.0, 0.0, 0.8, p, t, 0.05);
    CHECK(def == doctest::Approx(0.5527864045000421).epsilon(1e-10));
}

TEST_CASE("wake deficit decays like a Gaussian in lateral offset") {
    const Turbine t = reference_turbine();
    const WakeParams p;
    const double x = 10.0 * t.rotor_diameter; // far wake
    const double center = wake_deficit(x, 0.0, 0.0, 0.0, 0.8, p, t, 0.05);
    // locate sigma from the half-deficit point, then check the 3-sigma tail
    double sigma = 0.0;
    for (double y = 0.0; y < 5.0 * t.rotor_diameter; y += 0.1) {
        if (wake_deficit(x, y, 0.0, 0.0, 0.8, p, t, 0.05) <
            center * std::exp(-0.5)) {
            sigma = y;
            break;
        }
    }
    REQUIRE(sigma > 0.0);
    CHECK(wake_deficit(x, 3.0 * sigma, 0.0, 0.0, 0.8, p, t, 0.05) < 0.02 * center);
}

TEST_CASE("centerline deficit decreases downstream beyond the near wake") {
    const Turbine t = reference_turbine();
    const WakeParams p;
    double prev = wake_deficit(7.0 * t.rotor_diameter, 0.0, 0.0, 0.0, 0.8, p, t, 0.05);
    for (double xd = 7.5; xd <= 20.0; xd += 0.5) {
        const double def =
            wake_deficit(xd * t.rotor_diameter, 0.0, 0.0, 0.0, 0.8, p, t, 0.05);
        CHECK(def < prev);
        prev = def;
    }
}

TEST_CASE("single turbine sees the free stream") {
    FarmLayout layout;
    layout.turbines.push_back(reference_turbine());
    const Ambient a = reference_ambient();
    const Eigen::VectorXd u = effective_speeds(layout, a, Eigen::VectorXd::Zero(1), {});
    REQUIRE(u.size() == 1);
    CHECK(u(0) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("side-by-side turbines far apart are unwaked") {
    FarmLayout layout;
    Turbine t = reference_turbine();
    layout.turbines.push_back(t);
    t.y = 10.0 * t.rotor_diameter;
    layout.turbines.push_back(t);
    const Eigen::VectorXd u =
        effective_speeds(layout, reference_ambient(), Eigen::VectorXd::Zero(2), {});
    CHECK(std::abs(u(0) - 8.0) < 1e-9);
    CHECK(std::abs(u(1) - 8.0) < 1e-9);
}

TEST_CASE("aligned column loses speed behind the leader") {
    const FarmLayout layout = make_grid_layout(3, 1, 5.0, 3.0, reference_turbine());
    const Eigen::VectorXd u =
        effective_speeds(layout, reference_ambient(), Eigen::VectorXd::Zero(3), {});
    CHECK(u(0) == doctest::Approx(8.0).epsilon(1e-12));
    // wake-added turbulence speeds up recovery, so the third turbine may
    // exceed the second; both stay well below the unwaked leader
    CHECK(u(1) < 0.9 * u(0));
    CHECK(u(2) < 0.9 * u(0));
    CHECK(u(1) > 0.0);
    CHECK(u(2) > 0.0);
}

TEST_CASE("linear superposition makes the column strictly decreasing") {
    const FarmLayout layout = make_grid_layout(3, 1, 5.0, 3.0, reference_turbine());
    WakeParams params;
    params.superposition = Superposition::Linear;
    const Eigen::VectorXd u =
        effective_speeds(layout, reference_ambient(), Eigen::VectorXd::Zero(3), params);
    CHECK(u(0) > u(1));
    CHECK(u(1) > u(2));
    CHECK(u(2) > 0.0);
}

TEST_CASE("effective speeds reject a mismatched yaw vector") {
    const FarmLayout layout = nine_turbine_layout();
    CHECK_THROWS(effective_speeds(layout, reference_ambient(),
                                  Eigen::VectorXd::Zero(4), {}));
}

TEST_CASE("turbine power at zero wind is zero") {
    CHECK(turbine_power(0.0, 0.0, reference_turbine(), {}, 1.225) == 0.0);
}

TEST_CASE("turbine power rejects negative wind speed") {
    CHECK_THROWS_AS(turbine_power(-1.0, 0.0, reference_turbine(), {}, 1.225),
                    std::domain_error);
}

TEST_CASE("turbine power pinned actuator-disc value") {
    // 0.5 * 1.225 * pi * (178.3/2)^2 * 0.45 * 8^3
    const double p = turbine_power(8.0, 0.0, reference_turbine(), {}, 1.225);
    CHECK(p == doctest::Approx(3523555.654040866).epsilon(1e-12));
}

TEST_CASE("yaw power loss follows cos^pP") {
    const Turbine t = reference_turbine();
    const WakeParams params; // pP = 1.88
    const double ratio = turbine_power(8.0, 30.0, t, params, 1.225) /
                         turbine_power(8.0, 0.0, t, params, 1.225);
    CHECK(ratio == doctest::Approx(0.7630580661988426).epsilon(1e-12));
}

TEST_CASE("turbine power is even and non-increasing in yaw magnitude") {
    const Turbine t = reference_turbine();
    const WakeParams params;
    double prev = turbine_power(8.0, 0.0, t, params, 1.225);
    for (double g = 2.0; g <= 40.0; g += 2.0) {
        const double p = turbine_power(8.0, g, t, params, 1.225);
        CHECK(p == doctest::Approx(turbine_power(8.0, -g, t, params, 1.225))
                       .epsilon(1e-12));
        CHECK(p <= prev + 1e-9);
        prev = p;
    }
}

TEST_CASE("turbine power clips at rated power") {
    Turbine t = reference_turbine();
    t.rated_power = 1e6;
    CHECK(turbine_power(8.0, 0.0, t, {}, 1.225) == 1e6);
}

TEST_CASE("single-turbine farm power equals turbine power") {
    FarmLayout layout;
    layout.turbines.push_back(reference_turbine());
    const FarmPower fp =
        farm_power(layout, reference_ambient(), Eigen::VectorXd::Zero(1), {});
    CHECK(fp.total == doctest::Approx(3523555.654040866).epsilon(1e-12));
    CHECK(fp.per_turbine(0) == fp.total);
}

TEST_CASE("farm total equals the per-turbine sum exactly") {
    const FarmLayout layout = nine_turbine_layout();
    Eigen::VectorXd yaw(9);
    yaw << 20, 10, 0, 20, 10, 0, 20, 10, 0;
    const FarmPower fp = farm_power(layout, reference_ambient(), yaw, {});
    CHECK(fp.total == fp.per_turbine.sum());
}

TEST_CASE("greedy nine-turbine farm has three identical columns") {
    // layout index = column * 3 + downstream station; at phi = 0 the three
    // columns are physically identical, so station triples must agree
    const FarmLayout layout = nine_turbine_layout();
    const FarmPower fp =
        farm_power(layout, reference_ambient(), Eigen::VectorXd::Zero(9), {});
    for (int station = 0; station < 3; ++station) {
        for (int col = 1; col < 3; ++col) {
            CHECK(fp.per_turbine(col * 3 + station) ==
                  doctest::Approx(fp.per_turbine(station)).epsilon(1e-12));
        }
    }
    // waked stations produce far less than the unwaked front row
    CHECK(fp.per_turbine(1) < 0.5 * fp.per_turbine(0));
    CHECK(fp.per_turbine(2) < 0.5 * fp.per_turbine(0));
}

TEST_CASE("row-wise yaw steering beats greedy on the nine-turbine farm") {
    const FarmLayout layout = nine_turbine_layout();
    const Ambient a = reference_ambient();
    Eigen::VectorXd steered(9);
    steered << 30, 12, 0, 30, 12, 0, 30, 12, 0;
    const double greedy = farm_power(layout, a, Eigen::VectorXd::Zero(9), {}).total;
    const double yawed = farm_power(layout, a, steered, {}).total;
    CHECK(yawed > greedy);
}

TEST_CASE("farm power is invariant under turbine re-indexing") {
    const FarmLayout layout = nine_turbine_layout();
    Eigen::VectorXd yaw(9);
    yaw << 25, 10, 0, -20, 5, 2, 15, -8, 1;
    const FarmPower base = farm_power(layout, reference_ambient(), yaw, {});

    std::vector<int> perm(9);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937 rng(5);
    std::shuffle(perm.begin(), perm.end(), rng);

    FarmLayout shuffled;
    Eigen::VectorXd yaw_shuffled(9);
    for (int i = 0; i < 9; ++i) {
        shuffled.turbines.push_back(layout.turbines[static_cast<size_t>(perm[i])]);
        yaw_shuffled(i) = yaw(perm[i]);
    }
    const FarmPower moved = farm_power(shuffled, reference_ambient(), yaw_shuffled, {});
    CHECK(moved.total == doctest::Approx(base.total).epsilon(1e-12));
    for (int i = 0; i < 9; ++i)
        CHECK(moved.per_turbine(i) ==
              doctest::Approx(base.per_turbine(perm[i])).epsilon(1e-12));
}

TEST_CASE("no wake acts upstream") {
    const FarmLayout layout = make_grid_layout(3, 1, 5.0, 3.0, reference_turbine());
    const Ambient a = reference_ambient();
    Eigen::VectorXd yaw = Eigen::VectorXd::Zero(3);
    const Eigen::VectorXd base = effective_speeds(layout, a, yaw, {});
    yaw(2) = 25.0; // perturb the last turbine
    const Eigen::VectorXd after = effective_speeds(layout, a, yaw, {});
    CHECK(after(0) == base(0));
    CHECK(after(1) == base(1));
}

TEST_CASE("per-turbine power never exceeds the Betz limit") {
    const FarmLayout layout = nine_turbine_layout();
    const Ambient a = reference_ambient();
    const double betz = 0.5 * a.air_density *
                        layout.turbines[0].rotor_area() * (16.0 / 27.0) *
                        std::pow(a.wind_speed, 3);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-40.0, 40.0);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd yaw(9);
        for (int i = 0; i < 9; ++i) yaw(i) = u(rng);
        const FarmPower fp = farm_power(layout, a, yaw, {});
        for (int i = 0; i < 9; ++i) CHECK(fp.per_turbine(i) <= betz);
    }
}

TEST_CASE("thrust coefficient interpolates the curve and clamps the ends") {
    Turbine t = reference_turbine();
    CHECK(thrust_coefficient(t, 8.0) == 0.8); // no curve: constant fallback
    t.ct_curve = {{4.0, 0.9}, {8.0, 0.8}, {12.0, 0.4}};
    CHECK(thrust_coefficient(t, 8.0) == doctest::Approx(0.8));
    CHECK(thrust_coefficient(t, 6.0) == doctest::Approx(0.85));
    CHECK(thrust_coefficient(t, 2.0) == doctest::Approx(0.9));
    CHECK(thrust_coefficient(t, 20.0) == doctest::Approx(0.4));
}

TEST_CASE("row assignment groups turbines by downstream station") {
    const FarmLayout layout = nine_turbine_layout();
    const std::vector<int> rows = row_assignment(layout, reference_ambient());
    REQUIRE(rows.size() == 9);
    for (int i = 0; i < 9; ++i) CHECK(rows[static_cast<size_t>(i)] == i % 3);
}

TEST_CASE("layout validation rejects overlapping turbines") {
    FarmLayout layout;
    Turbine t = reference_turbine();
    layout.turbines.push_back(t);
    t.y = 0.3 * t.rotor_diameter;
    layout.turbines.push_back(t);
    CHECK_THROWS(layout.validate());
}
