#include "wakesteer/farm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace wakesteer {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBetzLimit = 16.0 / 27.0;

double deg2rad(double d) { return d * kPi / 180.0; }

struct WakeGeometry {
    double x0;      // near-wake length, m
    double k;       // expansion rate (isotropic)
    double sigma_y0;
    double sigma_z0;
};

WakeGeometry wake_geometry(double yaw_rad, double ct, const WakeParams& p,
                           const Turbine& t, double ti_local) {
    const double d = t.rotor_diameter;
    const double cg = std::cos(yaw_rad);
    const double sq1ct = std::sqrt(std::max(0.0, 1.0 - ct));
    WakeGeometry g;
    g.x0 = d * cg * (1.0 + sq1ct) /
           (std::sqrt(2.0) * (4.0 * p.alpha * ti_local + 2.0 * p.beta * (1.0 - sq1ct)));
    g.k = p.ka * ti_local + p.kb;
    g.sigma_y0 = d * cg / std::sqrt(8.0);
    g.sigma_z0 = d / std::sqrt(8.0);
    return g;
}

void check_wake_args(double x, double ct) {
    if (!(x > 0.0))
        throw std::domain_error("wake evaluation requires x > 0 (strictly downstream)");
    if (!(ct > 0.0 && ct < 1.0))
        throw std::domain_error("thrust coefficient must lie in (0, 1)");
}

} // namespace

double Turbine::rotor_area() const {
    return kPi * 0.25 * rotor_diameter * rotor_diameter;
}

void Turbine::validate() const {
    if (!(rotor_diameter > 0.0)) throw std::invalid_argument("rotor diameter must be positive");
    if (!(cp_max > 0.0 && cp_max < kBetzLimit))
        throw std::invalid_argument("cp_max must lie in (0, 16/27)");
    if (!(rated_power > 0.0)) throw std::invalid_argument("rated power must be positive");
    for (const auto& [u, ct] : ct_curve)
        if (!(ct > 0.0 && ct < 1.2))
            throw std::invalid_argument("ct curve values must lie in (0, 1.2)");
}

double thrust_coefficient(const Turbine& t, double u_eff) {
    if (t.ct_curve.empty()) return 0.8;
    const auto& c = t.ct_curve;
    if (u_eff <= c.front().first) return c.front().second;
    if (u_eff >= c.back().first) return c.back().second;
    for (std::size_t i = 1; i < c.size(); ++i) {
        if (u_eff <= c[i].first) {
            double w = (u_eff - c[i - 1].first) / (c[i].first - c[i - 1].first);
            return c[i - 1].second + w * (c[i].second - c[i - 1].second);
        }
    }
    return c.back().second;
}

void FarmLayout::validate() const {
    if (turbines.empty()) throw std::invalid_argument("layout needs at least one turbine");
    for (const auto& t : turbines) t.validate();
    for (std::size_t i = 0; i < turbines.size(); ++i) {
        for (std::size_t j = i + 1; j < turbines.size(); ++j) {
            double dx = turbines[i].x - turbines[j].x;
            double dy = turbines[i].y - turbines[j].y;
            double min_sep = 0.5 * std::min(turbines[i].rotor_diameter,
                                            turbines[j].rotor_diameter);
            if (std::hypot(dx, dy) < min_sep)
                throw std::invalid_argument("turbines closer than 0.5 D");
        }
    }
}

FarmLayout make_grid_layout(int rows, int cols, double spacing_downstream_d,
                            double spacing_cross_d, const Turbine& prototype,
                            std::string name) {
    FarmLayout layout;
    layout.name = std::move(name);
    const double d = prototype.rotor_diameter;
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) {
            Turbine t = prototype;
            t.x = r * spacing_downstream_d * d;
            t.y = c * spacing_cross_d * d;
            layout.turbines.push_back(t);
        }
    }
    layout.validate();
    return layout;
}

void Ambient::validate() const {
    if (!(wind_speed > 0.0)) throw std::invalid_argument("wind speed must be positive");
    if (!(turbulence_intensity > 0.0 && turbulence_intensity < 0.5))
        throw std::invalid_argument("turbulence intensity must lie in (0, 0.5)");
    if (!(air_density > 0.0)) throw std::invalid_argument("air density must be positive");
}

void WakeParams::validate() const {
    if (ka < 0.0 || kb < 0.0) throw std::invalid_argument("wake expansion coefficients must be >= 0");
    if (!(alpha > 0.0 && beta > 0.0)) throw std::invalid_argument("near-wake coefficients must be positive");
    if (!(yaw_power_exponent >= 1.0 && yaw_power_exponent <= 3.0))
        throw std::invalid_argument("yaw power exponent must lie in [1, 3]");
}

double wake_deflection(double yaw_deg, double ct, double x,
                       const WakeParams& params, const Turbine& turbine,
                       double ti_local) {
    check_wake_args(x, ct);
    const double g = deg2rad(yaw_deg);
    const double cg = std::cos(g);
    const double d = turbine.rotor_diameter;
    const auto geo = wake_geometry(g, ct, params, turbine, ti_local);

    const double theta0 = 0.3 * g / cg * (1.0 - std::sqrt(1.0 - ct * cg));

    double delta;
    if (x <= geo.x0) {
        delta = theta0 * x;
    } else {
        const double sigma_y = geo.k * (x - geo.x0) + geo.sigma_y0;
        const double sigma_z = geo.k * (x - geo.x0) + geo.sigma_z0;
        const double sq_ct = std::sqrt(ct);
        const double s = std::sqrt(8.0 * sigma_y * sigma_z / (d * d * cg));
        const double num = (1.6 + sq_ct) * (1.6 * s - sq_ct);
        const double den = (1.6 - sq_ct) * (1.6 * s + sq_ct);
        delta = theta0 * geo.x0 +
                d * theta0 / 14.7 * std::sqrt(cg / (geo.k * geo.k * ct)) *
                    (2.9 + 1.3 * std::sqrt(1.0 - ct) - ct) * std::log(num / den);
    }
    return params.deflection_gain * delta + params.skew_offset + params.skew_slope * x;
}

double wake_deficit(double x, double y_off, double z_off, double yaw_deg,
                    double ct, const WakeParams& params, const Turbine& turbine,
                    double ti_local) {
    check_wake_args(x, ct);
    const double g = deg2rad(yaw_deg);
    const double cg = std::cos(g);
    const double d = turbine.rotor_diameter;
    const auto geo = wake_geometry(g, ct, params, turbine, ti_local);

    // inside the near wake the width is frozen at its x0 value
    const double xe = std::max(x, geo.x0);
    const double sigma_y = geo.k * (xe - geo.x0) + geo.sigma_y0;
    const double sigma_z = geo.k * (xe - geo.x0) + geo.sigma_z0;

    const double radicand = 1.0 - ct * cg * d * d / (8.0 * sigma_y * sigma_z);
    double c = 1.0 - std::sqrt(std::max(radicand, 0.0));
    c = std::min(c, 0.9999);
    return c * std::exp(-0.5 * y_off * y_off / (sigma_y * sigma_y)) *
           std::exp(-0.5 * z_off * z_off / (sigma_z * sigma_z));
}

Eigen::VectorXd effective_speeds(const FarmLayout& layout, const Ambient& ambient,
                                 const YawVector& yaw, const WakeParams& params) {
    const int n = layout.size();
    if (yaw.size() != n)
        throw std::invalid_argument("yaw vector length does not match turbine count");

    // wind-aligned coordinates
    const double cphi = std::cos(ambient.wind_direction);
    const double sphi = std::sin(ambient.wind_direction);
    Eigen::VectorXd xd(n), yd(n);
    for (int i = 0; i < n; ++i) {
        xd(i) = cphi * layout.turbines[i].x + sphi * layout.turbines[i].y;
        yd(i) = -sphi * layout.turbines[i].x + cphi * layout.turbines[i].y;
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return xd(a) < xd(b); });

    Eigen::VectorXd speeds = Eigen::VectorXd::Constant(n, ambient.wind_speed);
    Eigen::VectorXd ti_local =
        Eigen::VectorXd::Constant(n, ambient.turbulence_intensity);

    for (int oi = 0; oi < n; ++oi) {
        const int i = order[oi];
        const Turbine& ti_turb = layout.turbines[i];
        double deficit_sq = 0.0;
        double deficit_lin = 0.0;
        double ti_added_sq = 0.0;
        for (int oj = 0; oj < oi; ++oj) {
            const int j = order[oj];
            const double dx = xd(i) - xd(j);
            if (dx <= 1e-9) continue;
            const Turbine& src = layout.turbines[j];
            const double uj = speeds(j);
            const double ct =
                std::clamp(thrust_coefficient(src, uj), 1e-6, 0.999);
            const double delta =
                wake_deflection(yaw(j), ct, dx, params, src, ti_local(j));
            const double dy = yd(i) - yd(j) - delta;
            const double dz = ti_turb.hub_height - src.hub_height;

            double def;
            if (params.rotor_averaging) {
                // four points at 0.7 R around hub center
                const double r = 0.35 * ti_turb.rotor_diameter;
                def = 0.25 * (wake_deficit(dx, dy + r, dz, yaw(j), ct, params, src, ti_local(j)) +
                              wake_deficit(dx, dy - r, dz, yaw(j), ct, params, src, ti_local(j)) +
                              wake_deficit(dx, dy, dz + r, yaw(j), ct, params, src, ti_local(j)) +
                              wake_deficit(dx, dy, dz - r, yaw(j), ct, params, src, ti_local(j)));
            } else {
                def = wake_deficit(dx, dy, dz, yaw(j), ct, params, src, ti_local(j));
            }
            deficit_sq += def * def;
            deficit_lin += def;

            if (def > 1e-3) {
                const double a = 0.5 * (1.0 - std::sqrt(1.0 - ct));
                const double ti_add =
                    params.ti_constant * std::pow(a, params.ti_ai_exponent) *
                    std::pow(ambient.turbulence_intensity, params.ti_ambient_exponent) *
                    std::pow(dx / src.rotor_diameter, params.ti_downstream_exponent);
                ti_added_sq += ti_add * ti_add;
            }
        }
        const double combined = params.superposition == Superposition::RootSumSquares
                                    ? std::sqrt(deficit_sq)
                                    : deficit_lin;
        speeds(i) = ambient.wind_speed * (1.0 - std::min(combined, 0.999));
        ti_local(i) = std::sqrt(ambient.turbulence_intensity *
                                    ambient.turbulence_intensity +
                                ti_added_sq);
    }
    return speeds;
}

double turbine_power(double u_eff, double yaw_deg, const Turbine& turbine,
                     const WakeParams& params, double air_density) {
    if (u_eff < 0.0) throw std::domain_error("effective wind speed must be >= 0");
    const double cg = std::cos(deg2rad(yaw_deg));
    const double yaw_loss = std::pow(std::max(cg, 0.0), params.yaw_power_exponent);
    const double p = 0.5 * air_density * turbine.rotor_area() * turbine.cp_max *
                     u_eff * u_eff * u_eff * yaw_loss;
    return std::min(p, turbine.rated_power);
}

FarmPower farm_power(const FarmLayout& layout, const Ambient& ambient,
                     const YawVector& yaw, const WakeParams& params) {
    const Eigen::VectorXd speeds = effective_speeds(layout, ambient, yaw, params);
    FarmPower result;
    result.per_turbine.resize(layout.size());
    for (int i = 0; i < layout.size(); ++i)
        result.per_turbine(i) = turbine_power(speeds(i), yaw(i), layout.turbines[i],
                                              params, ambient.air_density);
    result.total = result.per_turbine.sum();
    return result;
}

std::vector<int> row_assignment(const FarmLayout& layout, const Ambient& ambient) {
    const int n = layout.size();
    const double cphi = std::cos(ambient.wind_direction);
    const double sphi = std::sin(ambient.wind_direction);
    std::vector<double> xd(n);
    for (int i = 0; i < n; ++i)
        xd[i] = cphi * layout.turbines[i].x + sphi * layout.turbines[i].y;

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return xd[a] < xd[b]; });

    std::vector<int> rows(n, 0);
    int row = 0;
    for (int k = 1; k < n; ++k) {
        const double tol = 0.1 * layout.turbines[order[k]].rotor_diameter;
        if (xd[order[k]] - xd[order[k - 1]] > tol) ++row;
        rows[order[k]] = row;
    }
    return rows;
}

} // namespace wakesteer
