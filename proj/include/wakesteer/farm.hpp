#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace wakesteer {

// Per-turbine yaw misalignment in degrees. Positive = counterclockwise
// viewed from above; positive wake deflection points along +y.
using YawVector = Eigen::VectorXd;

struct Turbine {
    double x = 0.0; // m, wind-aligned frame
    double y = 0.0; // m
    double rotor_diameter = 178.3; // m
    double hub_height = 119.0;     // m
    double cp_max = 0.45;
    std::vector<std::pair<double, double>> ct_curve; // (wind speed m/s, ct)
    double rated_power = 10.64e6; // W

    double rotor_area() const;
    void validate() const;
};

// Thrust coefficient at a rotor-effective speed: linear interpolation on the
// curve, clamped at the ends; constant 0.8 when no curve is given.
double thrust_coefficient(const Turbine& t, double u_eff);

struct FarmLayout {
    std::vector<Turbine> turbines;
    std::string name;

    int size() const { return static_cast<int>(turbines.size()); }
    void validate() const;
};

// Regular grid layout, spacing in rotor diameters, wind along +x.
FarmLayout make_grid_layout(int rows, int cols, double spacing_downstream_d,
                            double spacing_cross_d, const Turbine& prototype,
                            std::string name = "grid");

struct Ambient {
    double wind_speed = 8.0;            // m/s
    double turbulence_intensity = 0.05; // fraction
    double wind_direction = 0.0;        // rad
    double air_density = 1.225;         // kg/m^3

    void validate() const;
};

enum class Superposition { RootSumSquares, Linear };

struct WakeParams {
    // wake expansion rate k = ka * ti_local + kb
    double ka = 0.38;
    double kb = 0.004;
    // near-wake length coefficients
    double alpha = 0.58;
    double beta = 0.077;
    // added turbulence: c * a^e_a * I_inf^e_i * (x/D)^e_d
    double ti_constant = 0.5;
    double ti_ai_exponent = 0.8;
    double ti_ambient_exponent = 0.1;
    double ti_downstream_exponent = -0.32;
    // turbine-side yaw loss: cos(gamma)^pP
    double yaw_power_exponent = 1.88;
    // deflection scaling and constant skew (offset + slope * x), both default
    // to the unmodified model
    double deflection_gain = 1.0;
    double skew_offset = 0.0; // m
    double skew_slope = 0.0;  // m lateral per m downstream
    Superposition superposition = Superposition::RootSumSquares;
    bool rotor_averaging = false;

    void validate() const;
};

// Lateral offset (m) of the wake centerline of a yawed turbine, evaluated a
// distance x downstream. Odd in yaw when the skew terms are zero.
double wake_deflection(double yaw_deg, double ct, double x,
                       const WakeParams& params, const Turbine& turbine,
                       double ti_local);

// Fractional free-stream speed lost at (x, y_off, z_off), with offsets
// measured from the (deflected) wake centerline.
double wake_deficit(double x, double y_off, double z_off, double yaw_deg,
                    double ct, const WakeParams& params, const Turbine& turbine,
                    double ti_local);

// Rotor-effective wind speed at every turbine after wake superposition.
Eigen::VectorXd effective_speeds(const FarmLayout& layout, const Ambient& ambient,
                                 const YawVector& yaw, const WakeParams& params);

// Actuator-disc power with cosine yaw loss, clipped at rated power.
double turbine_power(double u_eff, double yaw_deg, const Turbine& turbine,
                     const WakeParams& params, double air_density);

struct FarmPower {
    Eigen::VectorXd per_turbine; // W
    double total = 0.0;          // W
};

FarmPower farm_power(const FarmLayout& layout, const Ambient& ambient,
                     const YawVector& yaw, const WakeParams& params);

// Turbines grouped by downstream station: row 0 is the most upstream.
// Turbines whose wind-aligned x agree within 0.1 D share a row.
std::vector<int> row_assignment(const FarmLayout& layout, const Ambient& ambient);

} // namespace wakesteer
