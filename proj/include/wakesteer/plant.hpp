#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "wakesteer/farm.hpp"
#include "wakesteer/rng.hpp"

namespace wakesteer {

struct NoiseModel {
    double ar1_coefficient = 0.99;   // per-sample autocorrelation
    double std_fraction = 0.01;      // stationary std as fraction of greedy power

    void validate() const;
};

// Synthetic stand-in for the high-fidelity plant: the same wake-model family
// with perturbed parameters, a first-order transient between operating
// points, and AR(1) power noise.
struct PlantSpec {
    WakeParams truth_params;
    Ambient truth_ambient;
    NoiseModel noise;
    double transient_time_constant = 60.0; // s
    std::uint64_t seed = 0;

    void validate() const;
};

// Default truth-parameter perturbation relative to a surrogate: faster wake
// expansion, stronger yaw power loss, amplified and skewed deflection.
WakeParams default_truth_perturbation(const WakeParams& surrogate);

struct PowerSeries {
    double sample_period = 1.0; // s
    Eigen::MatrixXd samples;    // T x n_turbines, W
    std::vector<double> op_boundaries; // timestamps of OP changes, s

    int length() const { return static_cast<int>(samples.rows()); }
    double span() const { return length() * sample_period; }
};

struct OperatingPoint {
    YawVector yaw;                 // deg
    Eigen::VectorXd power_watts;   // filtered per-turbine measurement
    Eigen::VectorXd power_norm;    // normalized by greedy power
    int index = 0;
    double t_start = 0.0;
    double t_end = 0.0;
};

struct OpSchedule {
    std::vector<std::pair<YawVector, double>> entries; // (yaw, duration s)
};

// Stateful plant: RNG stream and transient carry-over persist across OPs.
class PlantSimulator {
public:
    PlantSimulator(PlantSpec spec, FarmLayout layout, double sample_period = 1.0);

    // noiseless steady-state per-turbine truth power at this yaw
    Eigen::VectorXd truth_power(const YawVector& yaw) const;

    PowerSeries simulate_op(const YawVector& yaw, double duration);

    // simulate one OP and return its filtered measurement
    Eigen::VectorXd measure(const YawVector& yaw, double duration, double horizon,
                            double cut);

    const FarmLayout& layout() const { return layout_; }
    const PlantSpec& spec() const { return spec_; }
    double sample_period() const { return sample_period_; }
    double elapsed() const { return elapsed_; }

    // checkpointing: the full mutable state
    std::uint64_t rng_counter() const { return rng_.counter(); }
    const Eigen::VectorXd& carry_power() const { return carry_power_; }
    const Eigen::VectorXd& noise_state() const { return noise_state_; }
    void restore(std::uint64_t rng_counter, Eigen::VectorXd carry_power,
                 Eigen::VectorXd noise_state, double elapsed);

private:
    PlantSpec spec_;
    FarmLayout layout_;
    double sample_period_;
    Eigen::VectorXd greedy_power_;
    Eigen::VectorXd carry_power_;  // steady output of the previous OP
    Eigen::VectorXd noise_state_;
    double elapsed_ = 0.0;
    StreamRng rng_;
};

// Trailing boxcar mean per turbine; partial windows during warm-up.
PowerSeries moving_average(const PowerSeries& series, double horizon);

// Filtered measurement at the final timestamp of one OP segment, after
// discarding the first `cut` seconds of transient.
Eigen::VectorXd extract_measurement(const PowerSeries& segment, double horizon,
                                    double cut);

// Yaw vectors for the initial training set: n_ops points inside the bounds,
// a duplicate_fraction share repeating earlier points (fresh noise later).
std::vector<YawVector> initial_yaw_set(const Eigen::VectorXd& lower,
                                       const Eigen::VectorXd& upper, int n_ops,
                                       double duplicate_fraction,
                                       std::uint64_t seed);

// Runs the plant over the initial yaw set and extracts one measurement per OP.
std::vector<OperatingPoint> make_initial_dataset(
    PlantSimulator& plant, const Eigen::VectorXd& lower,
    const Eigen::VectorXd& upper, int n_ops, double duplicate_fraction,
    std::uint64_t seed, double op_duration, double horizon, double cut,
    const Eigen::VectorXd& greedy_power_norm_basis);

} // namespace wakesteer
