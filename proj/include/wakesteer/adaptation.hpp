#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "wakesteer/farm.hpp"
#include "wakesteer/gp.hpp"

namespace wakesteer {

enum class Scheme { MaGp, Bo };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

// Steady-state surrogate with per-turbine greedy-power normalization.
struct Surrogate {
    FarmLayout layout;
    Ambient ambient;
    WakeParams params;
    Eigen::VectorXd greedy_power; // per-turbine W at zero yaw

    static Surrogate make(FarmLayout layout, Ambient ambient, WakeParams params);

    // per-turbine power divided by per-turbine greedy power
    Eigen::VectorXd normalized_power(const YawVector& yaw) const;
};

// Surrogate plus one GP per turbine (MA-GP corrects the surrogate, BO
// identifies normalized power directly; the surrogate is unused in BO).
struct CorrectedModel {
    Scheme scheme = Scheme::MaGp;
    Surrogate surrogate;
    std::vector<GpModel> gp_bank;

    int turbine_count() const { return surrogate.layout.size(); }

    nlohmann::json to_json() const;
};

// Bank of prior GPs (no data) over the yaw input space.
CorrectedModel make_corrected_model(Scheme scheme, Surrogate surrogate,
                                    KernelKind kernel,
                                    const Hyperparameters& prior_psi);

struct ModelPrediction {
    Eigen::VectorXd means;     // normalized power per turbine
    Eigen::VectorXd variances; // GP latent variances
};

ModelPrediction model_power(const CorrectedModel& cm, const YawVector& yaw);

enum class ObjectiveForm { Squared, Linear };

struct OptimizerOptions {
    Eigen::VectorXd yaw_lower; // deg, per turbine
    Eigen::VectorXd yaw_upper;
    double variance_weight = 0.0; // tau
    // per-turbine weights on the normalized means (empty = uniform); set to
    // relative greedy power to make the objective proportional to farm watts
    Eigen::VectorXd weights;
    ObjectiveForm form = ObjectiveForm::Squared;
    double filter_gain = 1.0; // kappa
    int multistart = 16;
    double grid_resolution = 3.0; // deg
    bool tie_rows = false;
    std::vector<int> rows; // row index per turbine; enables the row-tied grid

    void validate() const;
};

double objective(const Eigen::VectorXd& means, const Eigen::VectorXd& variances,
                 const OptimizerOptions& opts);

struct YawOptimum {
    YawVector yaw;
    double objective = 0.0;
    bool converged = false;
};

// Multistart quasi-Newton over the yaw box with a coarse-grid fallback.
YawOptimum optimize_yaw(const CorrectedModel& cm, const OptimizerOptions& opts,
                        std::uint64_t seed);

YawVector filter_step(const YawVector& current, const YawVector& optimum,
                      double kappa);

// Appends one (yaw, measurement) pair to every turbine GP; `refit` reruns the
// hyperparameter fit with `fit_options`.
CorrectedModel assimilate(const CorrectedModel& cm, const YawVector& yaw_applied,
                          const Eigen::VectorXd& measured_norm, bool refit,
                          const FitOptions& fit_options = {});

struct AmbientEstimate {
    double wind_speed = 0.0;
    double turbulence_intensity = 0.0;
    double residual = 0.0; // sum of squared per-turbine power residuals, W^2
};

struct AmbientSearchRange {
    double wind_speed_min = 5.0;
    double wind_speed_max = 12.0;
    double ti_min = 0.02;
    double ti_max = 0.15;
};

// Grid search refined to 0.01 m/s x 0.1 pp over zero-yaw (greedy) power
// measurements.
AmbientEstimate estimate_ambient(const FarmLayout& layout, const WakeParams& params,
                                 const Ambient& nominal,
                                 const Eigen::VectorXd& greedy_watts,
                                 const AmbientSearchRange& range);

struct IterationRecord {
    int iteration = 0;
    YawVector yaw_applied;
    YawVector yaw_optimum; // pre-filter optimizer output
    Eigen::VectorXd measured_watts;
    Eigen::VectorXd measured_norm;
    Eigen::VectorXd predicted_norm;
    double objective_value = 0.0;
    double total_norm = 0.0; // measured total normalized power
    std::vector<Hyperparameters> hyper_snapshot;

    nlohmann::json to_json() const;
    static IterationRecord from_json(const nlohmann::json& j);
};

} // namespace wakesteer
