#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

namespace wakesteer {

enum class KernelKind { SquaredExponentialARD, Matern52ARD };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

struct Hyperparameters {
    double signal_std = 1.0;
    double noise_std = 0.1;
    Eigen::VectorXd length_scales; // one per input dimension

    void validate(int input_dim) const;
};

// Affine map between physical and internal (conditioned) units.
struct Normalization {
    Eigen::VectorXd input_shift; // empty => identity, filled by fit()
    Eigen::VectorXd input_scale;
    double output_shift = 0.0;
    double output_scale = 1.0;
};

struct TrainingSet {
    Eigen::MatrixXd inputs; // n x d, physical units
    Eigen::VectorXd targets; // n, physical units
    Normalization norm;

    int size() const { return static_cast<int>(inputs.rows()); }
    int dim() const { return static_cast<int>(inputs.cols()); }
};

// Lower bounds applied during hyperparameter fitting (physical units).
struct HyperBounds {
    double noise_floor_rel = 1e-3;   // fraction of output scale
    double length_floor = 1.0;       // input units (degrees here)
    double signal_floor_rel = 1e-6;  // fraction of output scale
};

struct FitOptions {
    std::optional<HyperBounds> bounds = HyperBounds{};
    int restarts = 8;
    std::uint64_t seed = 0;
};

// Stationary kernel value; operates directly on the units of psi/inputs.
double kernel_eval(KernelKind kind, const Hyperparameters& psi,
                   const Eigen::VectorXd& u_i, const Eigen::VectorXd& u_j);

// Covariance matrix over the rows of `inputs`, with relative jitter
// 1e-10 * sigma_f^2 on the diagonal.
Eigen::MatrixXd gram(KernelKind kind, const Hyperparameters& psi,
                     const Eigen::MatrixXd& inputs);

struct LmlResult {
    double value = 0.0;
    // d/d log(psi), ordered [sigma_f, sigma_nu, lambda_1..lambda_d]
    Eigen::VectorXd grad_log;
};

LmlResult log_marginal_likelihood(KernelKind kind, const Hyperparameters& psi,
                                  const Eigen::MatrixXd& inputs,
                                  const Eigen::VectorXd& targets);

struct Prediction {
    double mean = 0.0;
    double latent_var = 0.0;
    double observation_var = 0.0;
};

// One trained GP. Hyperparameters are stored in physical units; the cached
// factorization works on normalized internals and is rebuilt on any change.
class GpModel {
public:
    GpModel() = default;

    // prior-only model (no data)
    static GpModel prior(KernelKind kind, Hyperparameters psi, int input_dim);

    // factorize with the given hyperparameters, no hyperparameter search
    static GpModel train(TrainingSet data, KernelKind kind, Hyperparameters psi);

    KernelKind kernel() const { return kernel_; }
    const Hyperparameters& hyper() const { return psi_; }
    const TrainingSet& data() const { return data_; }
    int size() const { return data_.size(); }
    int input_dim() const { return input_dim_; }

    Prediction predict(const Eigen::VectorXd& u) const;

    // appends one observation, keeping hyperparameters and normalization
    GpModel with_observation(const Eigen::VectorXd& u, double y) const;

    nlohmann::json to_json() const;
    static GpModel from_json(const nlohmann::json& j);

private:
    friend GpModel fit(TrainingSet, KernelKind, const FitOptions&);
    void rebuild();

    KernelKind kernel_ = KernelKind::SquaredExponentialARD;
    Hyperparameters psi_;
    TrainingSet data_;
    int input_dim_ = 0;

    // normalized caches
    Eigen::MatrixXd inputs_n_;
    Eigen::VectorXd targets_n_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
    Hyperparameters psi_n_; // psi in normalized units
};

// Hyperparameter fit by multistart quasi-Newton maximization of the log
// marginal likelihood in log space, with optional lower bounds.
GpModel fit(TrainingSet data, KernelKind kind, const FitOptions& options = {});

} // namespace wakesteer
