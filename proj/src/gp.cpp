#include "wakesteer/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "wakesteer/errors.hpp"
#include "wakesteer/optim.hpp"
#include "wakesteer/rng.hpp"

namespace wakesteer {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double scaled_sq_dist(const Hyperparameters& psi, const Eigen::VectorXd& u_i,
                      const Eigen::VectorXd& u_j) {
    double r2 = 0.0;
    for (Eigen::Index d = 0; d < u_i.size(); ++d) {
        const double t = (u_i(d) - u_j(d)) / psi.length_scales(d);
        r2 += t * t;
    }
    return r2;
}

double kernel_from_r2(KernelKind kind, double sigma_f2, double r2) {
    switch (kind) {
    case KernelKind::SquaredExponentialARD:
        return sigma_f2 * std::exp(-0.5 * r2);
    case KernelKind::Matern52ARD: {
        const double s = std::sqrt(5.0 * r2);
        return sigma_f2 * (1.0 + s + s * s / 3.0) * std::exp(-s);
    }
    }
    return 0.0;
}

// d k / d r^2 at scaled squared distance r2
double kernel_dr2(KernelKind kind, double sigma_f2, double r2) {
    switch (kind) {
    case KernelKind::SquaredExponentialARD:
        return -0.5 * sigma_f2 * std::exp(-0.5 * r2);
    case KernelKind::Matern52ARD: {
        const double s = std::sqrt(5.0 * r2);
        return -sigma_f2 * (5.0 / 6.0) * (1.0 + s) * std::exp(-s);
    }
    }
    return 0.0;
}

// Factorization of K_f + sigma_nu^2 I with jitter escalation.
// Returns false when even the largest jitter fails.
bool factorize(const Eigen::MatrixXd& k_f, double sigma_f2, double sigma_nu2,
               Eigen::LLT<Eigen::MatrixXd>& llt) {
    const int n = static_cast<int>(k_f.rows());
    for (double rel : {0.0, 1e-8, 1e-6}) {
        Eigen::MatrixXd k = k_f;
        k.diagonal().array() += sigma_nu2 + rel * sigma_f2;
        llt.compute(k);
        if (llt.info() == Eigen::Success) {
            // LLT can "succeed" on barely indefinite matrices; check diag
            bool ok = true;
            for (int i = 0; i < n; ++i)
                if (!(llt.matrixLLT()(i, i) > 0.0)) ok = false;
            if (ok) return true;
        }
    }
    return false;
}

Normalization identity_norm(int dim) {
    Normalization n;
    n.input_shift = Eigen::VectorXd::Zero(dim);
    n.input_scale = Eigen::VectorXd::Ones(dim);
    return n;
}

void complete_norm(Normalization& norm, int dim) {
    if (norm.input_shift.size() == 0) norm.input_shift = Eigen::VectorXd::Zero(dim);
    if (norm.input_scale.size() == 0) norm.input_scale = Eigen::VectorXd::Ones(dim);
    if (norm.input_shift.size() != dim || norm.input_scale.size() != dim)
        throw std::invalid_argument("normalization dimension mismatch");
    if (norm.output_scale == 0.0 || (norm.input_scale.array() == 0.0).any())
        throw std::invalid_argument("normalization scales must be nonzero");
}

} // namespace

std::string to_string(KernelKind kind) {
    return kind == KernelKind::SquaredExponentialARD ? "se" : "matern52";
}

KernelKind kernel_kind_from_string(const std::string& name) {
    if (name == "se" || name == "squared-exponential")
        return KernelKind::SquaredExponentialARD;
    if (name == "matern52" || name == "m52") return KernelKind::Matern52ARD;
    throw config_error("unknown kernel kind: " + name);
}

void Hyperparameters::validate(int input_dim) const {
    if (!(signal_std > 0.0) || !(noise_std > 0.0))
        throw std::invalid_argument("signal/noise std must be positive");
    if (length_scales.size() != input_dim)
        throw std::invalid_argument("length-scale count does not match input dimension");
    if ((length_scales.array() <= 0.0).any())
        throw std::invalid_argument("length scales must be positive");
}

double kernel_eval(KernelKind kind, const Hyperparameters& psi,
                   const Eigen::VectorXd& u_i, const Eigen::VectorXd& u_j) {
    if (u_i.size() != psi.length_scales.size() || u_j.size() != u_i.size())
        throw std::invalid_argument("kernel input dimension mismatch");
    return kernel_from_r2(kind, psi.signal_std * psi.signal_std,
                          scaled_sq_dist(psi, u_i, u_j));
}

Eigen::MatrixXd gram(KernelKind kind, const Hyperparameters& psi,
                     const Eigen::MatrixXd& inputs) {
    const int n = static_cast<int>(inputs.rows());
    if (n < 1) throw std::invalid_argument("gram requires at least one input");
    const double sigma_f2 = psi.signal_std * psi.signal_std;
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i) {
        k(i, i) = sigma_f2;
        for (int j = i + 1; j < n; ++j) {
            const double v = kernel_from_r2(
                kind, sigma_f2, scaled_sq_dist(psi, inputs.row(i), inputs.row(j)));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    k.diagonal().array() += 1e-10 * sigma_f2;
    return k;
}

LmlResult log_marginal_likelihood(KernelKind kind, const Hyperparameters& psi,
                                  const Eigen::MatrixXd& inputs,
                                  const Eigen::VectorXd& targets) {
    const int n = static_cast<int>(inputs.rows());
    const int d = static_cast<int>(inputs.cols());
    const double sigma_f2 = psi.signal_std * psi.signal_std;
    const double sigma_nu2 = psi.noise_std * psi.noise_std;

    const Eigen::MatrixXd k_f = gram(kind, psi, inputs);
    Eigen::LLT<Eigen::MatrixXd> llt;
    if (!factorize(k_f, sigma_f2, sigma_nu2, llt))
        throw numerical_error("gram factorization failed after jitter escalation");

    const Eigen::VectorXd alpha = llt.solve(targets);

    LmlResult res;
    res.value = -0.5 * targets.dot(alpha) -
                llt.matrixLLT().diagonal().array().log().sum() -
                0.5 * n * kLog2Pi;

    // M = alpha alpha^T - K^-1; grad_theta = 0.5 tr(M dK/dtheta)
    const Eigen::MatrixXd k_inv =
        llt.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd m = alpha * alpha.transpose() - k_inv;

    res.grad_log.resize(2 + d);
    res.grad_log(0) = 0.5 * (m.array() * (2.0 * k_f).array()).sum();
    res.grad_log(1) = sigma_nu2 * m.trace();
    // pairwise dk/dr2 is shared by all length-scale components
    Eigen::MatrixXd mdk2(n, n);
    for (int i = 0; i < n; ++i) {
        mdk2(i, i) = 0.0;
        for (int j = i + 1; j < n; ++j) {
            const double r2 = scaled_sq_dist(psi, inputs.row(i), inputs.row(j));
            mdk2(i, j) = m(i, j) * kernel_dr2(kind, sigma_f2, r2);
        }
    }
    for (int dd = 0; dd < d; ++dd) {
        double acc = 0.0;
        const double lam2 = psi.length_scales(dd) * psi.length_scales(dd);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double tau = inputs(i, dd) - inputs(j, dd);
                // d r2 / d log lambda_d = -2 tau^2 / lambda^2
                acc += 2.0 * mdk2(i, j) * (-2.0 * tau * tau / lam2);
            }
        }
        res.grad_log(2 + dd) = 0.5 * acc;
    }
    return res;
}

GpModel GpModel::prior(KernelKind kind, Hyperparameters psi, int input_dim) {
    psi.validate(input_dim);
    GpModel m;
    m.kernel_ = kind;
    m.psi_ = std::move(psi);
    m.input_dim_ = input_dim;
    m.data_.inputs.resize(0, input_dim);
    m.data_.targets.resize(0);
    m.data_.norm = identity_norm(input_dim);
    m.rebuild();
    return m;
}

GpModel GpModel::train(TrainingSet data, KernelKind kind, Hyperparameters psi) {
    const int d = data.dim();
    psi.validate(d);
    complete_norm(data.norm, d);
    if (data.targets.size() != data.size())
        throw std::invalid_argument("input/target row counts disagree");
    GpModel m;
    m.kernel_ = kind;
    m.psi_ = std::move(psi);
    m.data_ = std::move(data);
    m.input_dim_ = d;
    m.rebuild();
    return m;
}

void GpModel::rebuild() {
    const int n = data_.size();
    const int d = input_dim_;
    const Normalization& norm = data_.norm;

    psi_n_ = psi_;
    psi_n_.signal_std = psi_.signal_std / std::abs(norm.output_scale);
    psi_n_.noise_std = psi_.noise_std / std::abs(norm.output_scale);
    psi_n_.length_scales =
        psi_.length_scales.array() / norm.input_scale.array();

    inputs_n_.resize(n, d);
    targets_n_.resize(n);
    for (int i = 0; i < n; ++i) {
        inputs_n_.row(i) = (data_.inputs.row(i).transpose() - norm.input_shift)
                               .cwiseQuotient(norm.input_scale);
        targets_n_(i) = (data_.targets(i) - norm.output_shift) / norm.output_scale;
    }

    if (n == 0) return;
    const double sf2 = psi_n_.signal_std * psi_n_.signal_std;
    const double sn2 = psi_n_.noise_std * psi_n_.noise_std;
    const Eigen::MatrixXd k_f = gram(kernel_, psi_n_, inputs_n_);
    if (!factorize(k_f, sf2, sn2, llt_))
        throw numerical_error("GP factorization failed after jitter escalation; n=" +
                              std::to_string(n));
    alpha_ = llt_.solve(targets_n_);
}

Prediction GpModel::predict(const Eigen::VectorXd& u) const {
    if (u.size() != input_dim_)
        throw std::invalid_argument("prediction input dimension mismatch");
    const Normalization& norm = data_.norm;
    const double sf2_n = psi_n_.signal_std * psi_n_.signal_std;
    const double sn2_n = psi_n_.noise_std * psi_n_.noise_std;
    const double out_sc2 = norm.output_scale * norm.output_scale;

    Prediction p;
    if (data_.size() == 0) {
        p.mean = norm.output_shift;
        p.latent_var = sf2_n * out_sc2;
        p.observation_var = p.latent_var + sn2_n * out_sc2;
        return p;
    }

    const Eigen::VectorXd un =
        (u - norm.input_shift).cwiseQuotient(norm.input_scale);
    const int n = data_.size();
    Eigen::VectorXd k_star(n);
    for (int i = 0; i < n; ++i)
        k_star(i) = kernel_from_r2(kernel_, sf2_n,
                                   scaled_sq_dist(psi_n_, un, inputs_n_.row(i)));

    const double mean_n = k_star.dot(alpha_);
    const Eigen::VectorXd v = llt_.solve(k_star);
    double var_n = sf2_n - k_star.dot(v);
    var_n = std::clamp(var_n, 0.0, sf2_n);

    p.mean = norm.output_shift + norm.output_scale * mean_n;
    p.latent_var = var_n * out_sc2;
    p.observation_var = p.latent_var + sn2_n * out_sc2;
    return p;
}

GpModel GpModel::with_observation(const Eigen::VectorXd& u, double y) const {
    if (u.size() != input_dim_)
        throw std::invalid_argument("observation dimension mismatch");
    GpModel m = *this;
    const int n = data_.size();
    m.data_.inputs.conservativeResize(n + 1, input_dim_);
    m.data_.inputs.row(n) = u.transpose();
    m.data_.targets.conservativeResize(n + 1);
    m.data_.targets(n) = y;
    m.rebuild();
    return m;
}

GpModel fit(TrainingSet data, KernelKind kind, const FitOptions& options) {
    const int n = data.size();
    const int d = data.dim();
    if (n == 0) throw std::invalid_argument("fit requires at least one observation");
    if (data.targets.size() != n)
        throw std::invalid_argument("input/target row counts disagree");
    if (data.norm.output_scale == 0.0)
        throw std::invalid_argument("output scale must be nonzero");

    // input normalization from the data, unless the caller pinned it
    if (data.norm.input_shift.size() == 0) {
        data.norm.input_shift = data.inputs.colwise().mean().transpose();
        data.norm.input_scale.resize(d);
        for (int dd = 0; dd < d; ++dd) {
            const double var =
                (data.inputs.col(dd).array() - data.norm.input_shift(dd))
                    .square()
                    .sum() /
                std::max(1, n - 1);
            const double sd = std::sqrt(var);
            data.norm.input_scale(dd) = sd > 1e-12 ? sd : 1.0;
        }
    }
    complete_norm(data.norm, d);

    Eigen::MatrixXd xn(n, d);
    Eigen::VectorXd yn(n);
    for (int i = 0; i < n; ++i) {
        xn.row(i) = (data.inputs.row(i).transpose() - data.norm.input_shift)
                        .cwiseQuotient(data.norm.input_scale);
        yn(i) = (data.targets(i) - data.norm.output_shift) / data.norm.output_scale;
    }
    const double sd_y = n > 1 ? std::sqrt((yn.array() - yn.mean()).square().sum() /
                                          (n - 1))
                              : std::abs(yn(0));
    const double y_scale = std::max(sd_y, 1e-3);

    // log-space box for theta = log [sigma_f, sigma_nu, lambda_1..d]
    Eigen::VectorXd lb(2 + d), ub(2 + d);
    const double loose = std::log(1e-8);
    if (options.bounds) {
        lb(0) = std::log(std::max(options.bounds->signal_floor_rel, 1e-12));
        lb(1) = std::log(std::max(options.bounds->noise_floor_rel, 1e-12));
        for (int dd = 0; dd < d; ++dd)
            lb(2 + dd) = std::log(std::max(
                options.bounds->length_floor / data.norm.input_scale(dd), 1e-12));
    } else {
        lb.setConstant(loose);
    }
    ub.setConstant(std::log(1e5));

    auto neg_lml = [&](const Eigen::VectorXd& theta) -> double {
        Hyperparameters psi;
        psi.signal_std = std::exp(theta(0));
        psi.noise_std = std::exp(theta(1));
        psi.length_scales = theta.tail(d).array().exp();
        try {
            return -log_marginal_likelihood(kind, psi, xn, yn).value;
        } catch (const numerical_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    auto neg_lml_grad = [&](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
        Hyperparameters psi;
        psi.signal_std = std::exp(theta(0));
        psi.noise_std = std::exp(theta(1));
        psi.length_scales = theta.tail(d).array().exp();
        try {
            return -log_marginal_likelihood(kind, psi, xn, yn).grad_log;
        } catch (const numerical_error&) {
            return Eigen::VectorXd::Zero(2 + d);
        }
    };

    auto clamp_box = [&](Eigen::VectorXd v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::clamp(v(i), lb(i), ub(i));
        return v;
    };

    Eigen::VectorXd best_theta;
    double best_value = std::numeric_limits<double>::infinity();

    if (n < 2) {
        // prior-dominated: heuristic hyperparameters, no search
        Eigen::VectorXd theta(2 + d);
        theta(0) = std::log(y_scale);
        theta(1) = std::log(0.1 * y_scale);
        theta.tail(d).setConstant(std::log(1.0));
        best_theta = clamp_box(theta);
    } else {
        StreamRng rng(options.seed, "gp-fit");
        for (int r = 0; r < std::max(1, options.restarts); ++r) {
            Eigen::VectorXd theta(2 + d);
            if (r == 0) {
                theta(0) = std::log(y_scale);
                theta(1) = std::log(0.1 * y_scale);
                theta.tail(d).setConstant(0.0);
            } else {
                theta(0) = std::log(y_scale) + rng.uniform(-2.0, 2.0);
                theta(1) = std::log(y_scale) + rng.uniform(-6.0, 0.0);
                for (int dd = 0; dd < d; ++dd)
                    theta(2 + dd) = rng.uniform(-1.5, 2.5);
            }
            BoxMinimizeOptions mo;
            mo.max_iterations = 120;
            mo.gradient_tolerance = 1e-5;
            mo.value_tolerance = 1e-11;
            const auto res =
                minimize_box(neg_lml, neg_lml_grad, clamp_box(theta), lb, ub, mo);
            if (std::isfinite(res.value) && res.value < best_value - 1e-12) {
                best_value = res.value;
                best_theta = res.x;
            }
        }
        if (!best_theta.size())
            throw numerical_error("all hyperparameter restarts failed to converge");
    }

    Hyperparameters psi;
    psi.signal_std = std::exp(best_theta(0)) * std::abs(data.norm.output_scale);
    psi.noise_std = std::exp(best_theta(1)) * std::abs(data.norm.output_scale);
    psi.length_scales =
        best_theta.tail(d).array().exp() * data.norm.input_scale.array();

    // snap values sitting at an active lower bound to the exact bound
    if (options.bounds) {
        const double snf =
            options.bounds->noise_floor_rel * std::abs(data.norm.output_scale);
        const double ssf =
            options.bounds->signal_floor_rel * std::abs(data.norm.output_scale);
        if (psi.noise_std < snf * (1.0 + 1e-9)) psi.noise_std = snf;
        if (psi.signal_std < ssf * (1.0 + 1e-9)) psi.signal_std = ssf;
        for (int dd = 0; dd < d; ++dd)
            if (psi.length_scales(dd) < options.bounds->length_floor * (1.0 + 1e-9))
                psi.length_scales(dd) = options.bounds->length_floor;
    }

    return GpModel::train(std::move(data), kind, std::move(psi));
}

nlohmann::json GpModel::to_json() const {
    nlohmann::json j;
    j["kernel"] = to_string(kernel_);
    j["input_dim"] = input_dim_;
    j["hyper"] = {{"signal_std", psi_.signal_std},
                  {"noise_std", psi_.noise_std},
                  {"length_scales",
                   std::vector<double>(psi_.length_scales.begin(),
                                       psi_.length_scales.end())}};
    j["norm"] = {{"input_shift",
                  std::vector<double>(data_.norm.input_shift.begin(),
                                      data_.norm.input_shift.end())},
                 {"input_scale",
                  std::vector<double>(data_.norm.input_scale.begin(),
                                      data_.norm.input_scale.end())},
                 {"output_shift", data_.norm.output_shift},
                 {"output_scale", data_.norm.output_scale}};
    auto rows = nlohmann::json::array();
    for (int i = 0; i < data_.size(); ++i) {
        auto row = nlohmann::json::array();
        for (int dd = 0; dd < input_dim_; ++dd) row.push_back(data_.inputs(i, dd));
        rows.push_back(row);
    }
    j["inputs"] = rows;
    j["targets"] =
        std::vector<double>(data_.targets.begin(), data_.targets.end());
    return j;
}

GpModel GpModel::from_json(const nlohmann::json& j) {
    const int d = j.at("input_dim").get<int>();
    Hyperparameters psi;
    psi.signal_std = j.at("hyper").at("signal_std").get<double>();
    psi.noise_std = j.at("hyper").at("noise_std").get<double>();
    const auto ls = j.at("hyper").at("length_scales").get<std::vector<double>>();
    psi.length_scales = Eigen::Map<const Eigen::VectorXd>(ls.data(), ls.size());

    TrainingSet data;
    const auto ish = j.at("norm").at("input_shift").get<std::vector<double>>();
    const auto isc = j.at("norm").at("input_scale").get<std::vector<double>>();
    data.norm.input_shift = Eigen::Map<const Eigen::VectorXd>(ish.data(), ish.size());
    data.norm.input_scale = Eigen::Map<const Eigen::VectorXd>(isc.data(), isc.size());
    data.norm.output_shift = j.at("norm").at("output_shift").get<double>();
    data.norm.output_scale = j.at("norm").at("output_scale").get<double>();

    const auto rows = j.at("inputs");
    const auto targets = j.at("targets").get<std::vector<double>>();
    data.inputs.resize(static_cast<Eigen::Index>(rows.size()), d);
    for (Eigen::Index i = 0; i < data.inputs.rows(); ++i)
        for (int dd = 0; dd < d; ++dd)
            data.inputs(i, dd) = rows[i][dd].get<double>();
    data.targets = Eigen::Map<const Eigen::VectorXd>(targets.data(), targets.size());

    if (data.size() == 0) {
        GpModel m = GpModel::prior(kernel_kind_from_string(j.at("kernel").get<std::string>()),
                                   std::move(psi), d);
        m.data_.norm = data.norm;
        m.rebuild();
        return m;
    }
    return GpModel::train(std::move(data),
                          kernel_kind_from_string(j.at("kernel").get<std::string>()),
                          std::move(psi));
}

} // namespace wakesteer
