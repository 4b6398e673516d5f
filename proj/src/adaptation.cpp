#include "wakesteer/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "wakesteer/errors.hpp"
#include "wakesteer/optim.hpp"
#include "wakesteer/rng.hpp"

namespace wakesteer {

std::string to_string(Scheme scheme) {
    return scheme == Scheme::MaGp ? "ma-gp" : "bo";
}

Scheme scheme_from_string(const std::string& name) {
    if (name == "ma-gp" || name == "magp") return Scheme::MaGp;
    if (name == "bo") return Scheme::Bo;
    throw config_error("unknown scheme: " + name);
}

Surrogate Surrogate::make(FarmLayout layout, Ambient ambient, WakeParams params) {
    Surrogate s;
    s.layout = std::move(layout);
    s.ambient = std::move(ambient);
    s.params = std::move(params);
    s.greedy_power =
        farm_power(s.layout, s.ambient, YawVector::Zero(s.layout.size()), s.params)
            .per_turbine;
    return s;
}

Eigen::VectorXd Surrogate::normalized_power(const YawVector& yaw) const {
    return farm_power(layout, ambient, yaw, params)
        .per_turbine.cwiseQuotient(greedy_power);
}

nlohmann::json CorrectedModel::to_json() const {
    nlohmann::json j;
    j["scheme"] = to_string(scheme);
    auto bank = nlohmann::json::array();
    for (const auto& gp : gp_bank) bank.push_back(gp.to_json());
    j["gp_bank"] = bank;
    return j;
}

CorrectedModel make_corrected_model(Scheme scheme, Surrogate surrogate,
                                    KernelKind kernel,
                                    const Hyperparameters& prior_psi) {
    CorrectedModel cm;
    cm.scheme = scheme;
    cm.surrogate = std::move(surrogate);
    const int n = cm.turbine_count();
    cm.gp_bank.reserve(n);
    for (int t = 0; t < n; ++t)
        cm.gp_bank.push_back(GpModel::prior(kernel, prior_psi, n));
    return cm;
}

ModelPrediction model_power(const CorrectedModel& cm, const YawVector& yaw) {
    const int n = cm.turbine_count();
    if (yaw.size() != n) throw std::invalid_argument("yaw dimension mismatch");
    if (static_cast<int>(cm.gp_bank.size()) != n)
        throw std::invalid_argument("GP bank size does not match turbine count");

    ModelPrediction out;
    out.means.resize(n);
    out.variances.resize(n);
    Eigen::VectorXd base = Eigen::VectorXd::Zero(n);
    if (cm.scheme == Scheme::MaGp) base = cm.surrogate.normalized_power(yaw);
    for (int t = 0; t < n; ++t) {
        const Prediction p = cm.gp_bank[t].predict(yaw);
        out.means(t) = base(t) + p.mean;
        out.variances(t) = p.latent_var;
    }
    return out;
}

void OptimizerOptions::validate() const {
    if (yaw_lower.size() != yaw_upper.size())
        throw std::invalid_argument("yaw bound lengths disagree");
    if ((yaw_lower.array() > yaw_upper.array()).any())
        throw std::invalid_argument("yaw lower bound exceeds upper bound");
    if (!(filter_gain >= 0.0 && filter_gain <= 1.0))
        throw std::invalid_argument("filter gain must lie in [0, 1]");
    if (variance_weight < 0.0)
        throw std::invalid_argument("variance weight must be >= 0");
}

double objective(const Eigen::VectorXd& means, const Eigen::VectorXd& variances,
                 const OptimizerOptions& opts) {
    if (means.size() != variances.size())
        throw std::invalid_argument("means/variances lengths disagree");
    double mu, var;
    if (opts.weights.size() == 0) {
        mu = means.sum();
        var = variances.sum();
    } else {
        if (opts.weights.size() != means.size())
            throw std::invalid_argument("objective weights length mismatch");
        mu = opts.weights.dot(means);
        var = opts.weights.array().square().matrix().dot(variances);
    }
    if (opts.form == ObjectiveForm::Squared)
        return mu * mu - opts.variance_weight * var;
    return mu - opts.variance_weight * std::sqrt(std::max(var, 0.0));
}

namespace {

// free-variable to per-turbine expansion for row-tied optimization
struct VariableMap {
    int free_dims = 0;
    bool tied = false;
    std::vector<int> rows;

    YawVector expand(const Eigen::VectorXd& v, int n) const {
        if (!tied) return v;
        YawVector g(n);
        for (int t = 0; t < n; ++t) g(t) = v(rows[t]);
        return g;
    }
};

} // namespace

YawOptimum optimize_yaw(const CorrectedModel& cm, const OptimizerOptions& opts,
                        std::uint64_t seed) {
    opts.validate();
    const int n = cm.turbine_count();
    if (opts.yaw_lower.size() != n)
        throw std::invalid_argument("yaw bounds length does not match turbine count");

    VariableMap map;
    const bool rows_available =
        !opts.rows.empty() && static_cast<int>(opts.rows.size()) == n;
    map.tied = opts.tie_rows && rows_available;
    map.rows = opts.rows;
    Eigen::VectorXd lo, hi;
    if (map.tied) {
        const int n_rows = 1 + *std::max_element(opts.rows.begin(), opts.rows.end());
        map.free_dims = n_rows;
        lo = Eigen::VectorXd::Constant(n_rows, -std::numeric_limits<double>::infinity());
        hi = Eigen::VectorXd::Constant(n_rows, std::numeric_limits<double>::infinity());
        for (int t = 0; t < n; ++t) {
            lo(opts.rows[t]) = std::max(lo(opts.rows[t]), opts.yaw_lower(t));
            hi(opts.rows[t]) = std::min(hi(opts.rows[t]), opts.yaw_upper(t));
        }
    } else {
        map.free_dims = n;
        lo = opts.yaw_lower;
        hi = opts.yaw_upper;
    }
    const int d = map.free_dims;

    auto score = [&](const Eigen::VectorXd& v) {
        const auto p = model_power(cm, map.expand(v, n));
        return objective(p.means, p.variances, opts);
    };
    auto neg_score = [&](const Eigen::VectorXd& v) { return -score(v); };

    YawOptimum best;
    best.objective = -std::numeric_limits<double>::infinity();
    // the surrogate can be exactly symmetric in yaw and a prior-only model is
    // flat; near-exact objective ties prefer the least-aggressive candidate
    // first (a flat landscape resolves to greedy) and then the positive
    // (clockwise) branch between mirror-image optima
    auto improves = [&](double s, const Eigen::VectorXd& yaw_full) {
        if (best.yaw.size() == 0) return std::isfinite(s);
        const double tol = 1e-9 * std::max(1.0, std::abs(best.objective));
        if (s > best.objective + tol) return true;
        if (s <= best.objective - tol || best.yaw.size() != yaw_full.size())
            return false;
        const double nn = yaw_full.squaredNorm(), nb = best.yaw.squaredNorm();
        if (nn < nb - 1e-9) return true;
        if (nn > nb + 1e-9) return false;
        return yaw_full.sum() > best.yaw.sum() + 1e-9;
    };
    auto consider = [&](const Eigen::VectorXd& v, bool converged) {
        const double s = score(v);
        const Eigen::VectorXd yaw_full = map.expand(v, n);
        if (improves(s, yaw_full)) {
            best.objective = s;
            best.yaw = yaw_full;
            best.converged = converged;
        }
    };

    // multistart local search: fixed anchors then Latin-hypercube fill
    std::vector<Eigen::VectorXd> starts;
    starts.push_back(hi); // first so exact ties resolve to positive yaw
    starts.push_back(lo);
    starts.push_back(0.5 * (lo + hi));
    {
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < d; ++i) zero(i) = std::clamp(zero(i), lo(i), hi(i));
        starts.push_back(zero);
    }
    StreamRng rng(seed, "optimizer");
    const int n_lhs = std::max(0, opts.multistart - static_cast<int>(starts.size()));
    if (n_lhs > 0) {
        // one stratified permutation per dimension
        std::vector<std::vector<int>> perm(d, std::vector<int>(n_lhs));
        for (int dd = 0; dd < d; ++dd) {
            for (int k = 0; k < n_lhs; ++k) perm[dd][k] = k;
            for (int k = n_lhs - 1; k > 0; --k) {
                const int j = static_cast<int>(rng.uniform() * (k + 1));
                std::swap(perm[dd][k], perm[dd][std::min(j, k)]);
            }
        }
        for (int k = 0; k < n_lhs; ++k) {
            Eigen::VectorXd v(d);
            for (int dd = 0; dd < d; ++dd) {
                const double u = (perm[dd][k] + rng.uniform()) / n_lhs;
                v(dd) = lo(dd) + u * (hi(dd) - lo(dd));
            }
            starts.push_back(v);
        }
    }

    BoxMinimizeOptions mo;
    mo.max_iterations = 60;
    mo.gradient_tolerance = 1e-4;
    mo.value_tolerance = 1e-9;
    mo.fd_step = 1e-4;
    for (const auto& s : starts) {
        const auto res = minimize_box(neg_score, nullptr, s, lo, hi, mo);
        consider(res.x, res.converged);
    }

    // coarse-grid fallback; full grid when cheap, row-tied grid otherwise
    auto grid_search = [&](const Eigen::VectorXd& glo, const Eigen::VectorXd& ghi,
                           double res_deg, const VariableMap& gmap) {
        const int gd = static_cast<int>(glo.size());
        std::vector<int> counts(gd);
        long total = 1;
        for (int dd = 0; dd < gd; ++dd) {
            counts[dd] =
                1 + static_cast<int>(std::floor((ghi(dd) - glo(dd)) / res_deg + 1e-9));
            total *= counts[dd];
            if (total > 2'000'000) return; // refuse pathological grids
        }
        std::vector<int> idx(gd, 0);
        Eigen::VectorXd v(gd);
        for (long c = 0; c < total; ++c) {
            // descend from the upper bound so ties resolve to positive yaw
            for (int dd = 0; dd < gd; ++dd)
                v(dd) = std::max(ghi(dd) - idx[dd] * res_deg, glo(dd));
            const Eigen::VectorXd yaw_full = gmap.expand(v, n);
            const auto p = model_power(cm, yaw_full);
            const double s = objective(p.means, p.variances, opts);
            if (improves(s, yaw_full)) {
                best.objective = s;
                best.yaw = yaw_full;
            }
            for (int dd = 0; dd < gd; ++dd) {
                if (++idx[dd] < counts[dd]) break;
                idx[dd] = 0;
            }
        }
    };

    if (d <= 3) {
        grid_search(lo, hi, std::min(opts.grid_resolution, 1.0), map);
    } else if (d <= 4) {
        grid_search(lo, hi, opts.grid_resolution, map);
    } else if (rows_available) {
        VariableMap rmap;
        rmap.tied = true;
        rmap.rows = opts.rows;
        const int n_rows = 1 + *std::max_element(opts.rows.begin(), opts.rows.end());
        rmap.free_dims = n_rows;
        Eigen::VectorXd rlo =
            Eigen::VectorXd::Constant(n_rows, -std::numeric_limits<double>::infinity());
        Eigen::VectorXd rhi =
            Eigen::VectorXd::Constant(n_rows, std::numeric_limits<double>::infinity());
        for (int t = 0; t < n; ++t) {
            rlo(opts.rows[t]) = std::max(rlo(opts.rows[t]), opts.yaw_lower(t));
            rhi(opts.rows[t]) = std::min(rhi(opts.rows[t]), opts.yaw_upper(t));
        }
        grid_search(rlo, rhi, opts.grid_resolution, rmap);
    }

    // refine the overall best with one more local run
    {
        Eigen::VectorXd v(d);
        if (map.tied) {
            for (int t = 0; t < n; ++t) v(map.rows[t]) = best.yaw(t);
        } else {
            v = best.yaw;
        }
        const auto res = minimize_box(neg_score, nullptr, v, lo, hi, mo);
        consider(res.x, res.converged || best.converged);
    }
    return best;
}

YawVector filter_step(const YawVector& current, const YawVector& optimum,
                      double kappa) {
    if (!(kappa >= 0.0 && kappa <= 1.0))
        throw std::invalid_argument("filter gain must lie in [0, 1]");
    if (current.size() != optimum.size())
        throw std::invalid_argument("yaw vector lengths disagree");
    return current + kappa * (optimum - current);
}

CorrectedModel assimilate(const CorrectedModel& cm, const YawVector& yaw_applied,
                          const Eigen::VectorXd& measured_norm, bool refit,
                          const FitOptions& fit_options) {
    const int n = cm.turbine_count();
    if (yaw_applied.size() != n || measured_norm.size() != n)
        throw std::invalid_argument("assimilate length mismatch");

    Eigen::VectorXd base = Eigen::VectorXd::Zero(n);
    if (cm.scheme == Scheme::MaGp)
        base = cm.surrogate.normalized_power(yaw_applied);

    CorrectedModel out = cm;
    for (int t = 0; t < n; ++t) {
        const double target = measured_norm(t) - base(t);
        if (refit) {
            const GpModel& gp = cm.gp_bank[t];
            TrainingSet data;
            const int m = gp.size();
            data.inputs.resize(m + 1, n);
            data.targets.resize(m + 1);
            data.inputs.topRows(m) = gp.data().inputs;
            data.targets.head(m) = gp.data().targets;
            data.inputs.row(m) = yaw_applied.transpose();
            data.targets(m) = target;
            out.gp_bank[t] = fit(std::move(data), gp.kernel(), fit_options);
        } else {
            out.gp_bank[t] = cm.gp_bank[t].with_observation(yaw_applied, target);
        }
    }
    return out;
}

AmbientEstimate estimate_ambient(const FarmLayout& layout, const WakeParams& params,
                                 const Ambient& nominal,
                                 const Eigen::VectorXd& greedy_watts,
                                 const AmbientSearchRange& range) {
    if (!(range.wind_speed_min < range.wind_speed_max) ||
        !(range.ti_min < range.ti_max))
        throw std::invalid_argument("empty ambient search range");
    if (greedy_watts.size() != layout.size())
        throw std::invalid_argument("greedy measurement length mismatch");

    const YawVector zero = YawVector::Zero(layout.size());
    auto residual = [&](double u, double ti) {
        Ambient a = nominal;
        a.wind_speed = u;
        a.turbulence_intensity = ti;
        const Eigen::VectorXd p = farm_power(layout, a, zero, params).per_turbine;
        return (p - greedy_watts).squaredNorm();
    };

    double ulo = range.wind_speed_min, uhi = range.wind_speed_max;
    double tlo = range.ti_min, thi = range.ti_max;
    AmbientEstimate best;
    best.residual = std::numeric_limits<double>::infinity();

    // successive grid refinement down to 0.01 m/s x 0.001 resolution
    constexpr int kPoints = 21;
    for (int round = 0; round < 12; ++round) {
        const double du = (uhi - ulo) / (kPoints - 1);
        const double dt = (thi - tlo) / (kPoints - 1);
        for (int i = 0; i < kPoints; ++i) {
            for (int j = 0; j < kPoints; ++j) {
                const double u = ulo + i * du;
                const double ti = std::clamp(tlo + j * dt, 1e-4, 0.499);
                const double r = residual(u, ti);
                if (r < best.residual) {
                    best.residual = r;
                    best.wind_speed = u;
                    best.turbulence_intensity = ti;
                }
            }
        }
        // small slack: the window arithmetic can land a hair above the target
        if (du <= 0.01 * (1.0 + 1e-9) && dt <= 0.001 * (1.0 + 1e-9)) break;
        const double wu = std::max(2.0 * du, 0.01 * (kPoints - 1) / 2.0);
        const double wt = std::max(2.0 * dt, 0.001 * (kPoints - 1) / 2.0);
        ulo = std::max(range.wind_speed_min, best.wind_speed - wu);
        uhi = std::min(range.wind_speed_max, best.wind_speed + wu);
        tlo = std::max(range.ti_min, best.turbulence_intensity - wt);
        thi = std::min(range.ti_max, best.turbulence_intensity + wt);
    }
    return best;
}

nlohmann::json IterationRecord::to_json() const {
    auto vec = [](const Eigen::VectorXd& v) {
        return std::vector<double>(v.begin(), v.end());
    };
    nlohmann::json j;
    j["iteration"] = iteration;
    j["yaw_applied"] = vec(yaw_applied);
    j["yaw_optimum"] = vec(yaw_optimum);
    j["measured_watts"] = vec(measured_watts);
    j["measured_norm"] = vec(measured_norm);
    j["predicted_norm"] = vec(predicted_norm);
    j["objective"] = objective_value;
    j["total_norm"] = total_norm;
    auto snaps = nlohmann::json::array();
    for (const auto& psi : hyper_snapshot)
        snaps.push_back({{"signal_std", psi.signal_std},
                         {"noise_std", psi.noise_std},
                         {"length_scales",
                          std::vector<double>(psi.length_scales.begin(),
                                              psi.length_scales.end())}});
    j["hyper_snapshot"] = snaps;
    return j;
}

IterationRecord IterationRecord::from_json(const nlohmann::json& j) {
    auto vec = [](const nlohmann::json& a) {
        const auto v = a.get<std::vector<double>>();
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()));
    };
    IterationRecord r;
    r.iteration = j.at("iteration").get<int>();
    r.yaw_applied = vec(j.at("yaw_applied"));
    r.yaw_optimum = vec(j.at("yaw_optimum"));
    r.measured_watts = vec(j.at("measured_watts"));
    r.measured_norm = vec(j.at("measured_norm"));
    r.predicted_norm = vec(j.at("predicted_norm"));
    r.objective_value = j.at("objective").get<double>();
    r.total_norm = j.at("total_norm").get<double>();
    for (const auto& s : j.at("hyper_snapshot")) {
        Hyperparameters psi;
        psi.signal_std = s.at("signal_std").get<double>();
        psi.noise_std = s.at("noise_std").get<double>();
        const auto ls = s.at("length_scales").get<std::vector<double>>();
        psi.length_scales = Eigen::Map<const Eigen::VectorXd>(ls.data(), ls.size());
        r.hyper_snapshot.push_back(std::move(psi));
    }
    return r;
}

} // namespace wakesteer
