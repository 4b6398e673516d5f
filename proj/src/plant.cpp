#include "wakesteer/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wakesteer {

void NoiseModel::validate() const {
    if (!(ar1_coefficient >= 0.0 && ar1_coefficient < 1.0))
        throw std::invalid_argument("AR(1) coefficient must lie in [0, 1)");
    if (std_fraction < 0.0) throw std::invalid_argument("noise std must be >= 0");
}

void PlantSpec::validate() const {
    truth_params.validate();
    truth_ambient.validate();
    noise.validate();
    if (!(transient_time_constant > 0.0))
        throw std::invalid_argument("transient time constant must be positive");
}

WakeParams default_truth_perturbation(const WakeParams& surrogate) {
    WakeParams p = surrogate;
    p.ka *= 1.25;
    p.kb *= 1.25;
    p.yaw_power_exponent = 2.2;
    p.deflection_gain = surrogate.deflection_gain * 1.15;
    // constant wake skew makes the plant asymmetric in the yaw sign, so the
    // plant optimum prefers one rotation direction
    p.skew_slope = 0.02;
    return p;
}

PlantSimulator::PlantSimulator(PlantSpec spec, FarmLayout layout,
                               double sample_period)
    : spec_(std::move(spec)), layout_(std::move(layout)),
      sample_period_(sample_period), rng_(spec_.seed, "plant") {
    spec_.validate();
    layout_.validate();
    const YawVector zero = YawVector::Zero(layout_.size());
    greedy_power_ = truth_power(zero);
    carry_power_ = greedy_power_;
    noise_state_ = Eigen::VectorXd::Zero(layout_.size());
}

Eigen::VectorXd PlantSimulator::truth_power(const YawVector& yaw) const {
    return farm_power(layout_, spec_.truth_ambient, yaw, spec_.truth_params)
        .per_turbine;
}

PowerSeries PlantSimulator::simulate_op(const YawVector& yaw, double duration) {
    if (!(duration > 0.0)) throw std::invalid_argument("OP duration must be positive");
    const int n = layout_.size();
    const int steps = static_cast<int>(std::llround(duration / sample_period_));
    const Eigen::VectorXd target = truth_power(yaw);
    const Eigen::VectorXd start = carry_power_;
    const double rho = spec_.noise.ar1_coefficient;

    PowerSeries series;
    series.sample_period = sample_period_;
    series.samples.resize(steps, n);
    series.op_boundaries.push_back(elapsed_);

    for (int k = 0; k < steps; ++k) {
        const double t = (k + 1) * sample_period_;
        const double decay = std::exp(-t / spec_.transient_time_constant);
        for (int i = 0; i < n; ++i) {
            const double sigma = spec_.noise.std_fraction * greedy_power_(i);
            const double innovation =
                sigma * std::sqrt(1.0 - rho * rho) * rng_.normal();
            noise_state_(i) = rho * noise_state_(i) + innovation;
            const double mean = target(i) + (start(i) - target(i)) * decay;
            series.samples(k, i) = std::max(0.0, mean + noise_state_(i));
        }
    }
    elapsed_ += steps * sample_period_;
    // carry the decayed mean, not the noisy sample, into the next OP
    const double final_decay =
        std::exp(-steps * sample_period_ / spec_.transient_time_constant);
    carry_power_ = target + (start - target) * final_decay;
    return series;
}

Eigen::VectorXd PlantSimulator::measure(const YawVector& yaw, double duration,
                                        double horizon, double cut) {
    return extract_measurement(simulate_op(yaw, duration), horizon, cut);
}

void PlantSimulator::restore(std::uint64_t rng_counter, Eigen::VectorXd carry_power,
                             Eigen::VectorXd noise_state, double elapsed) {
    rng_.set_counter(rng_counter);
    carry_power_ = std::move(carry_power);
    noise_state_ = std::move(noise_state);
    elapsed_ = elapsed;
}

PowerSeries moving_average(const PowerSeries& series, double horizon) {
    if (horizon > series.span() + 1e-9)
        throw std::invalid_argument("filter horizon exceeds series span");
    const double ratio = horizon / series.sample_period;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
        throw std::invalid_argument("horizon must be a multiple of the sample period");
    const int window = static_cast<int>(std::llround(ratio));
    if (window < 1) throw std::invalid_argument("horizon shorter than one sample");

    PowerSeries out = series;
    const int t = series.length();
    const int n = static_cast<int>(series.samples.cols());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < t; ++k) {
        acc += series.samples.row(k).transpose();
        if (k >= window) acc -= series.samples.row(k - window).transpose();
        out.samples.row(k) = acc.transpose() / std::min(k + 1, window);
    }
    return out;
}

Eigen::VectorXd extract_measurement(const PowerSeries& segment, double horizon,
                                    double cut) {
    if (segment.span() < cut + horizon - 1e-9)
        throw std::invalid_argument("OP segment shorter than transient cut + horizon");
    const PowerSeries filtered = moving_average(segment, horizon);
    return filtered.samples.row(filtered.length() - 1).transpose();
}

std::vector<YawVector> initial_yaw_set(const Eigen::VectorXd& lower,
                                       const Eigen::VectorXd& upper, int n_ops,
                                       double duplicate_fraction,
                                       std::uint64_t seed) {
    if (n_ops < 1) throw std::invalid_argument("need at least one operating point");
    if (!(duplicate_fraction >= 0.0 && duplicate_fraction < 1.0))
        throw std::invalid_argument("duplicate fraction must lie in [0, 1)");
    if ((lower.array() > upper.array()).any())
        throw std::invalid_argument("infeasible yaw bounds");

    const int d = static_cast<int>(lower.size());
    const int n_distinct =
        std::max(1, static_cast<int>(std::lround(n_ops * (1.0 - duplicate_fraction))));

    StreamRng rng(seed, "sampler");
    std::vector<YawVector> yaws;
    yaws.reserve(n_ops);
    for (int i = 0; i < n_distinct && static_cast<int>(yaws.size()) < n_ops; ++i) {
        YawVector g(d);
        for (int dd = 0; dd < d; ++dd) g(dd) = rng.uniform(lower(dd), upper(dd));
        yaws.push_back(g);
    }
    while (static_cast<int>(yaws.size()) < n_ops) {
        const int pick = static_cast<int>(rng.uniform() * n_distinct);
        yaws.push_back(yaws[std::min(pick, n_distinct - 1)]);
    }
    return yaws;
}

std::vector<OperatingPoint> make_initial_dataset(
    PlantSimulator& plant, const Eigen::VectorXd& lower,
    const Eigen::VectorXd& upper, int n_ops, double duplicate_fraction,
    std::uint64_t seed, double op_duration, double horizon, double cut,
    const Eigen::VectorXd& greedy_power_norm_basis) {
    const auto yaws =
        initial_yaw_set(lower, upper, n_ops, duplicate_fraction, seed);
    std::vector<OperatingPoint> ops;
    ops.reserve(yaws.size());
    for (std::size_t k = 0; k < yaws.size(); ++k) {
        OperatingPoint op;
        op.index = static_cast<int>(k);
        op.yaw = yaws[k];
        op.t_start = plant.elapsed();
        op.power_watts = plant.measure(yaws[k], op_duration, horizon, cut);
        op.t_end = plant.elapsed();
        op.power_norm =
            op.power_watts.cwiseQuotient(greedy_power_norm_basis);
        ops.push_back(std::move(op));
    }
    return ops;
}

} // namespace wakesteer
