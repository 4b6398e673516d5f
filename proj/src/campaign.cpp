#include "wakesteer/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "wakesteer/errors.hpp"
#include "wakesteer/rng.hpp"

namespace wakesteer {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                          std::uint64_t index) {
    StreamRng rng(seed, label);
    rng.set_counter(index);
    return rng.next_u64();
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.begin(), v.end());
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write file: " + path.string());
    out << content;
}

ObjectiveForm objective_form_from_string(const std::string& name) {
    if (name == "squared") return ObjectiveForm::Squared;
    if (name == "linear") return ObjectiveForm::Linear;
    throw config_error("unknown objective form: " + name);
}

void wake_params_to_map(ConfigMap& m, const std::string& sec, const WakeParams& p) {
    m.set(sec + ".ka", p.ka);
    m.set(sec + ".kb", p.kb);
    m.set(sec + ".alpha", p.alpha);
    m.set(sec + ".beta", p.beta);
    m.set(sec + ".ti_constant", p.ti_constant);
    m.set(sec + ".ti_ai_exponent", p.ti_ai_exponent);
    m.set(sec + ".ti_ambient_exponent", p.ti_ambient_exponent);
    m.set(sec + ".ti_downstream_exponent", p.ti_downstream_exponent);
    m.set(sec + ".yaw_power_exponent", p.yaw_power_exponent);
    m.set(sec + ".deflection_gain", p.deflection_gain);
    m.set(sec + ".skew_offset_m", p.skew_offset);
    m.set(sec + ".skew_slope", p.skew_slope);
    m.set(sec + ".superposition",
          p.superposition == Superposition::RootSumSquares ? "rss" : "linear");
    m.set(sec + ".rotor_averaging", p.rotor_averaging);
}

WakeParams wake_params_from_map(const ConfigMap& m, const std::string& sec,
                                const WakeParams& defaults) {
    WakeParams p = defaults;
    p.ka = m.get_double(sec + ".ka", p.ka);
    p.kb = m.get_double(sec + ".kb", p.kb);
    p.alpha = m.get_double(sec + ".alpha", p.alpha);
    p.beta = m.get_double(sec + ".beta", p.beta);
    p.ti_constant = m.get_double(sec + ".ti_constant", p.ti_constant);
    p.ti_ai_exponent = m.get_double(sec + ".ti_ai_exponent", p.ti_ai_exponent);
    p.ti_ambient_exponent =
        m.get_double(sec + ".ti_ambient_exponent", p.ti_ambient_exponent);
    p.ti_downstream_exponent =
        m.get_double(sec + ".ti_downstream_exponent", p.ti_downstream_exponent);
    p.yaw_power_exponent = m.get_double(sec + ".yaw_power_exponent", p.yaw_power_exponent);
    p.deflection_gain = m.get_double(sec + ".deflection_gain", p.deflection_gain);
    p.skew_offset = m.get_double(sec + ".skew_offset_m", p.skew_offset);
    p.skew_slope = m.get_double(sec + ".skew_slope", p.skew_slope);
    const std::string sup = m.get_string(sec + ".superposition", "rss");
    if (sup == "rss") p.superposition = Superposition::RootSumSquares;
    else if (sup == "linear") p.superposition = Superposition::Linear;
    else throw config_error("unknown superposition rule: " + sup);
    p.rotor_averaging = m.get_bool(sec + ".rotor_averaging", p.rotor_averaging);
    return p;
}

} // namespace

CampaignConfig CampaignConfig::defaults() {
    CampaignConfig c;
    c.plant_params = default_truth_perturbation(c.surrogate_params);
    c.plant_ambient = c.ambient;
    return c;
}

FarmLayout CampaignConfig::make_layout() const {
    return make_grid_layout(layout_rows, layout_cols, spacing_downstream_d,
                            spacing_cross_d, turbine, name);
}

PlantSpec CampaignConfig::make_plant_spec() const {
    PlantSpec spec;
    spec.truth_params = plant_params;
    spec.truth_ambient = plant_ambient;
    spec.noise = plant_noise;
    spec.transient_time_constant = plant_transient_tau_s;
    spec.seed = seed;
    return spec;
}

Eigen::VectorXd CampaignConfig::expand_row_bounds(
    const std::vector<double>& per_row) const {
    const FarmLayout layout = make_layout();
    const int n = layout.size();
    if (static_cast<int>(per_row.size()) == n) return to_eigen(per_row);
    const std::vector<int> rows = row_assignment(layout, ambient);
    const int n_rows = 1 + *std::max_element(rows.begin(), rows.end());
    if (static_cast<int>(per_row.size()) != n_rows)
        throw config_error("yaw bound list must have one entry per row or per turbine");
    Eigen::VectorXd out(n);
    for (int t = 0; t < n; ++t) out(t) = per_row[rows[t]];
    return out;
}

OptimizerOptions CampaignConfig::make_optimizer_options() const {
    OptimizerOptions o;
    o.yaw_lower = expand_row_bounds(optimizer.yaw_lower_deg);
    o.yaw_upper = expand_row_bounds(optimizer.yaw_upper_deg);
    o.variance_weight = optimizer.variance_weight;
    o.form = objective_form_from_string(optimizer.objective_form);
    o.filter_gain = optimizer.filter_gain;
    o.multistart = optimizer.multistart;
    o.grid_resolution = optimizer.grid_resolution_deg;
    o.tie_rows = optimizer.tie_rows;
    o.rows = row_assignment(make_layout(), ambient);
    o.validate();
    return o;
}

FitOptions CampaignConfig::make_fit_options(std::uint64_t fit_seed) const {
    FitOptions f;
    if (gp.bounds_enabled) {
        HyperBounds b;
        b.noise_floor_rel = gp.noise_floor_rel;
        b.length_floor = gp.length_floor_deg;
        f.bounds = b;
    } else {
        f.bounds.reset();
    }
    f.restarts = gp.restarts;
    f.seed = fit_seed;
    return f;
}

Hyperparameters CampaignConfig::make_prior_psi() const {
    Hyperparameters psi;
    psi.signal_std = gp.prior_signal_std;
    psi.noise_std = gp.prior_noise_std;
    psi.length_scales = Eigen::VectorXd::Constant(layout_rows * layout_cols,
                                                  gp.prior_length_scale_deg);
    return psi;
}

ConfigMap CampaignConfig::to_map() const {
    ConfigMap m;
    m.set("campaign.name", name);
    m.set("campaign.seed", static_cast<long long>(seed));
    m.set("campaign.iterations", static_cast<long long>(iterations));
    m.set("campaign.scheme", scheme);
    m.set("campaign.output_dir", output_dir);

    m.set("layout.rows", static_cast<long long>(layout_rows));
    m.set("layout.cols", static_cast<long long>(layout_cols));
    m.set("layout.spacing_downstream_d", spacing_downstream_d);
    m.set("layout.spacing_cross_d", spacing_cross_d);
    m.set("layout.rotor_diameter_m", turbine.rotor_diameter);
    m.set("layout.hub_height_m", turbine.hub_height);
    m.set("layout.cp_max", turbine.cp_max);
    m.set("layout.rated_power_w", turbine.rated_power);
    if (!turbine.ct_curve.empty()) {
        std::vector<double> speeds, values;
        for (const auto& [u, ct] : turbine.ct_curve) {
            speeds.push_back(u);
            values.push_back(ct);
        }
        m.set("layout.ct_curve_speeds_ms", speeds);
        m.set("layout.ct_curve_values", values);
    }

    m.set("ambient.wind_speed_ms", ambient.wind_speed);
    m.set("ambient.turbulence_intensity", ambient.turbulence_intensity);
    m.set("ambient.wind_direction_rad", ambient.wind_direction);
    m.set("ambient.air_density_kgm3", ambient.air_density);

    wake_params_to_map(m, "surrogate", surrogate_params);
    wake_params_to_map(m, "plant", plant_params);
    m.set("plant.wind_speed_ms", plant_ambient.wind_speed);
    m.set("plant.turbulence_intensity", plant_ambient.turbulence_intensity);
    m.set("plant.wind_direction_rad", plant_ambient.wind_direction);
    m.set("plant.air_density_kgm3", plant_ambient.air_density);
    m.set("plant.noise_ar1_coefficient", plant_noise.ar1_coefficient);
    m.set("plant.noise_std_fraction", plant_noise.std_fraction);
    m.set("plant.transient_tau_s", plant_transient_tau_s);

    m.set("optimizer.yaw_lower_deg", optimizer.yaw_lower_deg);
    m.set("optimizer.yaw_upper_deg", optimizer.yaw_upper_deg);
    m.set("optimizer.variance_weight", optimizer.variance_weight);
    m.set("optimizer.objective_form", optimizer.objective_form);
    m.set("optimizer.filter_gain", optimizer.filter_gain);
    m.set("optimizer.multistart", static_cast<long long>(optimizer.multistart));
    m.set("optimizer.grid_resolution_deg", optimizer.grid_resolution_deg);
    m.set("optimizer.tie_rows", optimizer.tie_rows);

    m.set("gp.kernel", gp.kernel);
    m.set("gp.restarts", static_cast<long long>(gp.restarts));
    m.set("gp.bounds_enabled", gp.bounds_enabled);
    m.set("gp.noise_floor_rel", gp.noise_floor_rel);
    m.set("gp.length_floor_deg", gp.length_floor_deg);
    m.set("gp.refit_every", static_cast<long long>(gp.refit_every));
    m.set("gp.prior_signal_std", gp.prior_signal_std);
    m.set("gp.prior_noise_std", gp.prior_noise_std);
    m.set("gp.prior_length_scale_deg", gp.prior_length_scale_deg);

    m.set("dataset.n_ops", static_cast<long long>(dataset.n_ops));
    m.set("dataset.duplicate_fraction", dataset.duplicate_fraction);
    m.set("dataset.op_duration_s", dataset.op_duration_s);
    m.set("dataset.sample_period_s", dataset.sample_period_s);
    m.set("dataset.filter_horizon_s", dataset.filter_horizon_s);
    m.set("dataset.transient_cut_s", dataset.transient_cut_s);

    m.set("ambient_estimation.enabled", estimate_ambient_enabled);
    m.set("ambient_estimation.wind_speed_min_ms", ambient_range.wind_speed_min);
    m.set("ambient_estimation.wind_speed_max_ms", ambient_range.wind_speed_max);
    m.set("ambient_estimation.ti_min", ambient_range.ti_min);
    m.set("ambient_estimation.ti_max", ambient_range.ti_max);

    m.set("oracle.in_summary", oracle_in_summary);
    m.set("oracle.resolution_deg", oracle_resolution_deg);
    return m;
}

CampaignConfig CampaignConfig::from_map(const ConfigMap& m) {
    CampaignConfig c = CampaignConfig::defaults();
    c.name = m.get_string("campaign.name", c.name);
    c.seed = static_cast<std::uint64_t>(m.get_int("campaign.seed", c.seed));
    c.iterations = static_cast<int>(m.get_int("campaign.iterations", c.iterations));
    c.scheme = m.get_string("campaign.scheme", c.scheme);
    scheme_from_string(c.scheme); // validate
    c.output_dir = m.get_string("campaign.output_dir", c.output_dir);
    if (c.iterations < 0) throw config_error("iteration count must be >= 0");

    c.layout_rows = static_cast<int>(m.get_int("layout.rows", c.layout_rows));
    c.layout_cols = static_cast<int>(m.get_int("layout.cols", c.layout_cols));
    c.spacing_downstream_d =
        m.get_double("layout.spacing_downstream_d", c.spacing_downstream_d);
    c.spacing_cross_d = m.get_double("layout.spacing_cross_d", c.spacing_cross_d);
    c.turbine.rotor_diameter =
        m.get_double("layout.rotor_diameter_m", c.turbine.rotor_diameter);
    c.turbine.hub_height = m.get_double("layout.hub_height_m", c.turbine.hub_height);
    c.turbine.cp_max = m.get_double("layout.cp_max", c.turbine.cp_max);
    c.turbine.rated_power = m.get_double("layout.rated_power_w", c.turbine.rated_power);
    if (m.has("layout.ct_curve_speeds_ms")) {
        const auto speeds = m.get_doubles("layout.ct_curve_speeds_ms");
        const auto values = m.get_doubles("layout.ct_curve_values");
        if (speeds.size() != values.size())
            throw config_error("ct curve speed/value lengths disagree");
        c.turbine.ct_curve.clear();
        for (std::size_t i = 0; i < speeds.size(); ++i)
            c.turbine.ct_curve.emplace_back(speeds[i], values[i]);
    }

    c.ambient.wind_speed = m.get_double("ambient.wind_speed_ms", c.ambient.wind_speed);
    c.ambient.turbulence_intensity =
        m.get_double("ambient.turbulence_intensity", c.ambient.turbulence_intensity);
    c.ambient.wind_direction =
        m.get_double("ambient.wind_direction_rad", c.ambient.wind_direction);
    c.ambient.air_density = m.get_double("ambient.air_density_kgm3", c.ambient.air_density);

    c.surrogate_params = wake_params_from_map(m, "surrogate", c.surrogate_params);
    // re-derive the plant defaults from the configured surrogate before
    // applying explicit plant overrides
    c.plant_params =
        wake_params_from_map(m, "plant", default_truth_perturbation(c.surrogate_params));
    c.plant_ambient = c.ambient;
    c.plant_ambient.wind_speed = m.get_double("plant.wind_speed_ms", c.plant_ambient.wind_speed);
    c.plant_ambient.turbulence_intensity =
        m.get_double("plant.turbulence_intensity", c.plant_ambient.turbulence_intensity);
    c.plant_ambient.wind_direction =
        m.get_double("plant.wind_direction_rad", c.plant_ambient.wind_direction);
    c.plant_ambient.air_density =
        m.get_double("plant.air_density_kgm3", c.plant_ambient.air_density);
    c.plant_noise.ar1_coefficient =
        m.get_double("plant.noise_ar1_coefficient", c.plant_noise.ar1_coefficient);
    c.plant_noise.std_fraction =
        m.get_double("plant.noise_std_fraction", c.plant_noise.std_fraction);
    c.plant_transient_tau_s = m.get_double("plant.transient_tau_s", c.plant_transient_tau_s);

    c.optimizer.yaw_lower_deg =
        m.get_doubles("optimizer.yaw_lower_deg", c.optimizer.yaw_lower_deg);
    c.optimizer.yaw_upper_deg =
        m.get_doubles("optimizer.yaw_upper_deg", c.optimizer.yaw_upper_deg);
    c.optimizer.variance_weight =
        m.get_double("optimizer.variance_weight", c.optimizer.variance_weight);
    c.optimizer.objective_form =
        m.get_string("optimizer.objective_form", c.optimizer.objective_form);
    objective_form_from_string(c.optimizer.objective_form); // validate
    c.optimizer.filter_gain = m.get_double("optimizer.filter_gain", c.optimizer.filter_gain);
    c.optimizer.multistart =
        static_cast<int>(m.get_int("optimizer.multistart", c.optimizer.multistart));
    c.optimizer.grid_resolution_deg =
        m.get_double("optimizer.grid_resolution_deg", c.optimizer.grid_resolution_deg);
    c.optimizer.tie_rows = m.get_bool("optimizer.tie_rows", c.optimizer.tie_rows);

    c.gp.kernel = m.get_string("gp.kernel", c.gp.kernel);
    kernel_kind_from_string(c.gp.kernel); // validate
    c.gp.restarts = static_cast<int>(m.get_int("gp.restarts", c.gp.restarts));
    c.gp.bounds_enabled = m.get_bool("gp.bounds_enabled", c.gp.bounds_enabled);
    c.gp.noise_floor_rel = m.get_double("gp.noise_floor_rel", c.gp.noise_floor_rel);
    c.gp.length_floor_deg = m.get_double("gp.length_floor_deg", c.gp.length_floor_deg);
    c.gp.refit_every = static_cast<int>(m.get_int("gp.refit_every", c.gp.refit_every));
    c.gp.prior_signal_std = m.get_double("gp.prior_signal_std", c.gp.prior_signal_std);
    c.gp.prior_noise_std = m.get_double("gp.prior_noise_std", c.gp.prior_noise_std);
    c.gp.prior_length_scale_deg =
        m.get_double("gp.prior_length_scale_deg", c.gp.prior_length_scale_deg);

    c.dataset.n_ops = static_cast<int>(m.get_int("dataset.n_ops", c.dataset.n_ops));
    c.dataset.duplicate_fraction =
        m.get_double("dataset.duplicate_fraction", c.dataset.duplicate_fraction);
    c.dataset.op_duration_s = m.get_double("dataset.op_duration_s", c.dataset.op_duration_s);
    c.dataset.sample_period_s =
        m.get_double("dataset.sample_period_s", c.dataset.sample_period_s);
    c.dataset.filter_horizon_s =
        m.get_double("dataset.filter_horizon_s", c.dataset.filter_horizon_s);
    c.dataset.transient_cut_s =
        m.get_double("dataset.transient_cut_s", c.dataset.transient_cut_s);
    if (c.dataset.op_duration_s <
        c.dataset.filter_horizon_s + c.dataset.transient_cut_s)
        throw config_error("OP duration must cover transient cut + filter horizon");

    c.estimate_ambient_enabled =
        m.get_bool("ambient_estimation.enabled", c.estimate_ambient_enabled);
    c.ambient_range.wind_speed_min =
        m.get_double("ambient_estimation.wind_speed_min_ms", c.ambient_range.wind_speed_min);
    c.ambient_range.wind_speed_max =
        m.get_double("ambient_estimation.wind_speed_max_ms", c.ambient_range.wind_speed_max);
    c.ambient_range.ti_min = m.get_double("ambient_estimation.ti_min", c.ambient_range.ti_min);
    c.ambient_range.ti_max = m.get_double("ambient_estimation.ti_max", c.ambient_range.ti_max);

    c.oracle_in_summary = m.get_bool("oracle.in_summary", c.oracle_in_summary);
    c.oracle_resolution_deg = m.get_double("oracle.resolution_deg", c.oracle_resolution_deg);
    return c;
}

std::string config_hash(const CampaignConfig& config) {
    const std::string text = config.serialize();
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char ch : text) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001B3ull;
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

namespace {

CorrectedModel refit_bank(const CorrectedModel& cm, const FitOptions& options) {
    CorrectedModel out = cm;
    for (std::size_t t = 0; t < cm.gp_bank.size(); ++t) {
        const GpModel& gp = cm.gp_bank[t];
        if (gp.size() == 0) continue; // keep the prior
        TrainingSet data;
        data.inputs = gp.data().inputs;
        data.targets = gp.data().targets;
        // leave input normalization empty so the fit re-derives it
        out.gp_bank[t] = fit(std::move(data), gp.kernel(), options);
    }
    return out;
}

void capture_plant(CampaignState& state, const PlantSimulator& plant) {
    state.plant_rng_counter = plant.rng_counter();
    state.plant_carry_power = plant.carry_power();
    state.plant_noise_state = plant.noise_state();
    state.plant_elapsed = plant.elapsed();
}

} // namespace

CampaignState initialize_campaign(const CampaignConfig& config,
                                  PlantSimulator& plant) {
    CampaignState state;
    state.config = config;
    state.config_hash = config_hash(config);

    const FarmLayout layout = config.make_layout();
    const int n = layout.size();
    const YawVector zero = YawVector::Zero(n);

    state.greedy_truth_power = plant.truth_power(zero);

    // greedy calibration OP
    const Eigen::VectorXd greedy_meas =
        plant.measure(zero, config.dataset.op_duration_s,
                      config.dataset.filter_horizon_s, config.dataset.transient_cut_s);

    Ambient surrogate_ambient = config.ambient;
    if (config.estimate_ambient_enabled) {
        state.ambient_estimate = estimate_ambient(layout, config.surrogate_params,
                                                  config.ambient, greedy_meas,
                                                  config.ambient_range);
        surrogate_ambient.wind_speed = state.ambient_estimate.wind_speed;
        surrogate_ambient.turbulence_intensity =
            state.ambient_estimate.turbulence_intensity;
    } else {
        state.ambient_estimate.wind_speed = config.ambient.wind_speed;
        state.ambient_estimate.turbulence_intensity =
            config.ambient.turbulence_intensity;
        state.ambient_estimate.residual = 0.0;
    }

    Surrogate surrogate =
        Surrogate::make(layout, surrogate_ambient, config.surrogate_params);

    const Eigen::VectorXd lower = config.expand_row_bounds(config.optimizer.yaw_lower_deg);
    const Eigen::VectorXd upper = config.expand_row_bounds(config.optimizer.yaw_upper_deg);
    if (config.dataset.n_ops > 0)
        state.history = make_initial_dataset(
            plant, lower, upper, config.dataset.n_ops,
            config.dataset.duplicate_fraction, config.seed,
            config.dataset.op_duration_s, config.dataset.filter_horizon_s,
            config.dataset.transient_cut_s, state.greedy_truth_power);

    state.model = make_corrected_model(scheme_from_string(config.scheme),
                                       std::move(surrogate),
                                       kernel_kind_from_string(config.gp.kernel),
                                       config.make_prior_psi());
    for (const auto& op : state.history)
        state.model = assimilate(state.model, op.yaw, op.power_norm, false);
    state.model =
        refit_bank(state.model, config.make_fit_options(
                                    derive_seed(config.seed, "fit-seed", 0)));

    state.current_yaw = zero;
    state.completed_iterations = 0;
    capture_plant(state, plant);
    return state;
}

IterationRecord run_iteration(CampaignState& state, PlantSimulator& plant) {
    const CampaignConfig& config = state.config;
    const int k = state.completed_iterations + 1;

    OptimizerOptions opts = config.make_optimizer_options();
    // make the objective proportional to predicted farm watts
    opts.weights = state.model.surrogate.greedy_power /
                   state.model.surrogate.greedy_power.mean();
    const YawOptimum optimum =
        optimize_yaw(state.model, opts,
                     derive_seed(config.seed, "optimizer-seed", k));

    YawVector applied =
        filter_step(state.current_yaw, optimum.yaw, opts.filter_gain);
    applied = applied.cwiseMax(opts.yaw_lower).cwiseMin(opts.yaw_upper);

    const Eigen::VectorXd measured_watts =
        plant.measure(applied, config.dataset.op_duration_s,
                      config.dataset.filter_horizon_s, config.dataset.transient_cut_s);
    const Eigen::VectorXd measured_norm =
        measured_watts.cwiseQuotient(state.greedy_truth_power);

    const ModelPrediction predicted = model_power(state.model, applied);

    const bool refit =
        config.gp.refit_every > 0 && (k % config.gp.refit_every == 0);
    const CorrectedModel updated =
        assimilate(state.model, applied, measured_norm, refit,
                   config.make_fit_options(derive_seed(config.seed, "fit-seed", k)));

    IterationRecord record;
    record.iteration = k;
    record.yaw_applied = applied;
    record.yaw_optimum = optimum.yaw;
    record.measured_watts = measured_watts;
    record.measured_norm = measured_norm;
    record.predicted_norm = predicted.means;
    record.objective_value = optimum.objective;
    record.total_norm = measured_watts.sum() / state.greedy_truth_power.sum();
    for (const auto& gp : updated.gp_bank) record.hyper_snapshot.push_back(gp.hyper());

    // commit
    state.model = updated;
    OperatingPoint op;
    op.index = static_cast<int>(state.history.size());
    op.yaw = applied;
    op.power_watts = measured_watts;
    op.power_norm = measured_norm;
    op.t_end = plant.elapsed();
    op.t_start = op.t_end - config.dataset.op_duration_s;
    state.history.push_back(std::move(op));
    state.records.push_back(record);
    state.current_yaw = applied;
    state.completed_iterations = k;
    capture_plant(state, plant);
    return record;
}

nlohmann::json CampaignState::to_json() const {
    nlohmann::json j;
    j["config"] = config.serialize();
    j["config_hash"] = config_hash;
    j["model"] = model.to_json();
    auto hist = nlohmann::json::array();
    for (const auto& op : history) {
        hist.push_back({{"index", op.index},
                        {"yaw", to_std(op.yaw)},
                        {"power_watts", to_std(op.power_watts)},
                        {"power_norm", to_std(op.power_norm)},
                        {"t_start", op.t_start},
                        {"t_end", op.t_end}});
    }
    j["history"] = hist;
    auto recs = nlohmann::json::array();
    for (const auto& r : records) recs.push_back(r.to_json());
    j["records"] = recs;
    j["current_yaw"] = to_std(current_yaw);
    j["greedy_truth_power"] = to_std(greedy_truth_power);
    j["ambient_estimate"] = {{"wind_speed", ambient_estimate.wind_speed},
                             {"turbulence_intensity",
                              ambient_estimate.turbulence_intensity},
                             {"residual", ambient_estimate.residual}};
    j["completed_iterations"] = completed_iterations;
    j["plant"] = {{"rng_counter", plant_rng_counter},
                  {"carry_power", to_std(plant_carry_power)},
                  {"noise_state", to_std(plant_noise_state)},
                  {"elapsed", plant_elapsed}};
    return j;
}

CampaignState CampaignState::from_json(const nlohmann::json& j) {
    CampaignState s;
    s.config = CampaignConfig::parse(j.at("config").get<std::string>());
    s.config_hash = j.at("config_hash").get<std::string>();

    for (const auto& h : j.at("history")) {
        OperatingPoint op;
        op.index = h.at("index").get<int>();
        op.yaw = to_eigen(h.at("yaw").get<std::vector<double>>());
        op.power_watts = to_eigen(h.at("power_watts").get<std::vector<double>>());
        op.power_norm = to_eigen(h.at("power_norm").get<std::vector<double>>());
        op.t_start = h.at("t_start").get<double>();
        op.t_end = h.at("t_end").get<double>();
        s.history.push_back(std::move(op));
    }
    for (const auto& r : j.at("records"))
        s.records.push_back(IterationRecord::from_json(r));
    s.current_yaw = to_eigen(j.at("current_yaw").get<std::vector<double>>());
    s.greedy_truth_power =
        to_eigen(j.at("greedy_truth_power").get<std::vector<double>>());
    s.ambient_estimate.wind_speed =
        j.at("ambient_estimate").at("wind_speed").get<double>();
    s.ambient_estimate.turbulence_intensity =
        j.at("ambient_estimate").at("turbulence_intensity").get<double>();
    s.ambient_estimate.residual = j.at("ambient_estimate").at("residual").get<double>();
    s.completed_iterations = j.at("completed_iterations").get<int>();
    s.plant_rng_counter = j.at("plant").at("rng_counter").get<std::uint64_t>();
    s.plant_carry_power = to_eigen(j.at("plant").at("carry_power").get<std::vector<double>>());
    s.plant_noise_state = to_eigen(j.at("plant").at("noise_state").get<std::vector<double>>());
    s.plant_elapsed = j.at("plant").at("elapsed").get<double>();

    // rebuild the corrected model around the stored surrogate ambient
    Ambient surrogate_ambient = s.config.ambient;
    surrogate_ambient.wind_speed = s.ambient_estimate.wind_speed;
    surrogate_ambient.turbulence_intensity = s.ambient_estimate.turbulence_intensity;
    s.model.scheme = scheme_from_string(j.at("model").at("scheme").get<std::string>());
    s.model.surrogate = Surrogate::make(s.config.make_layout(), surrogate_ambient,
                                        s.config.surrogate_params);
    for (const auto& g : j.at("model").at("gp_bank"))
        s.model.gp_bank.push_back(GpModel::from_json(g));
    return s;
}

namespace {

std::string join_csv(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ",";
        line += cells[i];
    }
    line += "\n";
    return line;
}

void write_artifacts(const CampaignState& state,
                     const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_file(out_dir / "config.txt", state.config.serialize());
    write_file(out_dir / "dataset.csv", dataset_csv(state));
    write_file(out_dir / "iterations.csv", iterations_csv(state));
    write_file(out_dir / "state.json", state.to_json().dump(2) + "\n");
}

} // namespace

std::string iterations_csv(const CampaignState& state) {
    const int n = static_cast<int>(state.greedy_truth_power.size());
    std::vector<std::string> header = {"iteration"};
    for (int i = 0; i < n; ++i) header.push_back("gamma_deg_" + std::to_string(i));
    for (int i = 0; i < n; ++i) header.push_back("measured_w_" + std::to_string(i));
    for (int i = 0; i < n; ++i) header.push_back("measured_norm_" + std::to_string(i));
    for (int i = 0; i < n; ++i) header.push_back("predicted_norm_" + std::to_string(i));
    header.push_back("objective");
    header.push_back("total_norm");
    std::string out = join_csv(header);
    for (const auto& r : state.records) {
        std::vector<std::string> cells = {std::to_string(r.iteration)};
        for (int i = 0; i < n; ++i) cells.push_back(format_double(r.yaw_applied(i)));
        for (int i = 0; i < n; ++i) cells.push_back(format_double(r.measured_watts(i)));
        for (int i = 0; i < n; ++i) cells.push_back(format_double(r.measured_norm(i)));
        for (int i = 0; i < n; ++i) cells.push_back(format_double(r.predicted_norm(i)));
        cells.push_back(format_double(r.objective_value));
        cells.push_back(format_double(r.total_norm));
        out += join_csv(cells);
    }
    return out;
}

std::string dataset_csv(const CampaignState& state) {
    const int n = static_cast<int>(state.greedy_truth_power.size());
    std::vector<std::string> header = {"index", "t_start_s", "t_end_s"};
    for (int i = 0; i < n; ++i) header.push_back("gamma_deg_" + std::to_string(i));
    for (int i = 0; i < n; ++i) header.push_back("power_w_" + std::to_string(i));
    for (int i = 0; i < n; ++i) header.push_back("power_norm_" + std::to_string(i));
    std::string out = join_csv(header);
    for (const auto& op : state.history) {
        std::vector<std::string> cells = {std::to_string(op.index),
                                          format_double(op.t_start),
                                          format_double(op.t_end)};
        for (int i = 0; i < n; ++i) cells.push_back(format_double(op.yaw(i)));
        for (int i = 0; i < n; ++i) cells.push_back(format_double(op.power_watts(i)));
        for (int i = 0; i < n; ++i) cells.push_back(format_double(op.power_norm(i)));
        out += join_csv(cells);
    }
    return out;
}

nlohmann::json campaign_summary(const CampaignState& state,
                                const std::optional<OracleResult>& oracle) {
    const int n_init = state.config.dataset.n_ops;
    const double greedy_total = state.greedy_truth_power.sum();
    double init_best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < std::min<int>(n_init, state.history.size()); ++i)
        init_best = std::max(init_best,
                             state.history[i].power_watts.sum() / greedy_total);
    if (!std::isfinite(init_best)) init_best = 1.0; // no initial dataset: greedy
    double best = init_best;
    for (const auto& r : state.records) best = std::max(best, r.total_norm);

    nlohmann::json j;
    j["name"] = state.config.name;
    j["scheme"] = state.config.scheme;
    j["kernel"] = state.config.gp.kernel;
    j["seed"] = state.config.seed;
    j["iterations"] = state.completed_iterations;
    j["normalization"] = "noiseless-truth-greedy";
    j["ambient_estimate"] = {{"wind_speed", state.ambient_estimate.wind_speed},
                             {"turbulence_intensity",
                              state.ambient_estimate.turbulence_intensity},
                             {"residual", state.ambient_estimate.residual}};
    j["final_yaw_deg"] = to_std(state.current_yaw);
    j["initialization_gain"] = init_best - 1.0;
    j["final_gain"] = state.records.empty()
                          ? init_best - 1.0
                          : state.records.back().total_norm - 1.0;
    j["best_gain"] = best - 1.0;
    if (oracle) {
        j["oracle"] = {{"row_yaw_deg", oracle->row_yaw},
                       {"gain", oracle->gain},
                       {"total_power_w", oracle->total_power}};
        j["gain_vs_oracle"] =
            oracle->gain > 0.0 ? (best - 1.0) / oracle->gain : 0.0;
    }
    return j;
}

CampaignState run_campaign(const CampaignConfig& config) {
    const std::filesystem::path out_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);

    PlantSimulator plant(config.make_plant_spec(), config.make_layout(),
                         config.dataset.sample_period_s);
    CampaignState state = initialize_campaign(config, plant);
    write_artifacts(state, out_dir);

    while (state.completed_iterations < config.iterations) {
        run_iteration(state, plant);
        write_file(out_dir / ("model_iter_" +
                              std::to_string(state.completed_iterations) + ".json"),
                   state.model.to_json().dump(2) + "\n");
        write_artifacts(state, out_dir);
    }

    std::optional<OracleResult> oracle;
    if (config.oracle_in_summary)
        oracle = plant_oracle(config, config.oracle_resolution_deg);
    write_file(out_dir / "summary.json",
               campaign_summary(state, oracle).dump(2) + "\n");
    return state;
}

CampaignState resume_campaign(const std::filesystem::path& state_path) {
    std::ifstream in(state_path);
    if (!in) throw config_error("cannot open state file: " + state_path.string());
    nlohmann::json j;
    in >> j;
    CampaignState state = CampaignState::from_json(j);
    const CampaignConfig& config = state.config;

    PlantSimulator plant(config.make_plant_spec(), config.make_layout(),
                         config.dataset.sample_period_s);
    plant.restore(state.plant_rng_counter, state.plant_carry_power,
                  state.plant_noise_state, state.plant_elapsed);

    const std::filesystem::path out_dir(config.output_dir);
    while (state.completed_iterations < config.iterations) {
        run_iteration(state, plant);
        write_file(out_dir / ("model_iter_" +
                              std::to_string(state.completed_iterations) + ".json"),
                   state.model.to_json().dump(2) + "\n");
        write_artifacts(state, out_dir);
    }
    std::optional<OracleResult> oracle;
    if (config.oracle_in_summary)
        oracle = plant_oracle(config, config.oracle_resolution_deg);
    write_file(out_dir / "summary.json",
               campaign_summary(state, oracle).dump(2) + "\n");
    return state;
}

OracleResult plant_oracle(const CampaignConfig& config, double resolution_deg) {
    const FarmLayout layout = config.make_layout();
    const std::vector<int> rows = row_assignment(layout, config.plant_ambient);
    const int n = layout.size();
    const int n_rows = 1 + *std::max_element(rows.begin(), rows.end());

    Eigen::VectorXd lower = config.expand_row_bounds(config.optimizer.yaw_lower_deg);
    Eigen::VectorXd upper = config.expand_row_bounds(config.optimizer.yaw_upper_deg);
    Eigen::VectorXd rlo = Eigen::VectorXd::Constant(n_rows, -1e9);
    Eigen::VectorXd rhi = Eigen::VectorXd::Constant(n_rows, 1e9);
    for (int t = 0; t < n; ++t) {
        rlo(rows[t]) = std::max(rlo(rows[t]), lower(t));
        rhi(rows[t]) = std::min(rhi(rows[t]), upper(t));
    }

    auto truth_total = [&](const YawVector& yaw) {
        return farm_power(layout, config.plant_ambient, yaw, config.plant_params).total;
    };

    OracleResult best;
    best.greedy_power = truth_total(YawVector::Zero(n));
    best.total_power = -std::numeric_limits<double>::infinity();

    std::vector<int> counts(n_rows);
    long total_nodes = 1;
    for (int r = 0; r < n_rows; ++r) {
        counts[r] = 1 + static_cast<int>(
                            std::floor((rhi(r) - rlo(r)) / resolution_deg + 1e-9));
        total_nodes *= counts[r];
    }
    std::vector<int> idx(n_rows, 0);
    Eigen::VectorXd v(n_rows);
    YawVector yaw(n);
    for (long c = 0; c < total_nodes; ++c) {
        for (int r = 0; r < n_rows; ++r)
            v(r) = std::min(rlo(r) + idx[r] * resolution_deg, rhi(r));
        for (int t = 0; t < n; ++t) yaw(t) = v(rows[t]);
        const double p = truth_total(yaw);
        if (p > best.total_power) {
            best.total_power = p;
            best.yaw = yaw;
            best.row_yaw.assign(v.begin(), v.end());
        }
        for (int r = 0; r < n_rows; ++r) {
            if (++idx[r] < counts[r]) break;
            idx[r] = 0;
        }
    }
    best.gain = best.total_power / best.greedy_power - 1.0;
    return best;
}

std::vector<ComparisonRow> compare_schemes(const std::vector<CampaignConfig>& configs) {
    if (configs.empty()) throw std::invalid_argument("no configs to compare");

    // members may differ only in scheme/kernel (and naming/output)
    auto neutral = [](CampaignConfig c) {
        c.scheme = "ma-gp";
        c.gp.kernel = "se";
        c.name = "";
        c.output_dir = "";
        return c.serialize();
    };
    const std::string reference = neutral(configs.front());
    for (const auto& c : configs)
        if (neutral(c) != reference)
            throw std::invalid_argument(
                "compared configs may differ only in scheme and kernel");

    std::vector<ComparisonRow> rows;
    for (const auto& config : configs) {
        PlantSimulator plant(config.make_plant_spec(), config.make_layout(),
                             config.dataset.sample_period_s);
        CampaignState state = initialize_campaign(config, plant);
        ComparisonRow row;
        row.scheme = config.scheme;
        row.kernel = config.gp.kernel;
        const double greedy_total = state.greedy_truth_power.sum();
        double init_best = -std::numeric_limits<double>::infinity();
        for (const auto& op : state.history)
            init_best = std::max(init_best, op.power_watts.sum() / greedy_total);
        if (!std::isfinite(init_best)) init_best = 1.0;
        row.initialization_gain = init_best - 1.0;
        while (state.completed_iterations < config.iterations) {
            const IterationRecord rec = run_iteration(state, plant);
            row.iteration_gains.push_back(rec.total_norm - 1.0);
        }
        row.final_gain = row.iteration_gains.empty() ? row.initialization_gain
                                                     : row.iteration_gains.back();
        row.final_yaw = state.current_yaw;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    std::size_t n_iters = 0;
    for (const auto& r : rows) n_iters = std::max(n_iters, r.iteration_gains.size());
    std::vector<std::string> header = {"scheme", "kernel", "initialization_gain"};
    for (std::size_t k = 1; k <= n_iters; ++k)
        header.push_back("gain_iter_" + std::to_string(k));
    header.push_back("final_gain");
    header.push_back("final_yaw_deg");
    std::string out = join_csv(header);
    for (const auto& r : rows) {
        std::vector<std::string> cells = {r.scheme, r.kernel,
                                          format_double(r.initialization_gain)};
        for (std::size_t k = 0; k < n_iters; ++k)
            cells.push_back(k < r.iteration_gains.size()
                                ? format_double(r.iteration_gains[k])
                                : "");
        cells.push_back(format_double(r.final_gain));
        std::string yaw_repr;
        for (Eigen::Index i = 0; i < r.final_yaw.size(); ++i) {
            if (i) yaw_repr += ";";
            yaw_repr += format_double(r.final_yaw(i));
        }
        cells.push_back(yaw_repr);
        out += join_csv(cells);
    }
    return out;
}

std::string export_row_slice(const CampaignState& state, int row,
                             double gamma_min, double gamma_max, int points) {
    const CorrectedModel& cm = state.model;
    if (cm.gp_bank.empty() || cm.gp_bank.front().size() == 0)
        throw std::invalid_argument("row slice requires a trained model");
    if (points < 2 || !(gamma_min < gamma_max))
        throw std::invalid_argument("invalid slice grid");

    const std::vector<int> rows =
        row_assignment(cm.surrogate.layout, cm.surrogate.ambient);
    const int n = cm.turbine_count();
    int turbine = -1;
    for (int t = 0; t < n; ++t)
        if (rows[t] == row) {
            turbine = t;
            break;
        }
    if (turbine < 0) throw std::invalid_argument("no such turbine row");

    std::string out = join_csv({"kind", "gamma_deg", "mean", "model_lo", "model_hi",
                                "total_lo", "total_hi"});
    YawVector yaw = state.current_yaw;
    for (int k = 0; k < points; ++k) {
        const double g = gamma_min + (gamma_max - gamma_min) * k / (points - 1);
        for (int t = 0; t < n; ++t)
            if (rows[t] == row) yaw(t) = g;
        double base = 0.0;
        if (cm.scheme == Scheme::MaGp)
            base = cm.surrogate.normalized_power(yaw)(turbine);
        const Prediction p = cm.gp_bank[turbine].predict(yaw);
        const double mean = base + p.mean;
        const double band_model = 1.96 * std::sqrt(std::max(p.latent_var, 0.0));
        const double band_total = 1.96 * std::sqrt(std::max(p.observation_var, 0.0));
        out += join_csv({"grid", format_double(g), format_double(mean),
                         format_double(mean - band_model),
                         format_double(mean + band_model),
                         format_double(mean - band_total),
                         format_double(mean + band_total)});
    }
    for (const auto& op : state.history)
        out += join_csv({"train", format_double(op.yaw(turbine)),
                         format_double(op.power_norm(turbine)), "", "", "", ""});
    return out;
}

} // namespace wakesteer
