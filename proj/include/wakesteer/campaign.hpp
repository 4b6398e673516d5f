#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wakesteer/adaptation.hpp"
#include "wakesteer/config.hpp"
#include "wakesteer/plant.hpp"

namespace wakesteer {

struct GpSettings {
    std::string kernel = "se";
    int restarts = 8;
    bool bounds_enabled = true;
    double noise_floor_rel = 1e-3;
    double length_floor_deg = 1.0;
    int refit_every = 1; // iterations between hyperparameter refits; 0 = never
    double prior_signal_std = 0.1;
    double prior_noise_std = 0.02;
    double prior_length_scale_deg = 20.0;
};

struct DatasetSettings {
    int n_ops = 20;
    double duplicate_fraction = 0.25;
    double op_duration_s = 600.0;
    double sample_period_s = 1.0;
    double filter_horizon_s = 300.0;
    double transient_cut_s = 300.0;
};

struct OptimizerSettings {
    std::vector<double> yaw_lower_deg = {-25.0, -20.0, -7.0}; // per row
    std::vector<double> yaw_upper_deg = {18.0, 10.0, 5.0};
    // the variance penalty and input filter damp the wander of the nearly
    // power-neutral back-row yaw between iterations
    double variance_weight = 2.0;
    std::string objective_form = "squared"; // squared | linear
    double filter_gain = 0.55;
    int multistart = 16;
    double grid_resolution_deg = 3.0;
    bool tie_rows = true; // one yaw variable per downstream row
};

struct CampaignConfig {
    std::string name = "default";
    std::uint64_t seed = 1;
    int iterations = 10;
    std::string scheme = "ma-gp"; // ma-gp | bo

    // layout
    int layout_rows = 3;
    int layout_cols = 3;
    double spacing_downstream_d = 5.0;
    double spacing_cross_d = 3.0;
    Turbine turbine; // prototype; ct_curve optional

    Ambient ambient;
    WakeParams surrogate_params;

    // plant truth
    WakeParams plant_params;
    Ambient plant_ambient;
    NoiseModel plant_noise;
    double plant_transient_tau_s = 60.0;

    OptimizerSettings optimizer;
    GpSettings gp;
    DatasetSettings dataset;

    bool estimate_ambient_enabled = true;
    AmbientSearchRange ambient_range;

    bool oracle_in_summary = false;
    double oracle_resolution_deg = 1.0;

    std::string output_dir = "out";

    // plant truth defaults derived from the surrogate
    static CampaignConfig defaults();

    FarmLayout make_layout() const;
    PlantSpec make_plant_spec() const;
    // per-row bounds expanded to one entry per turbine
    Eigen::VectorXd expand_row_bounds(const std::vector<double>& per_row) const;
    OptimizerOptions make_optimizer_options() const;
    FitOptions make_fit_options(std::uint64_t fit_seed) const;
    Hyperparameters make_prior_psi() const;

    ConfigMap to_map() const;
    static CampaignConfig from_map(const ConfigMap& map);
    std::string serialize() const { return to_map().serialize(); }
    static CampaignConfig parse(const std::string& text) {
        return from_map(ConfigMap::parse(text));
    }
};

struct CampaignState {
    CampaignConfig config;
    std::string config_hash;
    CorrectedModel model;
    std::vector<OperatingPoint> history; // initial dataset + applied OPs
    std::vector<IterationRecord> records;
    YawVector current_yaw;
    Eigen::VectorXd greedy_truth_power; // noiseless truth greedy, W (normalization basis)
    AmbientEstimate ambient_estimate;
    int completed_iterations = 0;

    // plant carry-over for checkpoint resume
    std::uint64_t plant_rng_counter = 0;
    Eigen::VectorXd plant_carry_power;
    Eigen::VectorXd plant_noise_state;
    double plant_elapsed = 0.0;

    nlohmann::json to_json() const;
    static CampaignState from_json(const nlohmann::json& j);
};

std::string config_hash(const CampaignConfig& config);

// Initialization only: greedy calibration OP, ambient estimation, initial
// dataset, batch assimilation and first fit. Leaves the plant ready for
// iteration 1.
CampaignState initialize_campaign(const CampaignConfig& config,
                                  PlantSimulator& plant);

// One closed-loop step: optimize -> filter -> apply to plant -> assimilate.
IterationRecord run_iteration(CampaignState& state, PlantSimulator& plant);

// Full campaign with artifacts written under config.output_dir:
// iterations.csv, dataset.csv, per-iteration model snapshots, state.json,
// summary.json.
CampaignState run_campaign(const CampaignConfig& config);

// Continue an interrupted campaign from its state.json checkpoint.
CampaignState resume_campaign(const std::filesystem::path& state_path);

struct OracleResult {
    YawVector yaw;            // full per-turbine vector (row-tied)
    std::vector<double> row_yaw;
    double total_power = 0.0; // W
    double greedy_power = 0.0;
    double gain = 0.0;        // total / greedy - 1
};

// Brute-force row-tied grid search over the noiseless plant truth model.
OracleResult plant_oracle(const CampaignConfig& config, double resolution_deg);

struct ComparisonRow {
    std::string scheme;
    std::string kernel;
    double initialization_gain = 0.0;
    std::vector<double> iteration_gains;
    double final_gain = 0.0;
    YawVector final_yaw;
};

// Runs each config (they may differ only in scheme/kernel) and tabulates.
std::vector<ComparisonRow> compare_schemes(const std::vector<CampaignConfig>& configs);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

// Plot-ready slice: predicted normalized power of the first turbine of
// `row` while that row's yaw sweeps the grid, other rows held at the final
// applied yaw. Grid rows carry the 95% model and model+noise bands; training
// rows carry the measured scatter.
std::string export_row_slice(const CampaignState& state, int row,
                             double gamma_min, double gamma_max, int points);

std::string iterations_csv(const CampaignState& state);
std::string dataset_csv(const CampaignState& state);
nlohmann::json campaign_summary(const CampaignState& state,
                                const std::optional<OracleResult>& oracle);

} // namespace wakesteer
