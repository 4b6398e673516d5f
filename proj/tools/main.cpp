#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wakesteer/campaign.hpp"
#include "wakesteer/errors.hpp"

namespace {

namespace ws = wakesteer;

ws::CampaignConfig load_config(const std::string& path, long long seed,
                               const std::string& out_dir) {
    ws::CampaignConfig config = path.empty()
                                    ? ws::CampaignConfig::defaults()
                                    : ws::CampaignConfig::from_map(ws::ConfigMap::load(path));
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) config.output_dir = out_dir;
    return config;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path().empty()
                                            ? "."
                                            : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ws::config_error("cannot write " + path.string());
    out << text;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wake-steering yaw optimization campaigns on a synthetic plant"};
    app.require_subcommand(1);

    std::string config_path, out_dir, resume_path;
    long long seed = -1;

    auto add_common = [&](CLI::App* sub, bool with_resume) {
        sub->add_option("--config", config_path, "campaign config file");
        sub->add_option("--seed", seed, "override the campaign seed");
        sub->add_option("--out", out_dir, "output directory");
        if (with_resume)
            sub->add_option("--resume", resume_path, "state.json checkpoint to continue");
    };

    auto* init = app.add_subcommand("init", "write a default config file");
    add_common(init, false);

    auto* run = app.add_subcommand("run", "execute a campaign");
    add_common(run, true);

    std::vector<std::string> compare_configs;
    auto* compare = app.add_subcommand("compare", "run several configs and tabulate");
    compare->add_option("--config", compare_configs, "config files (repeatable)")
        ->required();
    compare->add_option("--seed", seed, "override the campaign seed");
    compare->add_option("--out", out_dir, "output directory");

    int slice_row = 0, slice_points = 101;
    double slice_min = -30.0, slice_max = 30.0;
    auto* slice = app.add_subcommand("slice", "export row-slice plot data");
    slice->add_option("--resume", resume_path, "state.json of a finished campaign")
        ->required();
    slice->add_option("--out", out_dir, "output directory");
    slice->add_option("--row", slice_row, "turbine row index");
    slice->add_option("--min", slice_min, "grid lower bound, deg");
    slice->add_option("--max", slice_max, "grid upper bound, deg");
    slice->add_option("--points", slice_points, "grid size");

    auto* oracle = app.add_subcommand("oracle", "brute-force plant optimum");
    add_common(oracle, false);
    double oracle_res = 0.0;
    oracle->add_option("--resolution", oracle_res, "grid resolution, deg");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (init->parsed()) {
            const std::filesystem::path dir = out_dir.empty() ? "." : out_dir;
            const auto path = dir / "config.txt";
            write_text(path, ws::CampaignConfig::defaults().serialize());
            std::cout << path.string() << "\n";
        } else if (run->parsed()) {
            ws::CampaignState state =
                resume_path.empty()
                    ? ws::run_campaign(load_config(config_path, seed, out_dir))
                    : ws::resume_campaign(resume_path);
            std::cout << ws::campaign_summary(state, std::nullopt).dump(2) << "\n";
        } else if (compare->parsed()) {
            std::vector<ws::CampaignConfig> configs;
            for (const auto& p : compare_configs)
                configs.push_back(load_config(p, seed, ""));
            const auto rows = ws::compare_schemes(configs);
            const std::string csv = ws::comparison_csv(rows);
            if (!out_dir.empty())
                write_text(std::filesystem::path(out_dir) / "comparison.csv", csv);
            std::cout << csv;
        } else if (slice->parsed()) {
            std::ifstream in(resume_path);
            if (!in) throw ws::config_error("cannot open state file: " + resume_path);
            nlohmann::json j;
            in >> j;
            const ws::CampaignState state = ws::CampaignState::from_json(j);
            const std::string csv = ws::export_row_slice(state, slice_row, slice_min,
                                                         slice_max, slice_points);
            if (!out_dir.empty())
                write_text(std::filesystem::path(out_dir) /
                               ("slice_row_" + std::to_string(slice_row) + ".csv"),
                           csv);
            std::cout << csv;
        } else if (oracle->parsed()) {
            const ws::CampaignConfig config = load_config(config_path, seed, out_dir);
            const double res =
                oracle_res > 0.0 ? oracle_res : config.oracle_resolution_deg;
            const ws::OracleResult result = ws::plant_oracle(config, res);
            nlohmann::json j = {{"row_yaw_deg", result.row_yaw},
                                {"total_power_w", result.total_power},
                                {"greedy_power_w", result.greedy_power},
                                {"gain", result.gain}};
            if (!out_dir.empty())
                write_text(std::filesystem::path(out_dir) / "oracle.json",
                           j.dump(2) + "\n");
            std::cout << j.dump(2) << "\n";
        }
    } catch (const ws::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ws::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
