// colat command line: simulate measurement logs, train the pairwise distance
// model, replay logs through the positioning pipeline, and compare metrics.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "colat/errors.hpp"
#include "colat/evaluation.hpp"
#include "colat/io.hpp"
#include "colat/metrics.hpp"
#include "colat/mlp.hpp"
#include "colat/preprocessing.hpp"
#include "colat/simulator.hpp"

namespace {

// Exit codes: 0 ok, 2 usage, 3 input format / bad data, 4 numerical failure.
constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumerical = 4;

struct PipelineFlags {
    double tw = 60.0;
    double threshold = -83.0;
    double eta = 2.1;
    int min_neighbors = 3;

    void attach(CLI::App* cmd) {
        cmd->add_option("--tw", tw, "Aggregation window length in seconds")
            ->capture_default_str();
        cmd->add_option("--threshold", threshold,
                        "Anchor selection threshold in dBm (mean RSS at or above it)")
            ->capture_default_str();
        cmd->add_option("--eta", eta, "Path-loss exponent for RSS-to-distance conversion")
            ->capture_default_str();
        cmd->add_option("--min-neighbors", min_neighbors,
                        "Minimum usable neighbors for the collaborative phase")
            ->capture_default_str();
    }

    colat::PipelineConfig config() const {
        colat::PipelineConfig cfg;
        cfg.tw = tw;
        cfg.threshold_dbm = threshold;
        cfg.eta = eta;
        cfg.min_neighbors = min_neighbors;
        return cfg;
    }
};

int cmd_simulate(const std::string& scenario_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed) {
    colat::Scenario scenario = colat::load_scenario(scenario_path);
    if (seed) scenario.seed = *seed;
    const auto log = colat::generate_log(scenario);
    colat::write_log_csv(out_path, log);
    std::cout << log.size() << " samples -> " << out_path << "\n";
    return 0;
}

int cmd_make_scenario(int configuration, const std::string& out_path, double sigma,
                      double duration, std::uint64_t seed, const std::string& obstacles) {
    colat::Scenario scenario = colat::preset_scenario(configuration);
    scenario.channel.shadowing_sigma = sigma;
    scenario.duration = duration;
    scenario.seed = seed;
    if (obstacles == "adverse4")
        scenario.obstacles = colat::adverse_obstacles();
    else if (obstacles != "none")
        throw CLI::ValidationError("--obstacles must be 'none' or 'adverse4'");
    colat::save_scenario(out_path, scenario);
    std::cout << "configuration " << configuration << " -> " << out_path << "\n";
    return 0;
}

// One scenario per log, or a single scenario shared by all logs.
std::vector<colat::Scenario> paired_scenarios(const std::vector<std::string>& logs,
                                              const std::vector<std::string>& scenarios) {
    std::vector<colat::Scenario> out;
    if (scenarios.size() != 1 && scenarios.size() != logs.size())
        throw CLI::ValidationError("--scenario count must be 1 or match --logs");
    for (std::size_t i = 0; i < logs.size(); ++i)
        out.push_back(colat::load_scenario(scenarios.size() == 1 ? scenarios[0] : scenarios[i]));
    return out;
}

int cmd_train(const std::vector<std::string>& log_paths,
              const std::vector<std::string>& scenario_paths, const std::string& arch_name,
              int epochs, std::uint64_t seed, const std::string& out_path,
              const PipelineFlags& flags, std::optional<std::uint64_t> seed_override) {
    colat::MlpArchitecture arch = colat::architecture_preset(arch_name);
    if (epochs < 1) throw CLI::ValidationError("--epochs must be >= 1");
    arch.epochs = epochs;

    colat::EvaluationOptions opt;
    opt.pipeline = flags.config();

    auto scenarios = paired_scenarios(log_paths, scenario_paths);
    colat::TrainingSet all;
    for (std::size_t i = 0; i < log_paths.size(); ++i) {
        if (seed_override) scenarios[i].seed = *seed_override;
        const auto log = colat::read_log_csv(log_paths[i]);
        const auto rows = colat::build_training_set(log, scenarios[i], opt);
        all.features.insert(all.features.end(), rows.features.begin(), rows.features.end());
        all.targets.insert(all.targets.end(), rows.targets.begin(), rows.targets.end());
    }
    if (all.size() < 10)
        throw colat::TrainingDataError("only " + std::to_string(all.size()) +
                                       " training rows; need at least 10");

    const auto [train, validation] = colat::split_training_set(all, 0.7, seed);
    const auto result = colat::train_scg(arch, train, validation, seed);
    colat::save_model(out_path, result.model);

    std::string curve = "epoch,train_mse,validation_mse\n";
    for (std::size_t e = 0; e < result.train_mse_curve.size(); ++e) {
        curve += std::to_string(e + 1);
        curve += ',' + colat::format_double(result.train_mse_curve[e]);
        curve += ',' + (e < result.validation_mse_curve.size()
                            ? colat::format_double(result.validation_mse_curve[e])
                            : std::string("nan"));
        curve += '\n';
    }
    const auto curve_path =
        std::filesystem::path(out_path).replace_extension().string() + "_curve.csv";
    colat::write_file_atomic(curve_path, curve);

    const auto metrics = colat::evaluate(result.model, validation.size() ? validation : train);
    std::cout << "trained " << arch_name << " on " << train.size() << " rows (validation "
              << validation.size() << "): rmse " << metrics.rmse << " m, r " << metrics.r
              << "\nmodel -> " << out_path << "\ncurve -> " << curve_path << "\n";
    return 0;
}

int cmd_evaluate(const std::vector<std::string>& log_paths,
                 const std::vector<std::string>& scenario_paths,
                 const std::string& model_path, const std::string& out_dir,
                 const PipelineFlags& flags, bool with_p70,
                 std::optional<std::uint64_t> seed_override) {
    colat::EvaluationOptions opt;
    opt.pipeline = flags.config();

    std::optional<colat::MlpModel> model;
    if (!model_path.empty()) model = colat::load_model(model_path);

    auto scenarios = paired_scenarios(log_paths, scenario_paths);
    std::filesystem::create_directories(out_dir);

    std::map<colat::Phase, std::vector<double>> pooled;
    for (std::size_t i = 0; i < log_paths.size(); ++i) {
        if (seed_override) scenarios[i].seed = *seed_override;
        const auto log = colat::read_log_csv(log_paths[i]);
        const auto result =
            colat::evaluate_log(log, scenarios[i], model ? &*model : nullptr, opt);
        for (const auto& [device, reason] : result.device_failures)
            std::cerr << "warning: " << log_paths[i] << ": device " << device << ": " << reason
                      << "\n";

        const auto stem = std::filesystem::path(log_paths[i]).stem().string();
        colat::write_errors_csv(std::filesystem::path(out_dir) / (stem + "_errors.csv"),
                                result.errors);

        colat::PhasedMetrics rows;
        for (const auto& [phase, errors] : result.errors_by_phase) {
            if (errors.empty()) continue;
            rows.emplace_back(colat::to_string(phase), colat::compute_metrics(errors, with_p70));
            colat::write_ecdf_csv(
                std::filesystem::path(out_dir) / (stem + "_ecdf_" + colat::to_string(phase) + ".csv"),
                colat::ecdf(errors));
            auto& pool = pooled[phase];
            pool.insert(pool.end(), errors.begin(), errors.end());
        }
        colat::write_metrics_csv(std::filesystem::path(out_dir) / (stem + "_metrics.csv"), rows,
                                 with_p70);
        std::cout << stem << " (" << result.windows << " windows, " << result.skipped_fixes
                  << " skipped fixes):\n"
                  << colat::format_metrics_table(rows);
    }

    colat::PhasedMetrics pooled_rows;
    for (const auto& [phase, errors] : pooled)
        if (!errors.empty())
            pooled_rows.emplace_back(colat::to_string(phase),
                                     colat::compute_metrics(errors, with_p70));
    if (!pooled_rows.empty()) {
        colat::write_metrics_csv(std::filesystem::path(out_dir) / "pooled_metrics.csv",
                                 pooled_rows, with_p70);
        std::cout << "pooled:\n" << colat::format_metrics_table(pooled_rows);
    }
    return 0;
}

const colat::MetricsReport* find_phase(const colat::PhasedMetrics& rows,
                                       const std::string& phase) {
    for (const auto& [name, report] : rows)
        if (name == phase) return &report;
    return nullptr;
}

int cmd_compare(const std::string& baseline_path, const std::string& proposed_path,
                std::string baseline_phase, std::string proposed_phase) {
    const auto baseline = colat::read_metrics_csv(baseline_path);
    const auto proposed = colat::read_metrics_csv(proposed_path);
    if (baseline.empty() || proposed.empty())
        throw colat::FormatError("metrics files must contain at least one row");

    if (baseline_phase.empty())
        baseline_phase = find_phase(baseline, "standalone") ? "standalone" : baseline.front().first;
    if (proposed_phase.empty())
        proposed_phase = find_phase(proposed, "fused") ? "fused" : proposed.front().first;

    const auto* b = find_phase(baseline, baseline_phase);
    const auto* p = find_phase(proposed, proposed_phase);
    if (!b)
        throw colat::FormatError(baseline_path + ": no phase '" + baseline_phase + "'");
    if (!p)
        throw colat::FormatError(proposed_path + ": no phase '" + proposed_phase + "'");

    std::cout << "baseline: " << baseline_path << " [" << baseline_phase << "]\n"
              << "proposed: " << proposed_path << " [" << proposed_phase << "]\n"
              << colat::format_comparison_table(*b, *p);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collaborative BLE-RSS lateration toolkit"};
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Generate a measurement log from a scenario");
    std::string sim_scenario, sim_out;
    std::optional<std::uint64_t> sim_seed;
    simulate->add_option("--scenario", sim_scenario, "Scenario JSON file")->required();
    simulate->add_option("--out", sim_out, "Output log CSV")->required();
    simulate->add_option("--seed", sim_seed, "Override the scenario seed");

    // make-scenario
    auto* mksc = app.add_subcommand("make-scenario", "Write a builtin deployment preset");
    int mk_config = 1;
    std::string mk_out, mk_obstacles = "none";
    double mk_sigma = 4.0, mk_duration = 600.0;
    std::uint64_t mk_seed = 1;
    mksc->add_option("--config", mk_config, "Configuration id (1..7)")
        ->required()
        ->check(CLI::Range(1, 7));
    mksc->add_option("--out", mk_out, "Output scenario JSON")->required();
    mksc->add_option("--sigma", mk_sigma, "Shadowing sigma in dB")->capture_default_str();
    mksc->add_option("--duration", mk_duration, "Simulated duration in seconds")
        ->capture_default_str();
    mksc->add_option("--seed", mk_seed, "Scenario seed")->capture_default_str();
    mksc->add_option("--obstacles", mk_obstacles, "Obstacle preset: none or adverse4")
        ->capture_default_str();

    // train
    auto* train = app.add_subcommand("train", "Train the pairwise distance model");
    std::vector<std::string> tr_logs, tr_scenarios;
    std::string tr_arch = "mlp1", tr_out;
    int tr_epochs = 50;
    std::uint64_t tr_seed = 1;
    std::optional<std::uint64_t> tr_scenario_seed;
    PipelineFlags tr_flags;
    train->add_option("--logs", tr_logs, "Training log CSVs")->required()->expected(-1);
    train->add_option("--scenario", tr_scenarios, "Scenario JSON per log (or one for all)")
        ->required()
        ->expected(-1);
    train->add_option("--arch", tr_arch, "Architecture preset: mlp1..mlp4")
        ->capture_default_str();
    train->add_option("--epochs", tr_epochs, "Training iterations")->capture_default_str();
    train->add_option("--seed", tr_seed, "Split/initialization seed")->capture_default_str();
    train->add_option("--scenario-seed", tr_scenario_seed,
                      "Override scenario seed (registration noise)");
    train->add_option("--out", tr_out, "Output model file")->required();
    tr_flags.attach(train);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Replay logs through the pipeline");
    std::vector<std::string> ev_logs, ev_scenarios;
    std::string ev_model, ev_out;
    bool ev_p70 = false;
    std::optional<std::uint64_t> ev_scenario_seed;
    PipelineFlags ev_flags;
    evaluate->add_option("--logs", ev_logs, "Test log CSVs")->required()->expected(-1);
    evaluate->add_option("--scenario", ev_scenarios, "Scenario JSON per log (or one for all)")
        ->required()
        ->expected(-1);
    evaluate->add_option("--model", ev_model,
                         "Distance model file (omit to skip the collaborative phase)");
    evaluate->add_option("--out", ev_out, "Output directory")->required();
    evaluate->add_flag("--p70", ev_p70, "Additionally report the 70th percentile");
    evaluate->add_option("--scenario-seed", ev_scenario_seed,
                         "Override scenario seed (registration noise)");
    ev_flags.attach(evaluate);

    // compare
    auto* compare = app.add_subcommand("compare", "Diff two metrics CSVs");
    std::string cp_baseline, cp_proposed, cp_bphase, cp_pphase;
    compare->add_option("--baseline", cp_baseline, "Baseline metrics CSV")->required();
    compare->add_option("--proposed", cp_proposed, "Proposed metrics CSV")->required();
    compare->add_option("--baseline-phase", cp_bphase,
                        "Row to take from the baseline file (default: standalone)");
    compare->add_option("--proposed-phase", cp_pphase,
                        "Row to take from the proposed file (default: fused)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim_scenario, sim_out, sim_seed);
        if (mksc->parsed())
            return cmd_make_scenario(mk_config, mk_out, mk_sigma, mk_duration, mk_seed,
                                     mk_obstacles);
        if (train->parsed())
            return cmd_train(tr_logs, tr_scenarios, tr_arch, tr_epochs, tr_seed, tr_out,
                             tr_flags, tr_scenario_seed);
        if (evaluate->parsed())
            return cmd_evaluate(ev_logs, ev_scenarios, ev_model, ev_out, ev_flags, ev_p70,
                                ev_scenario_seed);
        if (compare->parsed())
            return cmd_compare(cp_baseline, cp_proposed, cp_bphase, cp_pphase);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const colat::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const colat::TrainingDataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const colat::NumericalFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
