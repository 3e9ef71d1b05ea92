#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "edflow/csv.hpp"
#include "edflow/eval.hpp"
#include "edflow/nbeatsx.hpp"
#include "edflow/pipeline.hpp"
#include "edflow/synth.hpp"
#include "edflow/time.hpp"
#include "edflow/tuning.hpp"

namespace {

using namespace edflow;

std::string fixed(double value, int places = 3) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*f", places, value);
    return buffer;
}

std::string metric_line(const MetricsReport& metrics) {
    std::string line = "MAE " + fixed(metrics.mae) + "  RMSE " + fixed(metrics.rmse) + "  R2 ";
    line += metrics.r2 ? fixed(*metrics.r2) : std::string("n/a");
    line += "  (n=" + std::to_string(metrics.n) + ")";
    return line;
}

ScenarioConfig load_scenario(const std::string& spec) {
    if (spec == "default") return ScenarioConfig{};
    if (!std::filesystem::exists(spec)) {
        throw std::invalid_argument("scenario file does not exist: " + spec);
    }
    return ScenarioConfig::from_json(read_file(spec));
}

GridSpec load_grid(const std::string& spec) {
    if (spec == "default") return GridSpec{};
    if (!std::filesystem::exists(spec)) {
        throw std::invalid_argument("grid file does not exist: " + spec);
    }
    return GridSpec::from_json(read_file(spec));
}

// The six raw inputs, given either as one --data directory holding the
// canonical file names or as individual path flags; explicit flags win.
struct SourceOptions {
    std::string data_dir;
    SourcePaths paths;

    void attach(CLI::App* cmd) {
        cmd->add_option("--data", data_dir, "directory with the canonical source file names")
            ->check(CLI::ExistingDirectory);
        cmd->add_option("--ed-tracking", paths.ed_tracking, "ED tracking export CSV")
            ->check(CLI::ExistingFile);
        cmd->add_option("--inpatient", paths.inpatient, "inpatient stay export CSV")
            ->check(CLI::ExistingFile);
        cmd->add_option("--weather", paths.weather, "hourly weather observations CSV")
            ->check(CLI::ExistingFile);
        cmd->add_option("--holidays", paths.holidays, "federal holiday date list")
            ->check(CLI::ExistingFile);
        cmd->add_option("--games1", paths.games1, "first team game-day date list")
            ->check(CLI::ExistingFile);
        cmd->add_option("--games2", paths.games2, "second team game-day date list")
            ->check(CLI::ExistingFile);
    }

    bool any() const {
        if (!data_dir.empty()) return true;
        for (const auto& [label, path] : paths.named()) {
            if (!path.empty()) return true;
        }
        return false;
    }

    SourcePaths resolve() const {
        SourcePaths resolved = paths;
        if (!data_dir.empty()) {
            const std::filesystem::path dir(data_dir);
            auto fill = [&](std::string& member, const char* name) {
                if (member.empty()) member = (dir / name).string();
            };
            fill(resolved.ed_tracking, "ed_tracking.csv");
            fill(resolved.inpatient, "inpatient.csv");
            fill(resolved.weather, "weather.csv");
            fill(resolved.holidays, "holidays.csv");
            fill(resolved.games1, "games1.csv");
            fill(resolved.games2, "games2.csv");
        }
        for (const auto& [label, path] : resolved.named()) {
            if (path.empty()) {
                throw std::invalid_argument("missing source " + label +
                                            "; give --" + label + " or --data");
            }
            if (!std::filesystem::exists(path)) {
                throw std::invalid_argument("source file does not exist: " + path);
            }
        }
        return resolved;
    }
};

// Model hyperparameter flags shared by train and pipeline. resolve() starts
// from --model-config when given, otherwise from the stock architecture
// built for the requested lookback and horizon, then applies the individual
// flags on top.
struct ModelOptions {
    std::optional<std::string> config_path;
    std::optional<int> lookback;
    std::optional<int> horizon;
    std::optional<double> learning_rate;
    std::optional<double> dropout;
    std::optional<int> batch_size;
    std::optional<int> max_epochs;
    std::optional<int> patience;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* cmd, bool with_seed) {
        cmd->add_option("--model-config", config_path, "model configuration JSON")
            ->check(CLI::ExistingFile);
        cmd->add_option("--lookback", lookback, "input window length in hours");
        cmd->add_option("--horizon", horizon, "forecast steps ahead");
        cmd->add_option("--learning-rate", learning_rate, "Adam step size");
        cmd->add_option("--dropout", dropout, "dropout probability inside blocks");
        cmd->add_option("--batch-size", batch_size, "training mini-batch size");
        cmd->add_option("--max-epochs", max_epochs, "training epoch cap");
        cmd->add_option("--patience", patience, "epochs without improvement before stopping");
        if (with_seed) {
            cmd->add_option("--seed", seed, "seed for init, shuffling, and dropout")
                ->envname("EDFLOW_SEED");
        }
    }

    void apply(NBeatsXConfig& config) const {
        if (lookback) config.lookback = *lookback;
        if (horizon) config.horizon = *horizon;
        if (learning_rate) config.learning_rate = *learning_rate;
        if (dropout) config.dropout_p = *dropout;
        if (batch_size) config.batch_size = *batch_size;
        if (max_epochs) config.max_epochs = *max_epochs;
        if (patience) config.early_stop_patience = *patience;
        if (seed) config.seed = *seed;
    }

    NBeatsXConfig resolve() const {
        NBeatsXConfig config =
            config_path ? NBeatsXConfig::from_json(read_file(*config_path))
                        : NBeatsXConfig::defaults(lookback.value_or(12), horizon.value_or(6));
        apply(config);
        return config;
    }
};

void print_synth(const ScenarioConfig& scenario, const SynthRunResult& result) {
    std::cout << "scenario: " << scenario.days << " days from "
              << format_date(scenario.start_date) << ", seed " << scenario.seed << "\n"
              << "generated " << result.hours << " hours, " << result.visits << " ED visits, "
              << result.stays << " inpatient stays\n"
              << "manifest: " << result.manifest_path << "\n";
}

void print_featurize(const FeaturizeRunResult& result) {
    const CleaningReport& cleaning = result.cleaning;
    std::cout << "cleaning: " << cleaning.total_visits << " visits, dropped "
              << cleaning.waiting_over_limit << " waiting / " << cleaning.boarding_over_limit
              << " boarding / " << cleaning.treatment_over_limit << " treatment, imputed "
              << cleaning.esi_imputed << " ESI values\n"
              << "hourly table: " << result.hourly_rows << " rows, " << result.rejected_rows
              << " source rows rejected, " << result.pandemic_rows_excluded
              << " pandemic rows excluded\n"
              << "manifest: " << result.manifest_path << "\n";
}

void print_build(const BuildRunResult& result) {
    const SplitIndices& split = result.split;
    std::cout << "variant " << result.variant_id << ": " << result.expanded_columns
              << " model columns\n"
              << "split: " << split.train_end << " train / " << (split.val_end - split.train_end)
              << " val / " << (split.total - split.val_end) << " test rows\n"
              << "manifest: " << result.manifest_path << "\n";
}

void print_train(const TrainRunResult& result) {
    std::cout << "trained " << result.history.size() << " epochs"
              << (result.early_stopped ? " (early stop)" : "") << "\n";
    const EpochStats& last = result.history.back();
    std::cout << "final train loss " << fixed(last.train_loss, 6);
    if (last.val_loss) std::cout << ", val loss " << fixed(*last.val_loss, 6);
    std::cout << "\ncheckpoint: " << result.checkpoint_json << "\n"
              << "manifest: " << result.manifest_path << "\n";
}

void print_gridsearch(const GridSearchRunResult& result) {
    const TrialResult& best = result.search.ranked.front();
    std::cout << "searched " << result.search.ranked.size() << " cells\n"
              << "best: lr " << best.config.learning_rate << ", dropout " << best.config.dropout_p
              << ", batch " << best.config.batch_size << ", lookback " << best.config.lookback
              << ", " << architecture_summary(best.config.stacks) << "\n";
    if (best.val_metrics) std::cout << "best validation: " << metric_line(*best.val_metrics) << "\n";
    std::cout << "manifest: " << result.manifest_path << "\n";
}

void print_evaluate(const EvaluateRunResult& result) {
    const ExtremeThresholds& thresholds = result.thresholds;
    std::cout << "test windows: " << result.test_windows << "\n"
              << "thresholds: mean " << fixed(thresholds.mean, 1) << ", std "
              << fixed(thresholds.std, 1) << " -> " << thresholds.t1 << " / " << thresholds.t2
              << " / " << thresholds.t3 << "\n"
              << "model overall:    " << metric_line(result.model_overall) << "\n"
              << "model final step: " << metric_line(result.model_final_step) << "\n"
              << "persistence:      " << metric_line(result.persistence_final_step) << "\n";
    if (result.seasonal_final_step) {
        std::cout << "seasonal naive:   " << metric_line(*result.seasonal_final_step) << "\n";
    }
    if (result.persistence_final_step.mae > 0.0) {
        const double gain = 1.0 - result.model_final_step.mae / result.persistence_final_step.mae;
        std::cout << "final-step MAE improvement vs persistence: " << fixed(gain * 100.0, 1)
                  << "%\n";
    }
    for (const SliceStats& slice : result.slices.cumulative) {
        std::cout << "slice " << slice.label << ": "
                  << (slice.mae ? "MAE " + fixed(*slice.mae) : std::string("empty")) << " (n="
                  << std::to_string(slice.count) << ")\n";
    }
    std::cout << "manifest: " << result.manifest_path << "\n";
}

void print_decompose(const DecomposeRunResult& result) {
    std::cout << "decomposed " << format_date(result.day)
              << " into trend, seasonality, and exogenous components\n"
              << "table: " << result.decomposition_csv << "\n"
              << "manifest: " << result.manifest_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hourly ED patient-flow forecasting toolkit"};
    app.require_subcommand(1);
    app.footer("exit codes: 0 success, 2 bad arguments, 3 bad input data, 4 training divergence");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic hospital scenario");
    std::string synth_scenario = "default";
    std::optional<std::uint64_t> synth_seed;
    std::string synth_out;
    synth_cmd->add_option("--scenario", synth_scenario, "'default' or a scenario JSON path");
    synth_cmd->add_option("--seed", synth_seed, "overrides the scenario seed")
        ->envname("EDFLOW_SEED");
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->callback([&] {
        ScenarioConfig scenario = load_scenario(synth_scenario);
        if (synth_seed) scenario.seed = *synth_seed;
        print_synth(scenario, run_synth(scenario, synth_out, synth_out));
    });

    // featurize
    auto* feat_cmd =
        app.add_subcommand("featurize", "parse, clean, and assemble the hourly feature table");
    SourceOptions feat_sources;
    std::string feat_out;
    feat_sources.attach(feat_cmd);
    feat_cmd->add_option("--out", feat_out, "output directory")->required();
    feat_cmd->callback(
        [&] { print_featurize(run_featurize(feat_sources.resolve(), feat_out, feat_out)); });

    // build
    auto* build_cmd =
        app.add_subcommand("build", "expand a feature variant into a standardized model dataset");
    std::string build_hourly;
    std::string build_variant = "DS3";
    double build_train_fraction = 0.70;
    double build_val_fraction = 0.15;
    std::string build_out;
    build_cmd->add_option("--hourly", build_hourly, "hourly.csv from featurize")
        ->required()
        ->check(CLI::ExistingFile);
    build_cmd->add_option("--variant", build_variant, "builtin id DS1..DS5 or a manifest JSON path");
    build_cmd->add_option("--train-fraction", build_train_fraction, "chronological training share");
    build_cmd->add_option("--val-fraction", build_val_fraction, "chronological validation share");
    build_cmd->add_option("--out", build_out, "output directory")->required();
    build_cmd->callback([&] {
        print_build(run_build(build_hourly, build_variant, build_train_fraction,
                              build_val_fraction, build_out, build_out));
    });

    // train
    auto* train_cmd = app.add_subcommand("train", "fit the forecaster on a build directory");
    std::string train_build;
    ModelOptions train_model;
    std::string train_out;
    train_cmd->add_option("--build", train_build, "directory written by build")
        ->required()
        ->check(CLI::ExistingDirectory);
    train_model.attach(train_cmd, true);
    train_cmd->add_option("--out", train_out, "output directory")->required();
    train_cmd->callback(
        [&] { print_train(run_train(train_build, train_model.resolve(), train_out, train_out)); });

    // gridsearch
    auto* grid_cmd =
        app.add_subcommand("gridsearch", "train every cell of a hyperparameter grid");
    std::string grid_build;
    std::string grid_spec = "default";
    std::uint64_t grid_seed = 0;
    std::string grid_out;
    grid_cmd->add_option("--build", grid_build, "directory written by build")
        ->required()
        ->check(CLI::ExistingDirectory);
    grid_cmd->add_option("--grid", grid_spec, "'default' or a grid JSON path");
    grid_cmd->add_option("--seed", grid_seed, "base seed; trial i runs with seed base + i")
        ->envname("EDFLOW_SEED");
    grid_cmd->add_option("--out", grid_out, "output directory")->required();
    grid_cmd->callback([&] {
        print_gridsearch(run_gridsearch(grid_build, load_grid(grid_spec), grid_seed, grid_out,
                                        grid_out));
    });

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on the test partition");
    std::string eval_build;
    std::string eval_checkpoint;
    std::string eval_out;
    eval_cmd->add_option("--build", eval_build, "directory written by build")
        ->required()
        ->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint.json from train")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--out", eval_out, "output directory")->required();
    eval_cmd->callback(
        [&] { print_evaluate(run_evaluate(eval_build, eval_checkpoint, eval_out, eval_out)); });

    // decompose
    auto* decomp_cmd = app.add_subcommand("decompose", "export one day of component forecasts");
    std::string decomp_build;
    std::string decomp_checkpoint;
    std::string decomp_date;
    std::string decomp_out;
    decomp_cmd->add_option("--build", decomp_build, "directory written by build")
        ->required()
        ->check(CLI::ExistingDirectory);
    decomp_cmd->add_option("--checkpoint", decomp_checkpoint, "checkpoint.json from train")
        ->required()
        ->check(CLI::ExistingFile);
    decomp_cmd->add_option("--date", decomp_date,
                           "day to decompose, YYYY-MM-DD; defaults to the first fully "
                           "forecastable test day");
    decomp_cmd->add_option("--out", decomp_out, "output directory")->required();
    decomp_cmd->callback([&] {
        std::optional<Date> day;
        if (!decomp_date.empty()) {
            day = parse_date(decomp_date);
            if (!day) {
                throw std::invalid_argument("bad --date, expected YYYY-MM-DD: " + decomp_date);
            }
        }
        print_decompose(run_decompose(decomp_build, decomp_checkpoint, day, decomp_out,
                                      decomp_out));
    });

    // pipeline
    auto* pipe_cmd = app.add_subcommand("pipeline", "run every stage under one output root");
    std::string pipe_config_path;
    std::optional<std::string> pipe_scenario;
    SourceOptions pipe_sources;
    std::optional<std::string> pipe_variant;
    std::optional<std::string> pipe_grid;
    std::optional<double> pipe_train_fraction;
    std::optional<double> pipe_val_fraction;
    std::optional<std::uint64_t> pipe_seed;
    ModelOptions pipe_model;
    std::string pipe_out;
    pipe_cmd->add_option("--config", pipe_config_path, "full run configuration JSON")
        ->check(CLI::ExistingFile);
    pipe_cmd->add_option("--scenario", pipe_scenario, "'default' or a scenario JSON path");
    pipe_sources.attach(pipe_cmd);
    pipe_cmd->add_option("--variant", pipe_variant, "builtin id DS1..DS5 or a manifest JSON path");
    pipe_cmd->add_option("--grid", pipe_grid,
                         "'default' or a grid JSON path; the winner trains the final model");
    pipe_cmd->add_option("--train-fraction", pipe_train_fraction, "chronological training share");
    pipe_cmd->add_option("--val-fraction", pipe_val_fraction, "chronological validation share");
    pipe_cmd->add_option("--seed", pipe_seed, "run seed pinning scenario, model, and grid")
        ->envname("EDFLOW_SEED");
    pipe_model.attach(pipe_cmd, false);
    pipe_cmd->add_option("--out", pipe_out, "output directory")->required();
    pipe_cmd->callback([&] {
        RunConfig config;
        if (!pipe_config_path.empty()) config = RunConfig::from_json(read_file(pipe_config_path));
        if (pipe_scenario && pipe_sources.any()) {
            throw std::invalid_argument("give either --scenario or source files, not both");
        }
        if (pipe_scenario) {
            config.scenario = load_scenario(*pipe_scenario);
            config.sources = SourcePaths{};
        }
        if (pipe_sources.any()) {
            config.sources = pipe_sources.resolve();
            config.scenario.reset();
        }
        if (pipe_variant) config.variant = *pipe_variant;
        if (pipe_grid) config.grid = load_grid(*pipe_grid);
        if (pipe_train_fraction) config.train_fraction = *pipe_train_fraction;
        if (pipe_val_fraction) config.val_fraction = *pipe_val_fraction;
        if (pipe_model.config_path) {
            config.model = NBeatsXConfig::from_json(read_file(*pipe_model.config_path));
        } else if (pipe_config_path.empty()) {
            config.model = NBeatsXConfig::defaults(
                pipe_model.lookback.value_or(config.model.lookback),
                pipe_model.horizon.value_or(config.model.horizon));
        }
        pipe_model.apply(config.model);
        if (pipe_seed) config.seed = *pipe_seed;

        const PipelineRunResult result = run_pipeline(config, pipe_out);
        if (result.synth) {
            std::cout << "[synth] " << result.synth->hours << " hours, " << result.synth->visits
                      << " visits, " << result.synth->stays << " stays\n";
        }
        std::cout << "[featurize] " << result.featurize.hourly_rows << " hourly rows, "
                  << result.featurize.rejected_rows << " rejected\n";
        const SplitIndices& split = result.build.split;
        std::cout << "[build] " << result.build.variant_id << ", "
                  << result.build.expanded_columns << " columns, " << split.train_end << "/"
                  << (split.val_end - split.train_end) << "/" << (split.total - split.val_end)
                  << " rows\n";
        if (result.gridsearch) {
            const TrialResult& best = result.gridsearch->search.ranked.front();
            std::cout << "[gridsearch] " << result.gridsearch->search.ranked.size()
                      << " cells, best lr " << best.config.learning_rate << ", dropout "
                      << best.config.dropout_p << ", batch " << best.config.batch_size
                      << ", lookback " << best.config.lookback << "\n";
        }
        std::cout << "[train] " << result.training.history.size() << " epochs"
                  << (result.training.early_stopped ? " (early stop)" : "") << "\n";
        std::cout << "[evaluate]\n";
        print_evaluate(result.evaluation);
        std::cout << "[decompose] " << format_date(result.decomposition.day) << "\n"
                  << "manifest: " << result.manifest_path << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const edflow::DivergenceError& e) {
        std::cerr << "error: training diverged: " << e.what() << "\n";
        return 4;
    } catch (const edflow::BadDataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
