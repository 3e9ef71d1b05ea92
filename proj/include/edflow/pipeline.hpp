#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edflow/dataset.hpp"
#include "edflow/eval.hpp"
#include "edflow/nbeatsx.hpp"
#include "edflow/preprocess.hpp"
#include "edflow/synth.hpp"
#include "edflow/tuning.hpp"

namespace edflow {

// Inputs that exist but cannot be parsed or fail semantic validation. The
// command line maps this to its own exit code, distinct from argument errors
// and training divergence.
struct BadDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Paths to the five raw sources; the game schedule ships as two files.
struct SourcePaths {
    std::string ed_tracking;
    std::string inpatient;
    std::string weather;
    std::string holidays;
    std::string games1;
    std::string games2;

    // Label/path pairs in schema order.
    std::vector<std::pair<std::string, std::string>> named() const;
};

// Reproducibility record dropped into every run directory as manifest.json:
// the command, its seed, a config echo, and FNV-1a digests of every file
// read and written. Paths under the recording root are stored relative to it
// so reruns under different roots produce identical manifests.
struct RunManifest {
    std::string command;
    std::uint64_t seed = 0;
    std::string config_json = "{}";
    std::vector<std::pair<std::string, std::string>> inputs;   // path -> digest
    std::vector<std::pair<std::string, std::string>> outputs;  // path -> digest

    std::string to_json() const;
    static RunManifest from_json(std::string_view text);
};

// Model-ready matrix serialization: hour, warmup flag, raw and scaled
// target, then feature columns prefixed "f:" and known-future columns
// prefixed "x:". Segment boundaries are implied by hour gaps.
std::string model_dataset_to_csv(const ModelDataset& dataset);
ModelDataset model_dataset_from_csv(std::string_view content);

struct SynthRunResult {
    std::size_t hours = 0;
    std::size_t visits = 0;
    std::size_t stays = 0;
    SourcePaths sources;
    std::string ground_truth_csv;
    std::string injections_json;
    std::string manifest_path;
};

// Generates a scenario and writes the raw source files plus the simulator's
// ground-truth table under out_dir.
SynthRunResult run_synth(const ScenarioConfig& scenario, const std::string& out_dir,
                         const std::string& record_root = "");

struct FeaturizeRunResult {
    CleaningReport cleaning;
    std::size_t rejected_rows = 0;
    std::size_t hourly_rows = 0;
    std::size_t pandemic_rows_excluded = 0;
    std::string hourly_csv;
    std::string manifest_path;
};

// Parses the five sources, cleans and imputes visits, assembles the hourly
// table over the weather coverage, and drops the pandemic window when the
// data reaches into it. Writes hourly.csv, cleaning.json, and rejects.csv.
FeaturizeRunResult run_featurize(const SourcePaths& sources, const std::string& out_dir,
                                 const std::string& record_root = "");

struct BuildRunResult {
    SplitIndices split;
    std::size_t expanded_columns = 0;
    std::string variant_id;
    std::string dataset_csv;
    std::string split_json;
    std::string scalers_json;
    std::string variant_json;
    std::string manifest_path;
};

// Expands a feature variant against the hourly table, splits it
// chronologically, and standardizes on training rows. variant names a
// builtin (DS1..DS5) or a manifest JSON path. Writes variant.csv,
// dataset.csv, split.json, scalers.json, and variant.json.
BuildRunResult run_build(const std::string& hourly_csv, const std::string& variant,
                         double train_fraction, double val_fraction, const std::string& out_dir,
                         const std::string& record_root = "");

struct TrainRunResult {
    std::vector<EpochStats> history;
    bool early_stopped = false;
    std::string checkpoint_json;
    std::string history_csv;
    std::string manifest_path;
};

// Fits the model on the training windows of a build directory, tracking
// validation loss per epoch. Writes checkpoint.json and history.csv.
// Propagates DivergenceError.
TrainRunResult run_train(const std::string& build_dir, const NBeatsXConfig& config,
                         const std::string& out_dir, const std::string& record_root = "");

struct GridSearchRunResult {
    GridSearchResult search;
    std::string results_csv;
    std::string best_config_json;
    std::string best_history_csv;
    std::string manifest_path;
};

// Grid search over a build directory. Writes results.csv (wall-clock column
// included, so this one artifact is not byte-reproducible), the winning
// configuration, and its epoch history.
GridSearchRunResult run_gridsearch(const std::string& build_dir, const GridSpec& grid,
                                   std::uint64_t base_seed, const std::string& out_dir,
                                   const std::string& record_root = "");

struct EvaluateRunResult {
    std::size_t test_windows = 0;
    ExtremeThresholds thresholds;
    MetricsReport model_overall;
    MetricsReport model_final_step;
    MetricsReport persistence_final_step;
    std::optional<MetricsReport> seasonal_final_step;
    ExtremeSliceReport slices;
    std::string metrics_json;
    std::string predictions_csv;
    std::string manifest_path;
};

// Scores a checkpoint on the test partition of a build directory: pooled and
// per-step metrics in raw counts, persistence and seasonal-naive baselines
// on the same forecast targets, and extreme-slice MAEs against thresholds
// fitted on the train and validation rows. Writes metrics.json and
// predictions.csv.
EvaluateRunResult run_evaluate(const std::string& build_dir, const std::string& checkpoint_path,
                               const std::string& out_dir, const std::string& record_root = "");

struct DecomposeRunResult {
    Date day = 0;
    std::string decomposition_csv;
    std::string manifest_path;
};

// Exports the component table for one calendar day; when no day is given,
// the first fully forecastable day of the test partition is used. Writes
// decomposition.csv.
DecomposeRunResult run_decompose(const std::string& build_dir, const std::string& checkpoint_path,
                                 std::optional<Date> day, const std::string& out_dir,
                                 const std::string& record_root = "");

// Full-run settings: either a scenario to synthesize or paths to existing
// sources, plus the variant, model, split, and optional grid knobs. The run
// seed overrides the scenario seed, the model seed, and the grid base seed
// so one value pins the whole run.
struct RunConfig {
    std::optional<ScenarioConfig> scenario;
    SourcePaths sources;
    std::string variant = "DS3";
    NBeatsXConfig model = NBeatsXConfig::defaults();
    std::optional<GridSpec> grid;
    double train_fraction = 0.70;
    double val_fraction = 0.15;
    std::uint64_t seed = 0;

    std::string to_json() const;
    static RunConfig from_json(std::string_view text);
};

struct PipelineRunResult {
    std::optional<SynthRunResult> synth;
    FeaturizeRunResult featurize;
    BuildRunResult build;
    std::optional<GridSearchRunResult> gridsearch;
    TrainRunResult training;
    EvaluateRunResult evaluation;
    DecomposeRunResult decomposition;
    std::string manifest_path;
};

// Runs every stage under one root with per-stage subdirectories: synth (when
// a scenario is set), featurize, build, grid search (when a grid is set; the
// winning configuration is used for the final fit), train, evaluate, and
// decompose. No stage mutates its inputs.
PipelineRunResult run_pipeline(const RunConfig& config, const std::string& out_dir);

}  // namespace edflow
