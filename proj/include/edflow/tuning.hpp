#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edflow/dataset.hpp"
#include "edflow/eval.hpp"
#include "edflow/nbeatsx.hpp"

namespace edflow {

// Candidate hyperparameter values; every cell of the Cartesian product is
// trained once. stack_options holds whole architectures, each a full stack
// list; an empty list means the default architecture for each lookback.
struct GridSpec {
    int horizon = 6;
    int max_epochs = 30;
    int early_stop_patience = 5;
    std::vector<double> learning_rates = {0.003};
    std::vector<double> dropouts = {0.1};
    std::vector<int> batch_sizes = {128};
    std::vector<int> lookbacks = {12};
    std::vector<std::vector<StackSpec>> stack_options;

    void validate() const;
    std::size_t size() const;

    // Cells in enumeration order: lookback, then architecture, then batch
    // size, then dropout, then learning rate. Lookback is outermost so the
    // search can reuse one window set per value. Seeds are left at zero;
    // grid_search assigns them.
    std::vector<NBeatsXConfig> expand() const;

    std::string to_json() const;
    static GridSpec from_json(std::string_view text);

    bool operator==(const GridSpec&) const = default;
};

struct TrialResult {
    std::size_t trial_index = 0;
    NBeatsXConfig config;
    bool aborted = false;
    std::string abort_reason;
    std::optional<MetricsReport> val_metrics;  // raw units, all horizon steps pooled
    std::vector<EpochStats> history;
    double wall_seconds = 0.0;  // informational only, varies run to run

    std::uint64_t seed() const { return config.seed; }
};

struct GridSearchResult {
    std::vector<TrialResult> ranked;
};

// Trains one model per grid cell on the scaled dataset with
// seed = base_seed + trial_index. Completed trials are ranked by validation
// MAE, ties by validation MSE, then by enumeration order; trials that throw
// (divergence, impossible window shapes) are kept with their reason and sort
// after every completed trial.
GridSearchResult grid_search(const GridSpec& grid, const ModelDataset& scaled,
                             const TargetScaler& target_scaler, const SplitIndices& split,
                             std::uint64_t base_seed);

// Compact one-line form of a stack list, e.g.
// "trend(p3,2x3x128)+seasonality(k3,2x3x128)+exogenous(2x3x256)".
std::string architecture_summary(const std::vector<StackSpec>& stacks);

// One row per trial in rank order. wall_seconds is wall-clock measurement
// and is not reproducible across runs; every other column is.
std::string results_csv(const GridSearchResult& result);

// epoch, train_loss, val_loss rows.
std::string history_csv(const std::vector<EpochStats>& history);
std::string history_csv(const TrialResult& trial);

}  // namespace edflow
