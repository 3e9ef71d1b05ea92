#include "edflow/tuning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "edflow/csv.hpp"

namespace edflow {

using ordered_json = nlohmann::ordered_json;

void GridSpec::validate() const {
    if (horizon < 1) throw std::invalid_argument("grid horizon must be at least 1");
    if (max_epochs < 1) throw std::invalid_argument("grid max_epochs must be at least 1");
    if (early_stop_patience < 0) {
        throw std::invalid_argument("grid early_stop_patience must be non-negative");
    }
    if (learning_rates.empty() || dropouts.empty() || batch_sizes.empty() || lookbacks.empty()) {
        throw std::invalid_argument("every grid dimension needs at least one candidate");
    }
    for (const double lr : learning_rates) {
        if (!(lr > 0.0) || !std::isfinite(lr)) {
            throw std::invalid_argument("grid learning rates must be positive and finite");
        }
    }
    for (const double p : dropouts) {
        if (!(p >= 0.0 && p < 1.0)) {
            throw std::invalid_argument("grid dropout probabilities must lie in [0, 1)");
        }
    }
    for (const int batch : batch_sizes) {
        if (batch < 1) throw std::invalid_argument("grid batch sizes must be at least 1");
    }
    for (const int lookback : lookbacks) {
        if (lookback < 1) throw std::invalid_argument("grid lookbacks must be at least 1");
    }
    for (const auto& stacks : stack_options) {
        NBeatsXConfig probe = NBeatsXConfig::defaults(lookbacks.front(), horizon);
        probe.stacks = stacks;
        probe.max_epochs = max_epochs;
        probe.early_stop_patience = early_stop_patience;
        probe.validate();
    }
}

std::size_t GridSpec::size() const {
    const std::size_t architectures = stack_options.empty() ? 1 : stack_options.size();
    return lookbacks.size() * architectures * batch_sizes.size() * dropouts.size() *
           learning_rates.size();
}

std::vector<NBeatsXConfig> GridSpec::expand() const {
    validate();
    std::vector<NBeatsXConfig> cells;
    cells.reserve(size());
    for (const int lookback : lookbacks) {
        std::vector<std::vector<StackSpec>> architectures = stack_options;
        if (architectures.empty()) {
            architectures.push_back(NBeatsXConfig::defaults(lookback, horizon).stacks);
        }
        for (const auto& stacks : architectures) {
            for (const int batch : batch_sizes) {
                for (const double dropout : dropouts) {
                    for (const double lr : learning_rates) {
                        NBeatsXConfig config = NBeatsXConfig::defaults(lookback, horizon);
                        config.stacks = stacks;
                        config.batch_size = batch;
                        config.dropout_p = dropout;
                        config.learning_rate = lr;
                        config.max_epochs = max_epochs;
                        config.early_stop_patience = early_stop_patience;
                        config.seed = 0;
                        cells.push_back(std::move(config));
                    }
                }
            }
        }
    }
    return cells;
}

std::string GridSpec::to_json() const {
    ordered_json doc;
    doc["horizon"] = horizon;
    doc["max_epochs"] = max_epochs;
    doc["early_stop_patience"] = early_stop_patience;
    doc["learning_rate"] = learning_rates;
    doc["dropout"] = dropouts;
    doc["batch_size"] = batch_sizes;
    doc["lookback"] = lookbacks;
    doc["stack_options"] = ordered_json::array();
    for (const auto& stacks : stack_options) {
        doc["stack_options"].push_back(ordered_json::parse(stacks_to_json(stacks)));
    }
    return doc.dump(2);
}

GridSpec GridSpec::from_json(std::string_view text) {
    try {
        const auto doc = ordered_json::parse(text);
        GridSpec grid;
        grid.horizon = doc.at("horizon").get<int>();
        grid.max_epochs = doc.at("max_epochs").get<int>();
        grid.early_stop_patience = doc.at("early_stop_patience").get<int>();
        grid.learning_rates = doc.at("learning_rate").get<std::vector<double>>();
        grid.dropouts = doc.at("dropout").get<std::vector<double>>();
        grid.batch_sizes = doc.at("batch_size").get<std::vector<int>>();
        grid.lookbacks = doc.at("lookback").get<std::vector<int>>();
        grid.stack_options.clear();
        if (doc.contains("stack_options")) {
            for (const auto& item : doc["stack_options"]) {
                grid.stack_options.push_back(stacks_from_json(item.dump()));
            }
        }
        grid.validate();
        return grid;
    } catch (const ordered_json::exception& error) {
        throw std::invalid_argument(std::string("bad grid JSON: ") + error.what());
    }
}

namespace {

TrialResult run_trial(const NBeatsXConfig& config, std::size_t trial_index,
                      const WindowSplits& windows, const TargetScaler& target_scaler) {
    TrialResult trial;
    trial.trial_index = trial_index;
    trial.config = config;
    const auto started = std::chrono::steady_clock::now();
    try {
        TrainOutput trained = train(config, windows.train, windows.val);
        trial.history = trained.history;
        const auto forecasts = predict_series(trained.model, windows.val, target_scaler);
        std::vector<double> actual;
        std::vector<double> predicted;
        actual.reserve(windows.val.size() * static_cast<std::size_t>(config.horizon));
        predicted.reserve(actual.capacity());
        for (std::size_t w = 0; w < windows.val.size(); ++w) {
            for (Eigen::Index h = 0; h < windows.val[w].target.size(); ++h) {
                actual.push_back(target_scaler.invert(windows.val[w].target[h]));
                predicted.push_back(forecasts[w].total[h]);
            }
        }
        trial.val_metrics = regression_metrics(actual, predicted);
    } catch (const DivergenceError& error) {
        trial.aborted = true;
        trial.abort_reason = error.what();
        trial.history = error.history;
    } catch (const std::exception& error) {
        trial.aborted = true;
        trial.abort_reason = error.what();
    }
    trial.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return trial;
}

}  // namespace

GridSearchResult grid_search(const GridSpec& grid, const ModelDataset& scaled,
                             const TargetScaler& target_scaler, const SplitIndices& split,
                             std::uint64_t base_seed) {
    const auto configs = grid.expand();
    std::map<int, WindowSplits> windows_by_lookback;
    std::vector<TrialResult> trials;
    trials.reserve(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        NBeatsXConfig config = configs[i];
        config.seed = base_seed + i;
        auto cached = windows_by_lookback.find(config.lookback);
        if (cached == windows_by_lookback.end()) {
            WindowSplits windows;
            try {
                windows = split_windows(scaled, split, config.lookback, grid.horizon);
            } catch (const std::exception& error) {
                TrialResult trial;
                trial.trial_index = i;
                trial.config = config;
                trial.aborted = true;
                trial.abort_reason = error.what();
                trials.push_back(std::move(trial));
                continue;
            }
            cached = windows_by_lookback.emplace(config.lookback, std::move(windows)).first;
        }
        trials.push_back(run_trial(config, i, cached->second, target_scaler));
    }

    std::vector<std::size_t> order(trials.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&trials](std::size_t a, std::size_t b) {
        const TrialResult& ta = trials[a];
        const TrialResult& tb = trials[b];
        if (ta.aborted != tb.aborted) return !ta.aborted;
        if (!ta.aborted) {
            if (ta.val_metrics->mae != tb.val_metrics->mae) {
                return ta.val_metrics->mae < tb.val_metrics->mae;
            }
            if (ta.val_metrics->mse != tb.val_metrics->mse) {
                return ta.val_metrics->mse < tb.val_metrics->mse;
            }
        }
        return a < b;
    });

    GridSearchResult result;
    result.ranked.reserve(trials.size());
    for (const std::size_t idx : order) result.ranked.push_back(std::move(trials[idx]));
    return result;
}

std::string architecture_summary(const std::vector<StackSpec>& stacks) {
    std::string out;
    for (const StackSpec& stack : stacks) {
        if (!out.empty()) out += '+';
        out += stack_kind_name(stack.kind);
        out += '(';
        if (stack.kind == StackKind::kTrend) out += 'p' + std::to_string(stack.degree) + ',';
        if (stack.kind == StackKind::kSeasonality) {
            out += 'k' + std::to_string(stack.harmonics) + ',';
        }
        out += std::to_string(stack.blocks) + 'x' + std::to_string(stack.layers_per_block) + 'x';
        const bool uniform = std::all_of(stack.hidden_widths.begin(), stack.hidden_widths.end(),
                                         [&stack](int w) { return w == stack.hidden_widths.front(); });
        if (uniform && !stack.hidden_widths.empty()) {
            out += std::to_string(stack.hidden_widths.front());
        } else {
            for (std::size_t i = 0; i < stack.hidden_widths.size(); ++i) {
                if (i > 0) out += '/';
                out += std::to_string(stack.hidden_widths[i]);
            }
        }
        out += ')';
    }
    return out;
}

std::string results_csv(const GridSearchResult& result) {
    std::string out;
    append_csv_row(out, {"rank", "trial", "seed", "aborted", "abort_reason", "learning_rate",
                         "dropout", "batch_size", "lookback", "architecture", "epochs",
                         "final_train_loss", "val_mae", "val_mse", "val_rmse", "val_r2",
                         "wall_seconds"});
    for (std::size_t rank = 0; rank < result.ranked.size(); ++rank) {
        const TrialResult& trial = result.ranked[rank];
        std::vector<std::string> fields;
        fields.push_back(std::to_string(rank + 1));
        fields.push_back(std::to_string(trial.trial_index));
        fields.push_back(std::to_string(trial.seed()));
        fields.push_back(trial.aborted ? "true" : "false");
        fields.push_back(trial.abort_reason);
        fields.push_back(format_double(trial.config.learning_rate));
        fields.push_back(format_double(trial.config.dropout_p));
        fields.push_back(std::to_string(trial.config.batch_size));
        fields.push_back(std::to_string(trial.config.lookback));
        fields.push_back(architecture_summary(trial.config.stacks));
        fields.push_back(std::to_string(trial.history.size()));
        fields.push_back(trial.history.empty() ? ""
                                               : format_double(trial.history.back().train_loss));
        if (trial.val_metrics) {
            fields.push_back(format_double(trial.val_metrics->mae));
            fields.push_back(format_double(trial.val_metrics->mse));
            fields.push_back(format_double(trial.val_metrics->rmse));
            fields.push_back(trial.val_metrics->r2 ? format_double(*trial.val_metrics->r2) : "");
        } else {
            fields.insert(fields.end(), {"", "", "", ""});
        }
        fields.push_back(format_double(trial.wall_seconds));
        append_csv_row(out, fields);
    }
    return out;
}

std::string history_csv(const std::vector<EpochStats>& history) {
    std::string out;
    append_csv_row(out, {"epoch", "train_loss", "val_loss"});
    for (const EpochStats& stats : history) {
        append_csv_row(out, {std::to_string(stats.epoch), format_double(stats.train_loss),
                             stats.val_loss ? format_double(*stats.val_loss) : ""});
    }
    return out;
}

std::string history_csv(const TrialResult& trial) { return history_csv(trial.history); }

}  // namespace edflow
