#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "edflow/table.hpp"
#include "edflow/time.hpp"

namespace edflow {

enum class Transform { kRaw, kLags, kRolling };

struct FeatureEntry {
    std::string column;
    Transform transform = Transform::kRaw;
    int window = 0;  // lag count or rolling width

    bool operator==(const FeatureEntry&) const = default;
};

// Ordered recipe mapping hourly-table columns to an expanded feature matrix.
// DS1 through DS5 ship as builtins and can be exported, edited, and loaded
// back, so the variant definitions are data rather than code.
struct FeatureManifest {
    std::string id;
    std::vector<FeatureEntry> entries;

    static FeatureManifest builtin(std::string_view id);
    static const std::vector<std::string>& builtin_ids();

    static FeatureManifest from_json(std::string_view text);
    std::string to_json() const;

    // Number of columns after lag/rolling expansion.
    std::size_t expanded_column_count() const;

    bool operator==(const FeatureManifest&) const = default;
};

// Expands the manifest against the hourly table: lag entries become
// <col>_lag_1..W, rolling entries <col>_roll_W, raw entries pass through.
// Output columns appear in manifest order with warmup flags carried over.
HourlyTable build_variant(const HourlyTable& hourly, const FeatureManifest& manifest);

// Lookback-model view of a manifest: every entry contributes its base column
// once (the model shifts sequences internally, so explicit lag copies would
// be redundant), rolling entries contribute their computed column, and the
// known-in-advance calendar/event columns are split out for use over the
// forecast horizon.
struct ModelDataset {
    std::vector<Timestamp> hours;
    std::vector<std::size_t> segments;
    std::vector<std::uint8_t> warmup;
    std::vector<std::string> feature_columns;
    std::vector<std::string> future_columns;
    Eigen::MatrixXd features;    // rows x feature_columns
    Eigen::MatrixXd future;      // rows x future_columns
    Eigen::VectorXd target;      // boarding count per row, scaled after scale_dataset
    Eigen::VectorXd target_raw;  // boarding count per row, always in original units

    std::size_t rows() const { return hours.size(); }
};

ModelDataset build_model_dataset(const HourlyTable& hourly, const FeatureManifest& manifest);

// Contiguous row ranges: [0,train_end), [train_end,val_end), [val_end,n).
struct SplitIndices {
    std::size_t train_end = 0;
    std::size_t val_end = 0;
    std::size_t total = 0;
};

// Sizes floor(train_frac*n) and floor(val_frac*n); the remainder is test.
SplitIndices chronological_split(std::size_t n, double train_frac = 0.70,
                                 double val_frac = 0.15);

// Column standardization fitted on training rows only. Constant columns and
// binary 0/1 indicator columns pass through unscaled.
struct Scaler {
    std::vector<std::string> columns;
    std::vector<double> mean;
    std::vector<double> std;
    std::vector<std::uint8_t> scaled;

    void apply(Eigen::MatrixXd& matrix) const;
};

Scaler fit_scaler(const Eigen::MatrixXd& train_rows, const std::vector<std::string>& columns);

struct TargetScaler {
    double mean = 0.0;
    double std = 1.0;

    double scale(double raw) const { return (raw - mean) / std; }
    double invert(double scaled) const { return scaled * std + mean; }
};

TargetScaler fit_target_scaler(const Eigen::VectorXd& train_target);

// Scales features, future covariates, and target in place using statistics
// from the training rows of the split.
struct DatasetScalers {
    Scaler features;
    Scaler future;
    TargetScaler target;
};

DatasetScalers scale_dataset(ModelDataset& dataset, const SplitIndices& split);

// JSON for the fitted scalers, shared by build artifacts and model
// checkpoints so one schema serves both.
std::string scalers_to_json(const DatasetScalers& scalers);
DatasetScalers scalers_from_json(std::string_view text);

// One training example: lookback feature rows, known-ahead covariates over
// the horizon, and the target slice, all referenced by the anchor row (the
// forecast origin, the last observed hour).
struct SupervisedWindow {
    Eigen::MatrixXd input;       // L x F, rows t-L+1 .. t
    Eigen::MatrixXd exo_future;  // H x F_exo, rows t+1 .. t+H
    Eigen::VectorXd history;     // target at rows t-L+1 .. t
    Eigen::VectorXd target;      // target at rows t+1 .. t+H
    Timestamp anchor = 0;
};

// Anchor rows t inside [row_begin, row_end) whose full span t-L+1 .. t+H
// stays inside the range, inside one contiguous segment, and clear of
// warmup rows.
std::vector<std::size_t> window_anchors(const ModelDataset& dataset, std::size_t row_begin,
                                        std::size_t row_end, int lookback, int horizon);

SupervisedWindow make_window(const ModelDataset& dataset, std::size_t anchor, int lookback,
                             int horizon);

std::vector<SupervisedWindow> make_windows(const ModelDataset& dataset, std::size_t row_begin,
                                           std::size_t row_end, int lookback, int horizon);

// Windows per chronological partition. Training windows stay entirely inside
// the training rows; validation and test windows may reach back into the
// preceding partition for input history but keep every target row inside
// their own partition.
struct WindowSplits {
    std::vector<SupervisedWindow> train;
    std::vector<SupervisedWindow> val;
    std::vector<SupervisedWindow> test;
};

WindowSplits split_windows(const ModelDataset& dataset, const SplitIndices& split, int lookback,
                           int horizon);

}  // namespace edflow
