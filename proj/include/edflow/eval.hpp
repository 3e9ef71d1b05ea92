#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edflow/nbeatsx.hpp"
#include "edflow/time.hpp"

namespace edflow {

struct MetricsReport {
    double mae = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    std::optional<double> r2;  // absent when the actuals are constant
    std::size_t n = 0;

    std::string to_json() const;
};

MetricsReport regression_metrics(std::span<const double> y, std::span<const double> yhat);

// Mean, population std, and the rounded mu + k*sigma cutoffs of a boarding
// series.
struct ExtremeThresholds {
    double mean = 0.0;
    double std = 0.0;
    long t1 = 0;
    long t2 = 0;
    long t3 = 0;
};

// Throws std::invalid_argument on an empty series and on degenerate series
// whose rounded thresholds collapse (t1 < t2 < t3 must hold).
ExtremeThresholds compute_thresholds(std::span<const double> series);

enum class ExtremeCategory { kNormal, kExtreme, kVeryExtreme, kHighlyExtreme };

std::string_view extreme_category_name(ExtremeCategory category);

// <= t1 Normal, (t1, t2] Extreme, (t2, t3] VeryExtreme, > t3 HighlyExtreme.
ExtremeCategory classify_extreme(double value, const ExtremeThresholds& thresholds);

struct SliceStats {
    std::string label;
    std::size_t count = 0;
    std::optional<double> mae;  // absent for empty slices
};

// MAE restricted by the ACTUAL value: cumulative rows (> t1, > t2, > t3,
// each including the ones above it) plus the disjoint category bands.
struct ExtremeSliceReport {
    std::vector<SliceStats> cumulative;
    std::vector<SliceStats> bands;

    std::string to_json() const;
};

ExtremeSliceReport extreme_slice_mae(std::span<const double> y, std::span<const double> yhat,
                                     const ExtremeThresholds& thresholds);

enum class BaselineKind { kPersistence, kSeasonalNaive24h };

std::string_view baseline_kind_name(BaselineKind kind);

// A prediction for the series row holding the forecast target.
struct BaselinePrediction {
    std::size_t target_row = 0;
    double value = 0.0;
};

// Persistence: yhat(t + H) = y(t). Seasonal naive: yhat(t + H) = y(t + H - 24h).
// Rows whose forecast origin or source hour is missing from the series are
// skipped.
std::vector<BaselinePrediction> baseline_forecasts(std::span<const Timestamp> hours,
                                                   std::span<const double> y, BaselineKind kind,
                                                   int horizon = 6);

// Pairs (actual, predicted) for horizon step `step` (1-based) of each
// forecast, matched to the series by target timestamp; unmatched anchors are
// skipped.
std::pair<std::vector<double>, std::vector<double>> align_step(
    const std::vector<ForecastDecomposition>& forecasts, std::span<const Timestamp> hours,
    std::span<const double> actual, int step);

// CSV for one calendar day: hour, actual, total, trend, seasonality,
// exogenous, plus each component centered on its own 24-hour mean. Rows are
// the final horizon step of the forecast anchored H hours earlier; throws
// when any hour of the day lacks a forecast or an actual.
std::string export_decomposition(const std::vector<ForecastDecomposition>& forecasts,
                                 std::span<const Timestamp> hours, std::span<const double> actual,
                                 Date day);

}  // namespace edflow
