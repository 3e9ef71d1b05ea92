#include "edflow/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "edflow/csv.hpp"
#include "edflow/stats.hpp"

namespace edflow {

namespace {

using ordered_json = nlohmann::ordered_json;

std::unordered_map<Timestamp, std::size_t> row_by_hour(std::span<const Timestamp> hours) {
    std::unordered_map<Timestamp, std::size_t> map;
    map.reserve(hours.size());
    for (std::size_t i = 0; i < hours.size(); ++i) map.emplace(hours[i], i);
    return map;
}

SliceStats slice_stats(std::string label, const std::vector<double>& errors) {
    SliceStats stats;
    stats.label = std::move(label);
    stats.count = errors.size();
    if (!errors.empty()) stats.mae = mean(errors);
    return stats;
}

ordered_json slice_to_json(const SliceStats& stats) {
    ordered_json doc;
    doc["label"] = stats.label;
    doc["count"] = stats.count;
    doc["mae"] = stats.mae.has_value() ? ordered_json(*stats.mae) : ordered_json(nullptr);
    return doc;
}

}  // namespace

std::string MetricsReport::to_json() const {
    ordered_json doc;
    doc["mae"] = mae;
    doc["mse"] = mse;
    doc["rmse"] = rmse;
    doc["r2"] = r2.has_value() ? ordered_json(*r2) : ordered_json(nullptr);
    doc["n"] = n;
    return doc.dump(2);
}

MetricsReport regression_metrics(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) {
        throw std::invalid_argument("actual and predicted lengths differ");
    }
    if (y.size() < 2) throw std::invalid_argument("metrics need at least two points");

    MetricsReport report;
    report.n = y.size();
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double diff = yhat[i] - y[i];
        abs_sum += std::abs(diff);
        sq_sum += diff * diff;
    }
    const double count = static_cast<double>(y.size());
    report.mae = abs_sum / count;
    report.mse = sq_sum / count;
    report.rmse = std::sqrt(report.mse);

    const double y_mean = mean(y);
    double sst = 0.0;
    for (const double value : y) sst += (value - y_mean) * (value - y_mean);
    if (sst > 0.0) report.r2 = 1.0 - sq_sum / sst;
    return report;
}

ExtremeThresholds compute_thresholds(std::span<const double> series) {
    if (series.empty()) throw std::invalid_argument("threshold series is empty");
    ExtremeThresholds thresholds;
    thresholds.mean = mean(series);
    thresholds.std = population_std(series);
    thresholds.t1 = std::lround(thresholds.mean + 1.0 * thresholds.std);
    thresholds.t2 = std::lround(thresholds.mean + 2.0 * thresholds.std);
    thresholds.t3 = std::lround(thresholds.mean + 3.0 * thresholds.std);
    if (!(thresholds.t1 < thresholds.t2 && thresholds.t2 < thresholds.t3)) {
        throw std::invalid_argument("degenerate boarding series: extreme thresholds collapse");
    }
    return thresholds;
}

std::string_view extreme_category_name(ExtremeCategory category) {
    switch (category) {
        case ExtremeCategory::kNormal: return "normal";
        case ExtremeCategory::kExtreme: return "extreme";
        case ExtremeCategory::kVeryExtreme: return "very_extreme";
        case ExtremeCategory::kHighlyExtreme: return "highly_extreme";
    }
    throw std::logic_error("unreachable extreme category");
}

ExtremeCategory classify_extreme(double value, const ExtremeThresholds& thresholds) {
    if (value <= static_cast<double>(thresholds.t1)) return ExtremeCategory::kNormal;
    if (value <= static_cast<double>(thresholds.t2)) return ExtremeCategory::kExtreme;
    if (value <= static_cast<double>(thresholds.t3)) return ExtremeCategory::kVeryExtreme;
    return ExtremeCategory::kHighlyExtreme;
}

std::string ExtremeSliceReport::to_json() const {
    ordered_json doc;
    doc["cumulative"] = ordered_json::array();
    for (const SliceStats& stats : cumulative) doc["cumulative"].push_back(slice_to_json(stats));
    doc["bands"] = ordered_json::array();
    for (const SliceStats& stats : bands) doc["bands"].push_back(slice_to_json(stats));
    return doc.dump(2);
}

ExtremeSliceReport extreme_slice_mae(std::span<const double> y, std::span<const double> yhat,
                                     const ExtremeThresholds& thresholds) {
    if (y.size() != yhat.size()) {
        throw std::invalid_argument("actual and predicted lengths differ");
    }
    ExtremeSliceReport report;
    const long cutoffs[3] = {thresholds.t1, thresholds.t2, thresholds.t3};
    for (const long cutoff : cutoffs) {
        std::vector<double> errors;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] > static_cast<double>(cutoff)) errors.push_back(std::abs(yhat[i] - y[i]));
        }
        report.cumulative.push_back(slice_stats("above_" + std::to_string(cutoff), errors));
    }
    const ExtremeCategory categories[4] = {
        ExtremeCategory::kNormal, ExtremeCategory::kExtreme, ExtremeCategory::kVeryExtreme,
        ExtremeCategory::kHighlyExtreme};
    for (const ExtremeCategory category : categories) {
        std::vector<double> errors;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (classify_extreme(y[i], thresholds) == category) {
                errors.push_back(std::abs(yhat[i] - y[i]));
            }
        }
        report.bands.push_back(
            slice_stats(std::string(extreme_category_name(category)), errors));
    }
    return report;
}

std::string_view baseline_kind_name(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::kPersistence: return "persistence";
        case BaselineKind::kSeasonalNaive24h: return "seasonal_naive_24h";
    }
    throw std::logic_error("unreachable baseline kind");
}

std::vector<BaselinePrediction> baseline_forecasts(std::span<const Timestamp> hours,
                                                   std::span<const double> y, BaselineKind kind,
                                                   int horizon) {
    if (hours.size() != y.size()) {
        throw std::invalid_argument("hour and value lengths differ");
    }
    if (horizon < 1) throw std::invalid_argument("baseline horizon must be at least 1");
    const auto rows = row_by_hour(hours);
    std::vector<BaselinePrediction> predictions;
    for (std::size_t target = 0; target < hours.size(); ++target) {
        const Timestamp origin_hour = hours[target] - horizon * kSecondsPerHour;
        const auto origin = rows.find(origin_hour);
        if (origin == rows.end()) continue;
        if (kind == BaselineKind::kPersistence) {
            predictions.push_back({target, y[origin->second]});
        } else {
            const auto source = rows.find(hours[target] - 24 * kSecondsPerHour);
            if (source == rows.end()) continue;
            predictions.push_back({target, y[source->second]});
        }
    }
    return predictions;
}

std::pair<std::vector<double>, std::vector<double>> align_step(
    const std::vector<ForecastDecomposition>& forecasts, std::span<const Timestamp> hours,
    std::span<const double> actual, int step) {
    if (hours.size() != actual.size()) {
        throw std::invalid_argument("hour and value lengths differ");
    }
    if (step < 1) throw std::invalid_argument("horizon step is 1-based");
    const auto rows = row_by_hour(hours);
    std::vector<double> y;
    std::vector<double> yhat;
    for (const ForecastDecomposition& forecast : forecasts) {
        if (step > forecast.total.size()) {
            throw std::invalid_argument("horizon step exceeds the forecast length");
        }
        const auto row = rows.find(forecast.anchor + step * kSecondsPerHour);
        if (row == rows.end()) continue;
        y.push_back(actual[row->second]);
        yhat.push_back(forecast.total[step - 1]);
    }
    return {std::move(y), std::move(yhat)};
}

std::string export_decomposition(const std::vector<ForecastDecomposition>& forecasts,
                                 std::span<const Timestamp> hours, std::span<const double> actual,
                                 Date day) {
    if (hours.size() != actual.size()) {
        throw std::invalid_argument("hour and value lengths differ");
    }
    if (forecasts.empty()) throw std::invalid_argument("no forecasts to export");
    const auto horizon = forecasts.front().total.size();

    std::unordered_map<Timestamp, const ForecastDecomposition*> by_target;
    for (const ForecastDecomposition& forecast : forecasts) {
        if (forecast.total.size() != horizon) {
            throw std::invalid_argument("forecasts have mixed horizon lengths");
        }
        by_target.emplace(forecast.anchor + horizon * kSecondsPerHour, &forecast);
    }
    const auto actual_rows = row_by_hour(hours);

    Eigen::VectorXd actual_day(24);
    Eigen::MatrixXd components(24, 4);  // total, trend, seasonality, exogenous
    const Timestamp start = day_start(day);
    for (int k = 0; k < 24; ++k) {
        const Timestamp hour = start + k * kSecondsPerHour;
        const auto forecast = by_target.find(hour);
        const auto row = actual_rows.find(hour);
        if (forecast == by_target.end() || row == actual_rows.end()) {
            throw std::invalid_argument("day " + format_date(day) +
                                        " is not fully covered by forecasts and actuals");
        }
        const auto last = horizon - 1;
        actual_day[k] = actual[row->second];
        components(k, 0) = forecast->second->total[last];
        components(k, 1) = forecast->second->trend[last];
        components(k, 2) = forecast->second->seasonality[last];
        components(k, 3) = forecast->second->exogenous[last];
    }

    std::string csv;
    append_csv_row(csv, {"hour", "actual", "total", "trend", "seasonality", "exogenous",
                         "trend_centered", "seasonality_centered", "exogenous_centered"});
    const double trend_mean = components.col(1).mean();
    const double seasonality_mean = components.col(2).mean();
    const double exogenous_mean = components.col(3).mean();
    for (int k = 0; k < 24; ++k) {
        const Timestamp hour = start + k * kSecondsPerHour;
        append_csv_row(csv, {format_timestamp(hour), format_double(actual_day[k]),
                             format_double(components(k, 0)), format_double(components(k, 1)),
                             format_double(components(k, 2)), format_double(components(k, 3)),
                             format_double(components(k, 1) - trend_mean),
                             format_double(components(k, 2) - seasonality_mean),
                             format_double(components(k, 3) - exogenous_mean)});
    }
    return csv;
}

}  // namespace edflow
