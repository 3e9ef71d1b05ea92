#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "edflow/csv.hpp"
#include "edflow/eval.hpp"
#include "edflow/rng.hpp"
#include "edflow/time.hpp"

using namespace edflow;

namespace {

std::vector<Timestamp> contiguous_hours(std::size_t n,
                                        Timestamp start = day_start(make_date(2023, 5, 1))) {
    std::vector<Timestamp> hours(n);
    for (std::size_t i = 0; i < n; ++i) hours[i] = start + static_cast<Timestamp>(i) * kSecondsPerHour;
    return hours;
}

// Alternating series around the published boarding statistics: mean 28.7,
// population std 11.2.
std::vector<double> published_stats_series(std::size_t n = 200) {
    std::vector<double> series(n);
    for (std::size_t i = 0; i < n; ++i) series[i] = i % 2 == 0 ? 17.5 : 39.9;
    return series;
}

}  // namespace

TEST_CASE("regression metrics match direct arithmetic") {
    const std::vector<double> y = {1.0, 2.0};
    const std::vector<double> yhat = {2.0, 4.0};
    const auto report = regression_metrics(y, yhat);
    CHECK(report.mae == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(report.mse == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(report.rmse == doctest::Approx(std::sqrt(2.5)).epsilon(1e-15));
    CHECK(report.n == 2);

    const auto perfect = regression_metrics(y, y);
    CHECK(perfect.mae == 0.0);
    CHECK(perfect.mse == 0.0);
    REQUIRE(perfect.r2.has_value());
    CHECK(*perfect.r2 == 1.0);

    const std::vector<double> wide = {1.0, 2.0, 3.0, 4.0};
    const std::vector<double> at_mean(4, 2.5);
    const auto centered = regression_metrics(wide, at_mean);
    REQUIRE(centered.r2.has_value());
    CHECK(*centered.r2 == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("constant actuals leave the fit coefficient undefined") {
    const std::vector<double> y(5, 7.0);
    const std::vector<double> yhat = {6.0, 7.0, 8.0, 7.5, 6.5};
    const auto report = regression_metrics(y, yhat);
    CHECK(!report.r2.has_value());
    CHECK(report.mae > 0.0);
    CHECK(report.to_json().find("\"r2\": null") != std::string::npos);
}

TEST_CASE("metrics reject mismatched or tiny inputs") {
    CHECK_THROWS_AS(regression_metrics(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(regression_metrics(std::vector<double>{1.0}, std::vector<double>{1.0}),
                    std::invalid_argument);
}

TEST_CASE("error metrics satisfy their ordering and consistency laws") {
    Rng rng(77);
    for (int round = 0; round < 25; ++round) {
        std::vector<double> y(40);
        std::vector<double> yhat(40);
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = rng.normal(30.0, 10.0);
            yhat[i] = y[i] + rng.normal(0.0, 4.0);
        }
        const auto report = regression_metrics(y, yhat);
        CHECK(report.mae <= report.rmse + 1e-12);
        CHECK(report.rmse * report.rmse == doctest::Approx(report.mse).epsilon(1e-15));
        REQUIRE(report.r2.has_value());
        CHECK(*report.r2 <= 1.0);

        // Reordering the pairs must not change any aggregate.
        std::vector<std::size_t> order(y.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        std::vector<double> y_shuffled;
        std::vector<double> yhat_shuffled;
        for (std::size_t idx : order) {
            y_shuffled.push_back(y[idx]);
            yhat_shuffled.push_back(yhat[idx]);
        }
        const auto shuffled = regression_metrics(y_shuffled, yhat_shuffled);
        CHECK(shuffled.mae == doctest::Approx(report.mae).epsilon(1e-12));
        CHECK(shuffled.mse == doctest::Approx(report.mse).epsilon(1e-12));
        CHECK(*shuffled.r2 == doctest::Approx(*report.r2).epsilon(1e-12));
    }
}

TEST_CASE("thresholds reproduce the published cutoffs from series statistics") {
    const auto series = published_stats_series();
    const auto thresholds = compute_thresholds(series);
    CHECK(thresholds.mean == doctest::Approx(28.7).epsilon(1e-12));
    CHECK(thresholds.std == doctest::Approx(11.2).epsilon(1e-12));
    CHECK(thresholds.t1 == 40);
    CHECK(thresholds.t2 == 51);
    CHECK(thresholds.t3 == 62);
}

TEST_CASE("thresholds follow hand-computed statistics on a small series") {
    const std::vector<double> series = {10.0, 20.0, 30.0};
    const auto thresholds = compute_thresholds(series);
    const double sigma = std::sqrt(200.0 / 3.0);
    CHECK(thresholds.mean == doctest::Approx(20.0).epsilon(1e-15));
    CHECK(thresholds.std == doctest::Approx(sigma).epsilon(1e-12));
    CHECK(thresholds.t1 == std::lround(20.0 + sigma));
    CHECK(thresholds.t2 == std::lround(20.0 + 2 * sigma));
    CHECK(thresholds.t3 == std::lround(20.0 + 3 * sigma));
}

TEST_CASE("degenerate threshold inputs are rejected") {
    CHECK_THROWS_AS(compute_thresholds(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(compute_thresholds(std::vector<double>(10, 42.0)), std::invalid_argument);
}

TEST_CASE("extreme classification splits on strictly-greater boundaries") {
    const auto thresholds = compute_thresholds(published_stats_series());
    CHECK(classify_extreme(40.0, thresholds) == ExtremeCategory::kNormal);
    CHECK(classify_extreme(41.0, thresholds) == ExtremeCategory::kExtreme);
    CHECK(classify_extreme(51.0, thresholds) == ExtremeCategory::kExtreme);
    CHECK(classify_extreme(52.0, thresholds) == ExtremeCategory::kVeryExtreme);
    CHECK(classify_extreme(62.0, thresholds) == ExtremeCategory::kVeryExtreme);
    CHECK(classify_extreme(63.0, thresholds) == ExtremeCategory::kHighlyExtreme);
    CHECK(classify_extreme(0.0, thresholds) == ExtremeCategory::kNormal);
}

TEST_CASE("extreme categories partition any dataset") {
    const auto thresholds = compute_thresholds(published_stats_series());
    Rng rng(5);
    std::vector<double> values(500);
    for (auto& value : values) value = rng.uniform(0.0, 90.0);
    std::size_t counts[4] = {};
    for (const double value : values) {
        counts[static_cast<std::size_t>(classify_extreme(value, thresholds))] += 1;
    }
    CHECK(counts[0] + counts[1] + counts[2] + counts[3] == values.size());
}

TEST_CASE("slice MAE equals a brute-force filtered average") {
    const auto thresholds = compute_thresholds(published_stats_series());
    Rng rng(11);
    std::vector<double> y(300);
    std::vector<double> yhat(300);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = rng.uniform(0.0, 80.0);
        yhat[i] = y[i] + rng.normal(0.0, 5.0);
    }
    const auto report = extreme_slice_mae(y, yhat, thresholds);
    REQUIRE(report.cumulative.size() == 3);
    REQUIRE(report.bands.size() == 4);

    const long cutoffs[3] = {thresholds.t1, thresholds.t2, thresholds.t3};
    for (int k = 0; k < 3; ++k) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] > static_cast<double>(cutoffs[k])) {
                sum += std::abs(yhat[i] - y[i]);
                count += 1;
            }
        }
        CHECK(report.cumulative[static_cast<std::size_t>(k)].count == count);
        REQUIRE(report.cumulative[static_cast<std::size_t>(k)].mae.has_value());
        CHECK(*report.cumulative[static_cast<std::size_t>(k)].mae ==
              doctest::Approx(sum / static_cast<double>(count)).epsilon(1e-12));
    }
    std::size_t band_total = 0;
    for (const auto& band : report.bands) band_total += band.count;
    CHECK(band_total == y.size());
}

TEST_CASE("slice over a threshold below the minimum equals the full MAE") {
    ExtremeThresholds thresholds;
    thresholds.t1 = 1;
    thresholds.t2 = 2;
    thresholds.t3 = 3;
    std::vector<double> y = {10.0, 12.0, 15.0, 11.0};
    std::vector<double> yhat = {9.0, 14.0, 15.5, 10.0};
    const auto report = extreme_slice_mae(y, yhat, thresholds);
    const auto full = regression_metrics(y, yhat);
    REQUIRE(report.cumulative[0].mae.has_value());
    CHECK(*report.cumulative[0].mae == full.mae);
    CHECK(report.cumulative[0].count == y.size());
}

TEST_CASE("empty slices are reported without a value") {
    ExtremeThresholds thresholds;
    thresholds.t1 = 100;
    thresholds.t2 = 200;
    thresholds.t3 = 300;
    std::vector<double> y = {1.0, 2.0, 3.0};
    std::vector<double> yhat = {1.0, 2.0, 3.0};
    const auto report = extreme_slice_mae(y, yhat, thresholds);
    for (const auto& slice : report.cumulative) {
        CHECK(slice.count == 0);
        CHECK(!slice.mae.has_value());
    }
    CHECK(report.to_json().find("null") != std::string::npos);
    // Perfect predictions: every non-empty band has MAE zero.
    REQUIRE(report.bands[0].mae.has_value());
    CHECK(*report.bands[0].mae == 0.0);
}

TEST_CASE("persistence carries the forecast-origin value forward") {
    const auto hours = contiguous_hours(40);
    std::vector<double> y(40, 13.0);
    const auto constant = baseline_forecasts(hours, y, BaselineKind::kPersistence, 6);
    CHECK(constant.size() == 34);
    for (const auto& prediction : constant) {
        CHECK(prediction.value == y[prediction.target_row]);
        CHECK(prediction.target_row >= 6);
    }

    Rng rng(3);
    for (std::size_t i = 1; i < y.size(); ++i) y[i] = y[i - 1] + rng.normal(0.0, 2.0);
    const auto walk = baseline_forecasts(hours, y, BaselineKind::kPersistence, 6);
    double direct = 0.0;
    std::vector<double> actuals;
    std::vector<double> predicted;
    for (std::size_t t = 6; t < y.size(); ++t) direct += std::abs(y[t] - y[t - 6]);
    direct /= static_cast<double>(y.size() - 6);
    for (const auto& prediction : walk) {
        actuals.push_back(y[prediction.target_row]);
        predicted.push_back(prediction.value);
    }
    const auto report = regression_metrics(actuals, predicted);
    CHECK(report.mae == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("seasonal naive nails an exactly daily-periodic series") {
    const auto hours = contiguous_hours(24 * 5);
    std::vector<double> y(hours.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = 20.0 + 8.0 * std::sin(2.0 * 3.14159265358979 * static_cast<double>(i % 24) / 24.0);
    }
    const auto predictions = baseline_forecasts(hours, y, BaselineKind::kSeasonalNaive24h, 6);
    CHECK(!predictions.empty());
    for (const auto& prediction : predictions) {
        CHECK(prediction.value == y[prediction.target_row]);
    }
}

TEST_CASE("baselines skip anchors that a gap makes unavailable") {
    auto hours = contiguous_hours(48);
    // Remove one mid-series hour.
    hours.erase(hours.begin() + 20);
    std::vector<double> y(hours.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(i);

    const auto predictions = baseline_forecasts(hours, y, BaselineKind::kPersistence, 6);
    // Targets 6..47 minus the removed hour itself minus the target whose
    // origin fell on the removed hour.
    CHECK(predictions.size() == 40);
    std::vector<Timestamp> hour_list(hours.begin(), hours.end());
    for (const auto& prediction : predictions) {
        const Timestamp origin = hour_list[prediction.target_row] - 6 * kSecondsPerHour;
        CHECK(std::count(hour_list.begin(), hour_list.end(), origin) == 1);
    }
}

TEST_CASE("per-step alignment pairs forecasts with actuals by timestamp") {
    const auto hours = contiguous_hours(30);
    std::vector<double> actual(hours.size());
    for (std::size_t i = 0; i < actual.size(); ++i) actual[i] = 100.0 + static_cast<double>(i);

    std::vector<ForecastDecomposition> forecasts;
    for (std::size_t t = 10; t <= 20; ++t) {
        ForecastDecomposition forecast;
        forecast.anchor = hours[t];
        forecast.total = Eigen::VectorXd::LinSpaced(6, 1.0, 6.0) * static_cast<double>(t);
        forecast.trend = forecast.total;
        forecast.seasonality = Eigen::VectorXd::Zero(6);
        forecast.exogenous = Eigen::VectorXd::Zero(6);
        forecasts.push_back(std::move(forecast));
    }

    const auto [y6, yhat6] = align_step(forecasts, hours, actual, 6);
    REQUIRE(y6.size() == 11);
    for (std::size_t i = 0; i < y6.size(); ++i) {
        const std::size_t t = 10 + i;
        CHECK(y6[i] == actual[t + 6]);
        CHECK(yhat6[i] == 6.0 * static_cast<double>(t));
    }

    const auto [y1, yhat1] = align_step(forecasts, hours, actual, 1);
    CHECK(y1.size() == 11);
    CHECK(yhat1.front() == 10.0);

    // Forecasts whose target hour has no observed row are dropped.
    std::vector<Timestamp> short_hours(hours.begin(), hours.begin() + 20);
    std::vector<double> short_actual(actual.begin(), actual.begin() + 20);
    const auto [ys, yhats] = align_step(forecasts, short_hours, short_actual, 6);
    CHECK(ys.size() == 4);  // anchors 10..13 have targets inside the short series

    CHECK_THROWS_AS(align_step(forecasts, hours, actual, 7), std::invalid_argument);
    CHECK_THROWS_AS(align_step(forecasts, hours, actual, 0), std::invalid_argument);
}

TEST_CASE("decomposition export writes a centered 24-hour table") {
    const Date day = make_date(2023, 5, 10);
    const Timestamp start = day_start(day);
    const auto hours = contiguous_hours(24 * 3, start - 24 * kSecondsPerHour);
    std::vector<double> actual(hours.size());
    Rng rng(9);
    for (auto& value : actual) value = rng.uniform(10.0, 60.0);

    std::vector<ForecastDecomposition> forecasts;
    for (std::size_t t = 0; t + 6 < hours.size(); ++t) {
        ForecastDecomposition forecast;
        forecast.anchor = hours[t];
        forecast.trend = Eigen::VectorXd::Constant(6, 25.0 + 0.1 * static_cast<double>(t));
        forecast.seasonality = Eigen::VectorXd::Zero(6);
        for (int h = 0; h < 6; ++h) {
            forecast.seasonality[h] = 5.0 * std::sin(static_cast<double>(t + 7 * h));
        }
        forecast.exogenous = Eigen::VectorXd::Constant(6, rng.normal(0.0, 1.0));
        forecast.total = forecast.trend + forecast.seasonality + forecast.exogenous;
        forecasts.push_back(std::move(forecast));
    }

    const std::string csv = export_decomposition(forecasts, hours, actual, day);
    const CsvFile parsed = parse_csv(csv);
    CHECK(parsed.header ==
          std::vector<std::string>{"hour", "actual", "total", "trend", "seasonality", "exogenous",
                                   "trend_centered", "seasonality_centered", "exogenous_centered"});
    REQUIRE(parsed.rows.size() == 24);

    double centered_sums[3] = {0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < 24; ++k) {
        const auto& fields = parsed.rows[k].fields;
        CHECK(fields[0] == format_timestamp(start + static_cast<Timestamp>(k) * kSecondsPerHour));
        const double total = *parse_double(fields[2]);
        const double trend = *parse_double(fields[3]);
        const double seasonality = *parse_double(fields[4]);
        const double exogenous = *parse_double(fields[5]);
        CHECK(trend + seasonality + exogenous == total);
        for (int c = 0; c < 3; ++c) centered_sums[c] += *parse_double(fields[6 + c]);
    }
    for (const double sum : centered_sums) CHECK(std::abs(sum) <= 1e-9);

    // Remove the forecast for the day's first hour: no longer fully covered.
    std::vector<ForecastDecomposition> partial(forecasts.begin() + 1, forecasts.end());
    std::vector<ForecastDecomposition> shifted;
    for (const auto& forecast : partial) {
        if (forecast.anchor != start - 6 * kSecondsPerHour) shifted.push_back(forecast);
    }
    CHECK_THROWS_AS(export_decomposition(shifted, hours, actual, day), std::invalid_argument);
}
