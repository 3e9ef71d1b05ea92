#include "edflow/preprocess.hpp"

#include <iostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace edflow {
namespace {

bool duration_over(const std::optional<Timestamp>& start, const std::optional<Timestamp>& end,
                   std::int64_t limit) {
    return start && end && *end - *start > limit;
}

double rule_fraction(std::size_t count, std::size_t total) {
    return total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total);
}

}  // namespace

WeatherCategory group_weather(WeatherCondition condition) {
    switch (condition) {
        case WeatherCondition::Clear:
            return WeatherCategory::kClear;
        case WeatherCondition::Clouds:
        case WeatherCondition::Mist:
            return WeatherCategory::kClouds;
        case WeatherCondition::Rain:
        case WeatherCondition::Drizzle:
            return WeatherCategory::kRain;
        case WeatherCondition::Thunderstorm:
            return WeatherCategory::kThunderstorm;
        case WeatherCondition::Fog:
        case WeatherCondition::Haze:
        case WeatherCondition::Snow:
        case WeatherCondition::Smoke:
            return WeatherCategory::kOthers;
    }
    throw std::invalid_argument("unknown weather condition");
}

std::string_view weather_category_name(WeatherCategory category) {
    switch (category) {
        case WeatherCategory::kClear: return "Clear";
        case WeatherCategory::kClouds: return "Clouds";
        case WeatherCategory::kRain: return "Rain";
        case WeatherCategory::kThunderstorm: return "Thunderstorm";
        case WeatherCategory::kOthers: return "Others";
    }
    throw std::invalid_argument("unknown weather category");
}

std::string CleaningReport::to_json() const {
    nlohmann::ordered_json j;
    j["total_visits"] = total_visits;
    j["waiting_over_limit"] = {{"count", waiting_over_limit},
                               {"fraction", rule_fraction(waiting_over_limit, total_visits)}};
    j["boarding_over_limit"] = {{"count", boarding_over_limit},
                                {"fraction", rule_fraction(boarding_over_limit, total_visits)}};
    j["treatment_over_limit"] = {{"count", treatment_over_limit},
                                 {"fraction", rule_fraction(treatment_over_limit, total_visits)}};
    j["excluded"] = {{"count", excluded}, {"fraction", rule_fraction(excluded, total_visits)}};
    j["esi_imputed"] = {{"count", esi_imputed}, {"fraction", rule_fraction(esi_imputed, total_visits)}};
    return j.dump(2) + "\n";
}

std::pair<std::vector<VisitTimeline>, CleaningReport> clean_visits(
    const std::vector<VisitTimeline>& visits, const CleanLimits& limits) {
    CleaningReport report;
    report.total_visits = visits.size();

    std::vector<VisitTimeline> kept;
    kept.reserve(visits.size());
    for (const auto& visit : visits) {
        bool waiting = duration_over(visit.waiting_start, visit.waiting_end,
                                     limits.waiting_limit_seconds);
        bool boarding = duration_over(visit.bed_request, std::optional<Timestamp>(visit.checkout),
                                      limits.boarding_limit_seconds);
        bool treatment = duration_over(visit.treatment_start, visit.treatment_end,
                                       limits.treatment_limit_seconds);
        report.waiting_over_limit += waiting;
        report.boarding_over_limit += boarding;
        report.treatment_over_limit += treatment;
        if (waiting || boarding || treatment) {
            ++report.excluded;
        } else {
            kept.push_back(visit);
        }
    }
    return {std::move(kept), report};
}

std::pair<std::vector<VisitTimeline>, std::size_t> impute_esi(std::vector<VisitTimeline> visits) {
    std::size_t imputed = 0;
    for (auto& visit : visits) {
        if (!visit.esi) {
            visit.esi = EsiCode::level(3);
            ++imputed;
        }
    }
    return {std::move(visits), imputed};
}

std::pair<Timestamp, Timestamp> covid_exclusion_window() {
    Timestamp from = day_start(make_date(2020, 4, 1));
    Timestamp to = day_start(make_date(2020, 7, 31)) + 23 * kSecondsPerHour;
    return {from, to};
}

HourlyTable exclude_window(const HourlyTable& table, Timestamp from, Timestamp to) {
    return table.without_window(from, to);
}

void add_lags(HourlyTable& table, const std::string& column, int lags) {
    if (lags < 1) throw std::invalid_argument("lag count must be positive");
    if (static_cast<std::size_t>(lags) >= table.rows()) {
        throw std::invalid_argument("lag window " + std::to_string(lags) +
                                    " covers the whole table");
    }
    // Copy: adding columns reallocates the table's storage.
    const std::vector<double> values = table.column(column);
    const auto segments = table.segment_ids();
    const std::size_t n = table.rows();

    for (int k = 1; k <= lags; ++k) {
        std::vector<double> lagged(n, 0.0);
        std::vector<std::size_t> warm;
        for (std::size_t t = 0; t < n; ++t) {
            if (t >= static_cast<std::size_t>(k) && segments[t - k] == segments[t]) {
                lagged[t] = values[t - k];
            } else {
                warm.push_back(t);
            }
        }
        table.add_column(column + "_lag_" + std::to_string(k), std::move(lagged));
        for (std::size_t t : warm) table.mark_warmup(t);
    }
}

void add_rolling_mean(HourlyTable& table, const std::string& column, int window,
                      RollingAlignment alignment) {
    if (window < 2) throw std::invalid_argument("rolling window must be at least 2");
    if (static_cast<std::size_t>(window) > table.rows()) {
        throw std::invalid_argument("rolling window exceeds table length");
    }
    if (alignment == RollingAlignment::kCentered) {
        static bool warned = false;
        if (!warned) {
            warned = true;
            std::cerr << "warning: centered rolling means read future rows; such a feature is "
                         "not computable at forecast time. Use trailing alignment for "
                         "deployable features.\n";
        }
    }

    const auto& values = table.column(column);
    const auto segments = table.segment_ids();
    const std::size_t n = table.rows();
    const std::size_t w = static_cast<std::size_t>(window);

    std::vector<double> rolled(n, 0.0);
    std::vector<std::size_t> warm;
    for (std::size_t t = 0; t < n; ++t) {
        // Centered windows place even widths one step heavier on the past,
        // the same labeling pandas uses.
        std::size_t first;
        if (alignment == RollingAlignment::kCentered) {
            std::size_t back = w / 2;
            if (t < back) {
                warm.push_back(t);
                continue;
            }
            first = t - back;
        } else {
            if (t + 1 < w) {
                warm.push_back(t);
                continue;
            }
            first = t + 1 - w;
        }
        std::size_t last = first + w - 1;
        if (last >= n || segments[first] != segments[t] || segments[last] != segments[t]) {
            warm.push_back(t);
            continue;
        }
        double sum = 0.0;
        for (std::size_t i = first; i <= last; ++i) sum += values[i];
        rolled[t] = sum / static_cast<double>(w);
    }
    table.add_column(column + "_roll_" + std::to_string(window), std::move(rolled));
    for (std::size_t t : warm) table.mark_warmup(t);
}

}  // namespace edflow
