#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "edflow/ingest.hpp"
#include "edflow/table.hpp"
#include "edflow/time.hpp"

namespace edflow {

enum class WeatherCategory { kClear, kClouds, kRain, kThunderstorm, kOthers };

// Total mapping from the ten raw conditions onto five categories:
// Clear -> Clear; Clouds, Mist -> Clouds; Rain, Drizzle -> Rain;
// Thunderstorm -> Thunderstorm; Fog, Haze, Snow, Smoke -> Others.
WeatherCategory group_weather(WeatherCondition condition);
std::string_view weather_category_name(WeatherCategory category);

struct CleanLimits {
    std::int64_t waiting_limit_seconds = 9 * kSecondsPerHour;
    std::int64_t boarding_limit_seconds = 300 * kSecondsPerHour;
    // Seven months at 30.44 days per month, rounded to whole hours.
    std::int64_t treatment_limit_seconds = 5112 * kSecondsPerHour;
};

struct CleaningReport {
    std::size_t total_visits = 0;
    std::size_t waiting_over_limit = 0;
    std::size_t boarding_over_limit = 0;
    std::size_t treatment_over_limit = 0;
    std::size_t excluded = 0;
    std::size_t esi_imputed = 0;

    std::string to_json() const;
};

// Drops visits whose waiting, boarding, or treatment duration exceeds the
// corresponding limit (strictly greater). Rule counters are independent; a
// visit violating several rules increments each but is excluded once.
std::pair<std::vector<VisitTimeline>, CleaningReport> clean_visits(
    const std::vector<VisitTimeline>& visits, const CleanLimits& limits = {});

// Fills missing acuity with ESI level 3 and leaves everything else alone.
// Returns the visits and the number imputed.
std::pair<std::vector<VisitTimeline>, std::size_t> impute_esi(std::vector<VisitTimeline> visits);

// Pandemic-era rows dropped from the assembled table by default.
std::pair<Timestamp, Timestamp> covid_exclusion_window();

// Removes rows with hours inside the closed window; the resulting hour gap
// splits the table into segments that windowed transforms must not cross.
HourlyTable exclude_window(const HourlyTable& table, Timestamp from, Timestamp to);

enum class RollingAlignment { kCentered, kTrailing };

// Adds columns <col>_lag_1 .. <col>_lag_W holding the value k rows earlier
// within the same contiguous segment. Rows whose lag would cross a gap or
// the series start are marked warmup and hold 0.
void add_lags(HourlyTable& table, const std::string& column, int lags);

// Adds <col>_roll_<W> holding the window mean. Centered alignment reads
// future rows, which leaks ahead-of-time information into forecasting
// features; a warning is printed once per process. Incomplete windows are
// marked warmup and hold 0.
void add_rolling_mean(HourlyTable& table, const std::string& column, int window,
                      RollingAlignment alignment = RollingAlignment::kCentered);

}  // namespace edflow
