#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "edflow/ingest.hpp"
#include "edflow/table.hpp"
#include "edflow/time.hpp"

namespace edflow {

enum class Phase { kBoarding, kWaiting, kTreatment };

// Acuity groups: ESI {1,2}, {3}, {4,5}. Obstetrics and missing codes fall
// into the middle group, the majority class.
enum class EsiGroup { kG12, kG3, kG45 };

EsiGroup esi_group(const std::optional<EsiCode>& esi);

// Half-open [start, end) interval of the visit's phase, or nothing when a
// bounding milestone is absent.
std::optional<std::pair<Timestamp, Timestamp>> phase_interval(const VisitTimeline& visit,
                                                              Phase phase);

// Number of visits whose phase interval contains the top-of-hour instant,
// optionally restricted to one acuity group. Sorted event sweep.
std::vector<double> hourly_phase_count(const std::vector<VisitTimeline>& visits, Phase phase,
                                       const HourIndex& index,
                                       std::optional<EsiGroup> esi_filter = std::nullopt);

// Per-hour count of in-phase visits and total elapsed seconds since each
// one's phase start. Integer bookkeeping so independent computations of the
// same quantity can be compared exactly.
struct ElapsedSums {
    std::vector<std::int64_t> count;
    std::vector<std::int64_t> seconds;
};

ElapsedSums hourly_elapsed_sums(const std::vector<VisitTimeline>& visits, Phase phase,
                                const HourIndex& index);

// Mean elapsed time in minutes among in-phase visits at each hour; 0 when
// none are in phase.
std::vector<double> hourly_avg_elapsed(const std::vector<VisitTimeline>& visits, Phase phase,
                                       const HourIndex& index);

// Snapshot count of admitted inpatients: arrival <= h < discharge.
std::vector<double> hourly_census(const std::vector<InpatientStay>& stays,
                                  const HourIndex& index);

// 1 where value > mean + population std of the whole series, else 0.
std::vector<double> extreme_indicator(const std::vector<double>& values);

struct AssembleOptions {
    // When set, the extreme indicator uses this cutoff instead of the
    // series-derived mean + std.
    std::optional<double> extreme_threshold;
};

// Joins the nine flow metrics, census, calendar fields, weather, and event
// flags into one hourly table. Weather is forward-filled onto hours without
// an observation; hours before the first observation take the first one.
HourlyTable assemble_hourly_records(const std::vector<VisitTimeline>& visits,
                                    const std::vector<InpatientStay>& stays,
                                    const std::vector<WeatherObservation>& weather,
                                    const CalendarFlags& calendar, const HourIndex& index,
                                    const AssembleOptions& options = {});

// Column names of the assembled table, in order (hour excluded).
const std::vector<std::string>& hourly_record_columns();

}  // namespace edflow
