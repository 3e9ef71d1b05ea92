#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "edflow/time.hpp"

namespace edflow {

// Emergency Severity Index value: levels 1..5 plus the obstetrics marker.
struct EsiCode {
    static constexpr int kObstetrics = 0;

    int code = kObstetrics;

    static EsiCode level(int value) { return EsiCode{value}; }
    static EsiCode obstetrics() { return EsiCode{kObstetrics}; }

    bool is_obstetrics() const { return code == kObstetrics; }
    bool valid() const { return code >= 0 && code <= 5; }

    bool operator==(const EsiCode&) const = default;
};

std::optional<EsiCode> parse_esi(std::string_view text);  // "1".."5" or "OB"
std::string format_esi(const EsiCode& esi);

// Per-visit milestone timestamps. Present milestones are non-decreasing in
// declaration order; arrival and checkout are mandatory.
struct VisitTimeline {
    std::string visit_id;
    Timestamp arrival = 0;
    std::optional<Timestamp> waiting_start;
    std::optional<Timestamp> waiting_end;
    std::optional<Timestamp> treatment_start;
    std::optional<Timestamp> treatment_end;
    std::optional<Timestamp> bed_request;
    Timestamp checkout = 0;
    std::optional<EsiCode> esi;

    bool operator==(const VisitTimeline&) const = default;
};

// Returns a reason code when an invariant is violated, nullopt when valid.
std::optional<std::string> validate_visit(const VisitTimeline& visit);

struct InpatientStay {
    std::string visit_id;
    Timestamp arrival = 0;
    Timestamp discharge = 0;

    bool operator==(const InpatientStay&) const = default;
};

enum class WeatherCondition {
    Clouds, Clear, Rain, Mist, Thunderstorm, Drizzle, Fog, Haze, Snow, Smoke,
};

inline constexpr int kWeatherConditionCount = 10;

std::optional<WeatherCondition> parse_weather_condition(std::string_view text);
std::string_view weather_condition_name(WeatherCondition condition);

struct WeatherObservation {
    Timestamp hour = 0;  // truncated to the hour
    WeatherCondition condition = WeatherCondition::Clear;
    double temperature_f = 0.0;

    bool operator==(const WeatherObservation&) const = default;
};

// Date sets for the binary context indicators; flags apply to all 24 hours
// of each listed date.
struct CalendarFlags {
    std::set<Date> holidays;
    std::set<Date> game1;
    std::set<Date> game2;
};

struct RejectedRow {
    std::size_t line = 0;  // physical line number in the source
    std::string reason;    // machine-readable reason code
};

template <typename Record>
struct ParseResult {
    std::vector<Record> records;
    std::vector<RejectedRow> rejected;
    std::size_t total_rows = 0;  // records.size() + rejected.size()
};

// Parsers are total over their input: every data row lands either in
// records or in the rejection report. An unusable stream (missing or wrong
// header) throws std::runtime_error.
ParseResult<VisitTimeline> parse_ed_tracking(std::string_view content);
ParseResult<InpatientStay> parse_inpatient(std::string_view content);
// Duplicate hours resolved by keeping the last occurrence; output sorted.
ParseResult<WeatherObservation> parse_weather(std::string_view content);

struct CalendarParseResult {
    CalendarFlags flags;
    std::vector<RejectedRow> rejected;  // across all three sources
    std::size_t total_rows = 0;
};

CalendarParseResult parse_calendar(std::string_view holiday_content,
                                   std::string_view game1_content,
                                   std::string_view game2_content);

// Serializers emitting the documented schemas; parse/serialize round-trips
// preserve every milestone timestamp.
std::string serialize_visits(const std::vector<VisitTimeline>& visits);
std::string serialize_stays(const std::vector<InpatientStay>& stays);
std::string serialize_weather(const std::vector<WeatherObservation>& observations);
std::string serialize_dates(const std::set<Date>& dates);

}  // namespace edflow
