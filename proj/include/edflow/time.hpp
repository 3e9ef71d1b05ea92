#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edflow {

// Naive local time in seconds since 1970-01-01 00:00:00. The toolkit operates
// in a single locale at hourly resolution; no timezone or DST handling.
using Timestamp = std::int64_t;

// Naive local date in whole days since 1970-01-01.
using Date = std::int64_t;

inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kSecondsPerDay = 86400;

struct CalendarFields {
    int year = 0;
    int month = 0;         // 1..12
    int day_of_month = 0;  // 1..31
    int day_of_week = 0;   // 0 = Monday .. 6 = Sunday
    int hour = 0;          // 0..23
};

// "YYYY-MM-DD HH:MM:SS" -> timestamp; nullopt on malformed input.
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

// "YYYY-MM-DD" -> date; nullopt on malformed input.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);

Timestamp hour_floor(Timestamp ts);
bool hour_aligned(Timestamp ts);
Date day_of(Timestamp ts);
Timestamp day_start(Date date);

CalendarFields calendar_fields(Timestamp ts);

Date make_date(int year, int month, int day);

// Inclusive range of hour-aligned timestamps, one per hour.
struct HourIndex {
    Timestamp start = 0;
    Timestamp end = 0;
    std::vector<Timestamp> hours;

    // Throws std::invalid_argument when the bounds are misaligned or reversed.
    static HourIndex build(Timestamp start, Timestamp end);

    std::size_t size() const { return hours.size(); }

    // Position of an hour-aligned timestamp within the index, if covered.
    std::optional<std::size_t> position(Timestamp hour) const;
};

}  // namespace edflow
