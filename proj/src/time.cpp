#include "edflow/time.hpp"

#include <cstdio>
#include <stdexcept>

namespace edflow {
namespace {

// Civil-calendar conversions (proleptic Gregorian), Hinnant's algorithms.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yr + (m <= 2));
}

bool valid_civil(int y, int m, int d) {
    if (m < 1 || m > 12 || d < 1) return false;
    static constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int len = lengths[m - 1];
    if (m == 2) {
        const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
        if (leap) len = 29;
    }
    return d <= len;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    int y, mo, d, h, mi, s;
    char tail;
    std::string buf(text);
    if (std::sscanf(buf.c_str(), "%4d-%2d-%2d %2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &s, &tail) != 6) {
        return std::nullopt;
    }
    if (buf.size() != 19) return std::nullopt;
    if (!valid_civil(y, mo, d)) return std::nullopt;
    if (h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 59) return std::nullopt;
    return days_from_civil(y, mo, d) * kSecondsPerDay + h * 3600 + mi * 60 + s;
}

std::string format_timestamp(Timestamp ts) {
    int y, m, d;
    civil_from_days(floor_div(ts, kSecondsPerDay), y, m, d);
    const std::int64_t sod = floor_mod(ts, kSecondsPerDay);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d", y, m, d,
                  static_cast<int>(sod / 3600), static_cast<int>(sod / 60 % 60),
                  static_cast<int>(sod % 60));
    return buf;
}

std::optional<Date> parse_date(std::string_view text) {
    int y, mo, d;
    char tail;
    std::string buf(text);
    if (std::sscanf(buf.c_str(), "%4d-%2d-%2d%c", &y, &mo, &d, &tail) != 3) return std::nullopt;
    if (buf.size() != 10) return std::nullopt;
    if (!valid_civil(y, mo, d)) return std::nullopt;
    return days_from_civil(y, mo, d);
}

std::string format_date(Date date) {
    int y, m, d;
    civil_from_days(date, y, m, d);
    char buf[12];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

Timestamp hour_floor(Timestamp ts) { return floor_div(ts, kSecondsPerHour) * kSecondsPerHour; }

bool hour_aligned(Timestamp ts) { return floor_mod(ts, kSecondsPerHour) == 0; }

Date day_of(Timestamp ts) { return floor_div(ts, kSecondsPerDay); }

Timestamp day_start(Date date) { return date * kSecondsPerDay; }

CalendarFields calendar_fields(Timestamp ts) {
    CalendarFields f;
    const std::int64_t days = floor_div(ts, kSecondsPerDay);
    civil_from_days(days, f.year, f.month, f.day_of_month);
    // 1970-01-01 was a Thursday; 0 = Monday.
    f.day_of_week = static_cast<int>(floor_mod(days + 3, 7));
    f.hour = static_cast<int>(floor_mod(ts, kSecondsPerDay) / 3600);
    return f;
}

Date make_date(int year, int month, int day) { return days_from_civil(year, month, day); }

HourIndex HourIndex::build(Timestamp start, Timestamp end) {
    if (!hour_aligned(start) || !hour_aligned(end)) {
        throw std::invalid_argument("hour index bounds must be hour-aligned");
    }
    if (start > end) {
        throw std::invalid_argument("hour index start exceeds end");
    }
    HourIndex index;
    index.start = start;
    index.end = end;
    index.hours.reserve(static_cast<std::size_t>((end - start) / kSecondsPerHour) + 1);
    for (Timestamp h = start; h <= end; h += kSecondsPerHour) index.hours.push_back(h);
    return index;
}

std::optional<std::size_t> HourIndex::position(Timestamp hour) const {
    if (hour < start || hour > end || !hour_aligned(hour)) return std::nullopt;
    return static_cast<std::size_t>((hour - start) / kSecondsPerHour);
}

}  // namespace edflow
