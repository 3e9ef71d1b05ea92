#include <doctest.h>

#include <stdexcept>

#include "edflow/time.hpp"

using namespace edflow;

namespace {

Timestamp ts(const char* text) {
    auto parsed = parse_timestamp(text);
    REQUIRE(parsed.has_value());
    return *parsed;
}

}  // namespace

TEST_CASE("timestamp parsing and formatting round-trip") {
    const char* samples[] = {
        "1970-01-01 00:00:00", "2019-01-01 09:00:00", "2020-02-29 23:59:59",
        "2023-07-01 20:00:00", "1999-12-31 12:34:56",
    };
    for (const char* s : samples) {
        CHECK(format_timestamp(ts(s)) == s);
    }
    CHECK(ts("1970-01-01 00:00:00") == 0);
    CHECK(ts("1970-01-02 00:00:00") == kSecondsPerDay);
}

TEST_CASE("malformed timestamps are rejected") {
    CHECK_FALSE(parse_timestamp("").has_value());
    CHECK_FALSE(parse_timestamp("2020-01-01").has_value());
    CHECK_FALSE(parse_timestamp("2020-01-01T00:00:00").has_value());
    CHECK_FALSE(parse_timestamp("2020-13-01 00:00:00").has_value());
    CHECK_FALSE(parse_timestamp("2020-01-32 00:00:00").has_value());
    CHECK_FALSE(parse_timestamp("2021-02-29 00:00:00").has_value());
    CHECK_FALSE(parse_timestamp("2020-01-01 24:00:00").has_value());
    CHECK_FALSE(parse_timestamp("2020-01-01 00:60:00").has_value());
    CHECK_FALSE(parse_timestamp("2020-01-01 00:00:00x").has_value());
    CHECK(parse_timestamp("2020-02-29 00:00:00").has_value());
}

TEST_CASE("date parsing matches timestamp day arithmetic") {
    auto date = parse_date("2023-05-10");
    REQUIRE(date.has_value());
    CHECK(format_date(*date) == "2023-05-10");
    CHECK(day_start(*date) == ts("2023-05-10 00:00:00"));
    CHECK(day_of(ts("2023-05-10 23:59:59")) == *date);
    CHECK_FALSE(parse_date("2023-5-10").has_value());
    CHECK_FALSE(parse_date("2023-05-10 ").has_value());
}

TEST_CASE("calendar fields use Monday-based weekday codes") {
    CalendarFields f = calendar_fields(ts("2023-05-10 13:00:00"));
    CHECK(f.year == 2023);
    CHECK(f.month == 5);
    CHECK(f.day_of_month == 10);
    CHECK(f.day_of_week == 2);
    CHECK(f.hour == 13);

    CHECK(calendar_fields(0).day_of_week == 3);
    CHECK(calendar_fields(ts("2024-03-01 00:00:00")).day_of_week == 4);
    CHECK(calendar_fields(ts("2024-03-03 06:00:00")).day_of_week == 6);
}

TEST_CASE("hour helpers") {
    CHECK(hour_floor(ts("2020-06-01 10:59:59")) == ts("2020-06-01 10:00:00"));
    CHECK(hour_aligned(ts("2020-06-01 10:00:00")));
    CHECK_FALSE(hour_aligned(ts("2020-06-01 10:00:01")));
}

TEST_CASE("hour index spans an inclusive range") {
    HourIndex idx = HourIndex::build(ts("2020-01-01 09:00:00"), ts("2020-01-01 12:00:00"));
    CHECK(idx.size() == 4);
    CHECK(idx.hours.front() == ts("2020-01-01 09:00:00"));
    CHECK(idx.hours.back() == ts("2020-01-01 12:00:00"));

    HourIndex degenerate = HourIndex::build(ts("2020-01-01 09:00:00"), ts("2020-01-01 09:00:00"));
    CHECK(degenerate.size() == 1);

    CHECK_THROWS_AS(HourIndex::build(ts("2020-01-01 09:30:00"), ts("2020-01-01 12:00:00")),
                    std::invalid_argument);
    CHECK_THROWS_AS(HourIndex::build(ts("2020-01-01 12:00:00"), ts("2020-01-01 09:00:00")),
                    std::invalid_argument);
}

TEST_CASE("hour index position lookup") {
    HourIndex idx = HourIndex::build(ts("2020-01-01 00:00:00"), ts("2020-01-02 00:00:00"));
    CHECK(idx.position(ts("2020-01-01 05:00:00")) == 5);
    CHECK_FALSE(idx.position(ts("2020-01-02 01:00:00")).has_value());
    CHECK_FALSE(idx.position(ts("2019-12-31 23:00:00")).has_value());
}

TEST_CASE("study-period hour count reconciles with a 91-day exclusion") {
    HourIndex idx = HourIndex::build(ts("2019-01-01 09:00:00"), ts("2023-07-01 20:00:00"));
    CHECK(idx.size() == 39420);
    CHECK(idx.size() - 91 * 24 == 37236);
}
