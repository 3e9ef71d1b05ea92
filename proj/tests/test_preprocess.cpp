#include <doctest.h>

#include <stdexcept>

#include <set>

#include "edflow/preprocess.hpp"
#include "edflow/rng.hpp"
#include "edflow/table.hpp"
#include "edflow/time.hpp"
#include "helpers.hpp"

using namespace edflow;

namespace {

Timestamp ts(const char* text) { return *parse_timestamp(text); }

VisitTimeline visit_with_durations(std::string id, std::int64_t waiting_seconds,
                                   std::int64_t treatment_seconds,
                                   std::int64_t boarding_seconds) {
    VisitTimeline v;
    v.visit_id = std::move(id);
    v.arrival = ts("2022-01-01 00:00:00");
    Timestamp cursor = v.arrival;
    v.waiting_start = cursor;
    cursor += waiting_seconds;
    v.waiting_end = cursor;
    v.treatment_start = cursor;
    cursor += treatment_seconds;
    v.treatment_end = cursor;
    if (boarding_seconds >= 0) {
        v.bed_request = cursor;
        cursor += boarding_seconds;
    }
    v.checkout = cursor;
    v.esi = EsiCode::level(3);
    return v;
}

}  // namespace

TEST_CASE("weather grouping covers all ten conditions") {
    CHECK(group_weather(WeatherCondition::Clear) == WeatherCategory::kClear);
    CHECK(group_weather(WeatherCondition::Clouds) == WeatherCategory::kClouds);
    CHECK(group_weather(WeatherCondition::Mist) == WeatherCategory::kClouds);
    CHECK(group_weather(WeatherCondition::Rain) == WeatherCategory::kRain);
    CHECK(group_weather(WeatherCondition::Drizzle) == WeatherCategory::kRain);
    CHECK(group_weather(WeatherCondition::Thunderstorm) == WeatherCategory::kThunderstorm);
    CHECK(group_weather(WeatherCondition::Fog) == WeatherCategory::kOthers);
    CHECK(group_weather(WeatherCondition::Haze) == WeatherCategory::kOthers);
    CHECK(group_weather(WeatherCondition::Snow) == WeatherCategory::kOthers);
    CHECK(group_weather(WeatherCondition::Smoke) == WeatherCategory::kOthers);

    std::set<WeatherCategory> seen;
    for (int c = 0; c < kWeatherConditionCount; ++c) {
        seen.insert(group_weather(static_cast<WeatherCondition>(c)));
    }
    CHECK(seen.size() == 5);
}

TEST_CASE("cleaning drops strictly-over-limit durations") {
    auto at_limit = visit_with_durations("w9h", 9 * 3600, 600, 1200);
    auto over = visit_with_durations("w9h01m", 9 * 3600 + 60, 600, 1200);
    auto board299 = visit_with_durations("b299", 600, 600, 299 * 3600);
    auto board301 = visit_with_durations("b301", 600, 600, 301 * 3600);
    auto stuck = visit_with_durations("stuck", 600, 5113LL * 3600, 1200);

    auto [kept, report] = clean_visits({at_limit, over, board299, board301, stuck});
    CHECK(report.total_visits == 5);
    CHECK(report.waiting_over_limit == 1);
    CHECK(report.boarding_over_limit == 1);
    CHECK(report.treatment_over_limit == 1);
    CHECK(report.excluded == 3);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].visit_id == "w9h");
    CHECK(kept[1].visit_id == "b299");
}

TEST_CASE("a visit violating several rules is excluded once") {
    auto multi = visit_with_durations("multi", 10 * 3600, 600, 301 * 3600);
    auto [kept, report] = clean_visits({multi});
    CHECK(kept.empty());
    CHECK(report.waiting_over_limit == 1);
    CHECK(report.boarding_over_limit == 1);
    CHECK(report.excluded == 1);
}

TEST_CASE("cleaning is idempotent and counts a constructed fixture exactly") {
    Rng rng(17);
    auto visits = testing::random_visits(rng, 200, ts("2022-02-01 00:00:00"), 24 * 7);
    visits.push_back(visit_with_durations("d1", 10 * 3600, 600, 1200));
    visits.push_back(visit_with_durations("d2", 12 * 3600, 600, 1200));
    visits.push_back(visit_with_durations("d3", 600, 600, 400 * 3600));
    visits.push_back(visit_with_durations("d4", 600, 600, 310 * 3600));
    visits.push_back(visit_with_durations("d5", 600, 6000LL * 3600, 1200));

    auto [kept, report] = clean_visits(visits);
    CHECK(report.waiting_over_limit == 2);
    CHECK(report.boarding_over_limit == 2);
    CHECK(report.treatment_over_limit == 1);
    CHECK(report.excluded == 5);
    CHECK(kept.size() == visits.size() - 5);

    auto [again, report2] = clean_visits(kept);
    CHECK(again == kept);
    CHECK(report2.excluded == 0);
}

TEST_CASE("cleaning report serializes rule fractions") {
    auto [kept, report] = clean_visits({visit_with_durations("x", 10 * 3600, 600, 1200)});
    (void)kept;
    std::string json = report.to_json();
    CHECK(json.find("\"waiting_over_limit\"") != std::string::npos);
    CHECK(json.find("\"fraction\": 1.0") != std::string::npos);
}

TEST_CASE("missing acuity is imputed as level 3") {
    VisitTimeline a = visit_with_durations("a", 600, 600, 1200);
    VisitTimeline b = a;
    b.visit_id = "b";
    b.esi.reset();
    VisitTimeline c = a;
    c.visit_id = "c";
    c.esi = EsiCode::level(1);

    auto [imputed, count] = impute_esi({a, b, c});
    CHECK(count == 1);
    CHECK(imputed[1].esi == EsiCode::level(3));
    CHECK(imputed[2].esi == EsiCode::level(1));

    Rng rng(23);
    auto visits = testing::random_visits(rng, 400, ts("2022-02-01 00:00:00"), 24);
    std::size_t missing = 0;
    for (const auto& v : visits) missing += !v.esi;
    auto [all, filled] = impute_esi(visits);
    CHECK(filled == missing);
    for (const auto& v : all) CHECK(v.esi.has_value());
}

TEST_CASE("pandemic window exclusion removes a closed hourly range") {
    auto [from, to] = covid_exclusion_window();
    CHECK(format_timestamp(from) == "2020-04-01 00:00:00");
    CHECK(format_timestamp(to) == "2020-07-31 23:00:00");

    HourIndex idx = HourIndex::build(ts("2020-03-30 00:00:00"), ts("2020-08-02 23:00:00"));
    HourlyTable table(idx.hours);
    std::vector<double> values(idx.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(i);
    table.add_column("v", values);

    HourlyTable cut = exclude_window(table, from, to);
    CHECK(cut.rows() == idx.size() - 122 * 24);
    CHECK(cut.hours()[2 * 24 - 1] == ts("2020-03-31 23:00:00"));
    CHECK(cut.hours()[2 * 24] == ts("2020-08-01 00:00:00"));
    CHECK(cut.segment_ids().back() == 1);
}

TEST_CASE("lag columns shift within segments and mark warmup") {
    std::vector<Timestamp> hours = {
        ts("2022-01-01 00:00:00"), ts("2022-01-01 01:00:00"), ts("2022-01-01 02:00:00"),
        ts("2022-01-01 10:00:00"), ts("2022-01-01 11:00:00"),
    };
    HourlyTable table(std::move(hours));
    table.add_column("x", {5, 7, 9, 20, 30});
    add_lags(table, "x", 2);

    CHECK(table.column("x_lag_1") == std::vector<double>{0, 5, 7, 0, 20});
    CHECK(table.column("x_lag_2") == std::vector<double>{0, 0, 5, 0, 0});
    CHECK(table.warmup() == std::vector<std::uint8_t>{1, 1, 0, 1, 1});
}

TEST_CASE("lag positions match the raw series on a random table") {
    HourIndex idx = HourIndex::build(ts("2022-01-01 00:00:00"), ts("2022-01-20 23:00:00"));
    HourlyTable table(idx.hours);
    Rng rng(31);
    std::vector<double> values;
    for (std::size_t i = 0; i < idx.size(); ++i) values.push_back(rng.normal());
    table.add_column("x", values);
    add_lags(table, "x", 12);

    const auto& lag7 = table.column("x_lag_7");
    for (std::size_t t = 7; t < table.rows(); ++t) {
        CHECK(lag7[t] == values[t - 7]);
    }
    for (std::size_t t = 0; t < 12; ++t) CHECK(table.warmup()[t] == 1);
    CHECK(table.warmup()[12] == 0);
}

TEST_CASE("lag window must fit the table") {
    HourlyTable table(std::vector<Timestamp>{ts("2022-01-01 00:00:00"),
                                             ts("2022-01-01 01:00:00")});
    table.add_column("x", {1, 2});
    CHECK_THROWS_AS(add_lags(table, "x", 2), std::invalid_argument);
    CHECK_THROWS_AS(add_lags(table, "missing", 1), std::invalid_argument);
}

TEST_CASE("centered rolling mean follows the heavier-past convention") {
    HourIndex idx = HourIndex::build(ts("2022-01-01 00:00:00"), ts("2022-01-01 07:00:00"));
    HourlyTable table(idx.hours);
    table.add_column("x", {0, 1, 2, 3, 4, 5, 6, 7});

    add_rolling_mean(table, "x", 3);
    CHECK(table.column("x_roll_3")[1] == 1.0);
    CHECK(table.column("x_roll_3")[6] == 6.0);

    add_rolling_mean(table, "x", 4);
    const auto& roll4 = table.column("x_roll_4");
    CHECK(roll4[2] == 1.5);
    CHECK(roll4[3] == 2.5);
    CHECK(roll4[6] == 5.5);
    CHECK(table.warmup()[0] == 1);
    CHECK(table.warmup()[1] == 1);
    CHECK(table.warmup()[7] == 1);
}

TEST_CASE("rolling means: constants, brute force, trailing mode") {
    HourIndex idx = HourIndex::build(ts("2022-01-01 00:00:00"), ts("2022-01-03 23:00:00"));
    HourlyTable constant(idx.hours);
    constant.add_column("c", std::vector<double>(idx.size(), 4.25));
    add_rolling_mean(constant, "c", 5);
    for (std::size_t t = 2; t + 2 < constant.rows(); ++t) {
        CHECK(constant.column("c_roll_5")[t] == 4.25);
    }

    HourlyTable random_table(idx.hours);
    Rng rng(47);
    std::vector<double> values;
    for (std::size_t i = 0; i < idx.size(); ++i) values.push_back(rng.uniform(0.0, 30.0));
    random_table.add_column("x", values);
    add_rolling_mean(random_table, "x", 6);
    const auto& roll = random_table.column("x_roll_6");
    for (std::size_t t = 3; t + 2 < random_table.rows(); ++t) {
        double sum = 0;
        for (std::size_t i = t - 3; i <= t + 2; ++i) sum += values[i];
        CHECK(roll[t] == doctest::Approx(sum / 6.0).epsilon(1e-12));
    }

    HourlyTable trailing(idx.hours);
    trailing.add_column("x", values);
    add_rolling_mean(trailing, "x", 4, RollingAlignment::kTrailing);
    const auto& troll = trailing.column("x_roll_4");
    for (std::size_t t = 3; t < trailing.rows(); ++t) {
        double sum = values[t] + values[t - 1] + values[t - 2] + values[t - 3];
        CHECK(troll[t] == doctest::Approx(sum / 4.0).epsilon(1e-12));
    }
    CHECK(trailing.warmup()[2] == 1);
}

TEST_CASE("rolling mean never crosses a segment gap") {
    std::vector<Timestamp> hours;
    for (int i = 0; i < 6; ++i) hours.push_back(ts("2022-01-01 00:00:00") + i * kSecondsPerHour);
    for (int i = 0; i < 6; ++i) hours.push_back(ts("2022-02-01 00:00:00") + i * kSecondsPerHour);
    HourlyTable table(std::move(hours));
    table.add_column("x", {1, 1, 1, 1, 1, 1, 9, 9, 9, 9, 9, 9});
    add_rolling_mean(table, "x", 3);
    const auto& roll = table.column("x_roll_3");
    CHECK(roll[4] == 1.0);
    CHECK(table.warmup()[5] == 1);
    CHECK(table.warmup()[6] == 1);
    CHECK(roll[7] == 9.0);
}
