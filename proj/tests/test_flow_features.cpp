#include <doctest.h>

#include <stdexcept>

#include <cstdint>
#include <optional>
#include <vector>

#include "edflow/flow_features.hpp"
#include "edflow/stats.hpp"
#include "edflow/time.hpp"
#include "helpers.hpp"

using namespace edflow;

namespace {

Timestamp ts(const char* text) { return *parse_timestamp(text); }

// Membership test per (visit, hour) pair, the reference the sweep must match.
std::vector<double> brute_force_count(const std::vector<VisitTimeline>& visits, Phase phase,
                                      const HourIndex& index,
                                      std::optional<EsiGroup> filter = std::nullopt) {
    std::vector<double> counts(index.size(), 0.0);
    for (std::size_t i = 0; i < index.size(); ++i) {
        Timestamp h = index.hours[i];
        for (const auto& visit : visits) {
            if (filter && esi_group(visit.esi) != *filter) continue;
            auto interval = phase_interval(visit, phase);
            if (interval && interval->first <= h && h < interval->second) counts[i] += 1.0;
        }
    }
    return counts;
}

std::vector<double> brute_force_avg_elapsed(const std::vector<VisitTimeline>& visits, Phase phase,
                                            const HourIndex& index) {
    std::vector<double> result(index.size(), 0.0);
    for (std::size_t i = 0; i < index.size(); ++i) {
        Timestamp h = index.hours[i];
        std::int64_t seconds = 0;
        std::int64_t count = 0;
        for (const auto& visit : visits) {
            auto interval = phase_interval(visit, phase);
            if (interval && interval->first <= h && h < interval->second) {
                seconds += h - interval->first;
                ++count;
            }
        }
        result[i] = mean_minutes(seconds, count);
    }
    return result;
}

VisitTimeline boarder(const char* bed_request, const char* checkout) {
    VisitTimeline v;
    v.visit_id = "b";
    v.arrival = ts(bed_request) - kSecondsPerHour;
    v.bed_request = ts(bed_request);
    v.checkout = ts(checkout);
    v.esi = EsiCode::level(2);
    return v;
}

}  // namespace

TEST_CASE("phase intervals come from the bounding milestones") {
    VisitTimeline v = boarder("2022-03-05 14:00:00", "2022-03-05 20:00:00");
    auto boarding = phase_interval(v, Phase::kBoarding);
    REQUIRE(boarding.has_value());
    CHECK(boarding->first == ts("2022-03-05 14:00:00"));
    CHECK(boarding->second == ts("2022-03-05 20:00:00"));

    v.bed_request.reset();
    CHECK_FALSE(phase_interval(v, Phase::kBoarding).has_value());
    CHECK_FALSE(phase_interval(v, Phase::kWaiting).has_value());
}

TEST_CASE("a single boarder is counted at six top-of-hour snapshots") {
    HourIndex idx = HourIndex::build(ts("2022-03-05 00:00:00"), ts("2022-03-05 23:00:00"));
    std::vector<VisitTimeline> visits = {boarder("2022-03-05 14:00:00", "2022-03-05 20:00:00")};
    std::vector<double> counts = hourly_phase_count(visits, Phase::kBoarding, idx);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        CHECK(counts[i] == ((i >= 14 && i <= 19) ? 1.0 : 0.0));
    }
}

TEST_CASE("a zero-length interval contributes to no hour") {
    HourIndex idx = HourIndex::build(ts("2022-03-05 00:00:00"), ts("2022-03-05 23:00:00"));
    VisitTimeline v;
    v.visit_id = "w";
    v.arrival = ts("2022-03-05 10:00:00");
    v.waiting_start = ts("2022-03-05 10:00:00");
    v.waiting_end = ts("2022-03-05 10:00:00");
    v.checkout = ts("2022-03-05 11:00:00");
    std::vector<double> counts = hourly_phase_count({v}, Phase::kWaiting, idx);
    for (double c : counts) CHECK(c == 0.0);
}

TEST_CASE("sweep equals brute force on random logs for all phases and groups") {
    Rng rng(314159);
    Timestamp base = ts("2022-06-01 00:00:00");
    for (int round = 0; round < 5; ++round) {
        auto visits = testing::random_visits(rng, 200, base, 24 * 10);
        HourIndex idx = HourIndex::build(base, base + 24 * 12 * kSecondsPerHour);
        for (Phase phase : {Phase::kBoarding, Phase::kWaiting, Phase::kTreatment}) {
            CHECK(hourly_phase_count(visits, phase, idx) == brute_force_count(visits, phase, idx));
            for (EsiGroup g : {EsiGroup::kG12, EsiGroup::kG3, EsiGroup::kG45}) {
                CHECK(hourly_phase_count(visits, phase, idx, g) ==
                      brute_force_count(visits, phase, idx, g));
            }
        }
    }
}

TEST_CASE("acuity-group counts partition the total") {
    Rng rng(2718);
    Timestamp base = ts("2022-06-01 00:00:00");
    auto visits = testing::random_visits(rng, 300, base, 24 * 7);
    HourIndex idx = HourIndex::build(base, base + 24 * 9 * kSecondsPerHour);
    for (Phase phase : {Phase::kBoarding, Phase::kWaiting}) {
        auto total = hourly_phase_count(visits, phase, idx);
        auto g12 = hourly_phase_count(visits, phase, idx, EsiGroup::kG12);
        auto g3 = hourly_phase_count(visits, phase, idx, EsiGroup::kG3);
        auto g45 = hourly_phase_count(visits, phase, idx, EsiGroup::kG45);
        for (std::size_t i = 0; i < total.size(); ++i) {
            CHECK(g12[i] + g3[i] + g45[i] == total[i]);
        }
    }
}

TEST_CASE("adding a visit never decreases hourly counts") {
    Rng rng(55);
    Timestamp base = ts("2022-06-01 00:00:00");
    auto visits = testing::random_visits(rng, 120, base, 24 * 5);
    HourIndex idx = HourIndex::build(base, base + 24 * 6 * kSecondsPerHour);
    auto before = hourly_phase_count(visits, Phase::kTreatment, idx);
    visits.push_back(testing::random_visit(rng, "extra", base, 24 * 5));
    auto after = hourly_phase_count(visits, Phase::kTreatment, idx);
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(after[i] >= before[i]);
    }
}

TEST_CASE("average elapsed time is measured at the snapshot instant") {
    HourIndex idx = HourIndex::build(ts("2022-03-05 14:00:00"), ts("2022-03-05 19:00:00"));
    std::vector<VisitTimeline> visits = {boarder("2022-03-05 14:00:00", "2022-03-05 20:00:00")};
    auto avg = hourly_avg_elapsed(visits, Phase::kBoarding, idx);
    CHECK(avg[0] == 0.0);
    CHECK(avg[2] == 120.0);
    CHECK(avg[5] == 300.0);
}

TEST_CASE("average elapsed equals brute force bit for bit") {
    Rng rng(424242);
    Timestamp base = ts("2022-06-01 00:00:00");
    auto visits = testing::random_visits(rng, 250, base, 24 * 8);
    HourIndex idx = HourIndex::build(base, base + 24 * 10 * kSecondsPerHour);
    for (Phase phase : {Phase::kBoarding, Phase::kWaiting, Phase::kTreatment}) {
        CHECK(hourly_avg_elapsed(visits, phase, idx) ==
              brute_force_avg_elapsed(visits, phase, idx));
    }
}

TEST_CASE("hours with no one in phase average to zero") {
    HourIndex idx = HourIndex::build(ts("2022-03-05 00:00:00"), ts("2022-03-05 10:00:00"));
    CHECK(hourly_avg_elapsed({}, Phase::kBoarding, idx) ==
          std::vector<double>(idx.size(), 0.0));
}

TEST_CASE("census counts a multi-day stay at every covered snapshot") {
    HourIndex idx = HourIndex::build(ts("2022-01-01 00:00:00"), ts("2022-01-05 23:00:00"));
    InpatientStay stay{"s", ts("2022-01-01 10:00:00"), ts("2022-01-03 11:00:00")};
    auto census = hourly_census({stay}, idx);
    double covered = 0;
    for (double c : census) covered += c;
    CHECK(covered == 49.0);
    CHECK(census[10] == 1.0);
    CHECK(census[9] == 0.0);
    CHECK(census[*idx.position(ts("2022-01-03 10:00:00"))] == 1.0);
    CHECK(census[*idx.position(ts("2022-01-03 11:00:00"))] == 0.0);
}

TEST_CASE("extreme indicator flags strictly above mean plus std") {
    // Eight 10s and two 20s: mean 12, population std 4, cutoff 16.
    std::vector<double> series = {10, 10, 10, 10, 10, 10, 10, 10, 20, 20};
    auto flags = extreme_indicator(series);
    for (std::size_t i = 0; i < 8; ++i) CHECK(flags[i] == 0.0);
    CHECK(flags[8] == 1.0);
    CHECK(flags[9] == 1.0);

    // A value exactly at the cutoff stays unflagged.
    std::vector<double> exact = {8, 12, 16};  // mean 12, std ~3.27, cutoff ~15.27
    CHECK(extreme_indicator(exact) == std::vector<double>{0, 0, 1});
    std::vector<double> constant = {5, 5, 5, 5};
    CHECK(extreme_indicator(constant) == std::vector<double>{0, 0, 0, 0});
}

TEST_CASE("assembled hourly records join all sources") {
    HourIndex idx = HourIndex::build(ts("2023-05-10 00:00:00"), ts("2023-05-10 23:00:00"));
    Rng rng(11);
    auto visits = testing::random_visits(rng, 80, idx.start - 12 * kSecondsPerHour, 36);

    std::vector<InpatientStay> stays = {
        {"s1", ts("2023-05-09 08:00:00"), ts("2023-05-11 09:00:00")},
        {"s2", ts("2023-05-10 07:30:00"), ts("2023-05-10 18:00:00")},
    };
    std::vector<WeatherObservation> weather = {
        {ts("2023-05-10 03:00:00"), WeatherCondition::Clear, 61.0},
        {ts("2023-05-10 05:00:00"), WeatherCondition::Mist, 58.5},
    };
    CalendarFlags calendar;
    calendar.holidays.insert(*parse_date("2023-05-10"));
    calendar.game2.insert(*parse_date("2023-05-10"));

    HourlyTable table = assemble_hourly_records(visits, stays, weather, calendar, idx);
    CHECK(table.rows() == 24);
    CHECK(table.column_names() == hourly_record_columns());

    CHECK(table.column("year")[13] == 2023);
    CHECK(table.column("month")[13] == 5);
    CHECK(table.column("day_of_month")[13] == 10);
    CHECK(table.column("day_of_week")[13] == 2);
    CHECK(table.column("hour_of_day")[13] == 13);

    // Hours before the first observation inherit it; later hours carry the
    // most recent one forward.
    CHECK(table.column("weather_clear")[0] == 1.0);
    CHECK(table.column("temperature_f")[0] == 61.0);
    CHECK(table.column("weather_clear")[4] == 1.0);
    CHECK(table.column("weather_clouds")[5] == 1.0);
    CHECK(table.column("weather_clouds")[23] == 1.0);
    CHECK(table.column("temperature_f")[23] == 58.5);

    CHECK(table.column("federal_holiday")[0] == 1.0);
    CHECK(table.column("football_game1")[0] == 0.0);
    CHECK(table.column("football_game2")[7] == 1.0);

    CHECK(table.column("hospital_census")[8] == 2.0);
    CHECK(table.column("hospital_census")[18] == 1.0);

    const auto& total = table.column("boarding_count");
    const auto& g12 = table.column("boarding_count_esi12");
    const auto& g3 = table.column("boarding_count_esi3");
    const auto& g45 = table.column("boarding_count_esi45");
    for (std::size_t i = 0; i < 24; ++i) {
        CHECK(g12[i] + g3[i] + g45[i] == total[i]);
    }
}

TEST_CASE("assembly requires weather observations") {
    HourIndex idx = HourIndex::build(ts("2023-05-10 00:00:00"), ts("2023-05-10 23:00:00"));
    CHECK_THROWS_AS(assemble_hourly_records({}, {}, {}, {}, idx), std::invalid_argument);
}

TEST_CASE("a fixed cutoff overrides the series-derived extreme rule") {
    HourIndex idx = HourIndex::build(ts("2023-05-10 00:00:00"), ts("2023-05-10 23:00:00"));
    std::vector<WeatherObservation> weather = {
        {ts("2023-05-10 00:00:00"), WeatherCondition::Clear, 60.0}};
    std::vector<VisitTimeline> visits = {
        boarder("2023-05-10 04:00:00", "2023-05-10 09:00:00"),
    };
    AssembleOptions options;
    options.extreme_threshold = 0.5;
    HourlyTable table = assemble_hourly_records(visits, {}, weather, {}, idx, options);
    CHECK(table.column("extreme_case_indicator")[4] == 1.0);
    CHECK(table.column("extreme_case_indicator")[3] == 0.0);
}
