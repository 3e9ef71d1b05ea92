#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "edflow/flow_features.hpp"
#include "edflow/preprocess.hpp"
#include "edflow/synth.hpp"

using namespace edflow;

namespace {

ScenarioConfig small_scenario(int days, double rate, std::uint64_t seed) {
    ScenarioConfig scenario;
    scenario.start_date = make_date(2022, 1, 1);
    scenario.days = days;
    scenario.base_rate = rate;
    scenario.seed = seed;
    return scenario;
}

ScenarioConfig flat_scenario(int days, double rate, std::uint64_t seed) {
    ScenarioConfig scenario = small_scenario(days, rate, seed);
    scenario.trend_per_year = 0.0;
    scenario.daily_amplitude = 0.0;
    scenario.weekly_amplitude = 0.0;
    scenario.annual_amplitude = 0.0;
    scenario.holiday_multiplier = 1.0;
    scenario.game1_multiplier = 1.0;
    scenario.game2_multiplier = 1.0;
    scenario.weather_multipliers = {1.0, 1.0, 1.0, 1.0, 1.0};
    return scenario;
}

}  // namespace

TEST_CASE("federal holidays land on the documented dates") {
    const auto holidays = federal_holidays(2022);
    CHECK(holidays.size() == 11);
    CHECK(holidays.count(make_date(2022, 1, 1)) == 1);
    CHECK(holidays.count(make_date(2022, 1, 17)) == 1);   // third Monday
    CHECK(holidays.count(make_date(2022, 2, 21)) == 1);   // third Monday
    CHECK(holidays.count(make_date(2022, 5, 30)) == 1);   // last Monday
    CHECK(holidays.count(make_date(2022, 6, 19)) == 1);
    CHECK(holidays.count(make_date(2022, 7, 4)) == 1);
    CHECK(holidays.count(make_date(2022, 9, 5)) == 1);    // first Monday
    CHECK(holidays.count(make_date(2022, 10, 10)) == 1);  // second Monday
    CHECK(holidays.count(make_date(2022, 11, 11)) == 1);
    CHECK(holidays.count(make_date(2022, 11, 24)) == 1);  // fourth Thursday
    CHECK(holidays.count(make_date(2022, 12, 25)) == 1);
    CHECK(federal_holidays(2023).count(make_date(2023, 11, 23)) == 1);
}

TEST_CASE("the same seed regenerates byte-identical outputs") {
    const auto scenario = small_scenario(30, 5.0, 11);
    const auto first = generate(scenario);
    const auto second = generate(scenario);
    CHECK(serialize_visits(first.visits) == serialize_visits(second.visits));
    CHECK(serialize_stays(first.stays) == serialize_stays(second.stays));
    CHECK(serialize_weather(first.weather) == serialize_weather(second.weather));
    CHECK(serialize_dates(first.calendar.holidays) == serialize_dates(second.calendar.holidays));
    CHECK(serialize_dates(first.calendar.game1) == serialize_dates(second.calendar.game1));
    CHECK(first.ground_truth.to_csv() == second.ground_truth.to_csv());

    const auto reseeded = generate(scenario, 12);
    CHECK(serialize_visits(reseeded.visits) != serialize_visits(first.visits));
}

TEST_CASE("generated visits are valid and survive cleaning untouched") {
    const auto result = generate(small_scenario(20, 6.0, 3));
    REQUIRE(!result.visits.empty());
    for (const auto& visit : result.visits) {
        CHECK(!validate_visit(visit).has_value());
    }
    const auto [cleaned, report] = clean_visits(result.visits);
    CHECK(report.excluded == 0);
    CHECK(cleaned.size() == result.visits.size());
    CHECK(result.injections == InjectionCounts{});

    const auto parsed = parse_ed_tracking(serialize_visits(result.visits));
    CHECK(parsed.rejected.empty());
    CHECK(parsed.records == result.visits);
}

TEST_CASE("ground truth bookkeeping matches the sweep-line assembly exactly") {
    ScenarioConfig scenario = small_scenario(45, 6.0, 21);
    scenario.dirty_waiting_rate = 0.01;
    scenario.dirty_boarding_rate = 0.008;
    scenario.dirty_treatment_rate = 0.005;
    scenario.missing_esi_rate = 0.02;
    const auto result = generate(scenario);
    CHECK(result.injections.waiting_over_limit > 0);
    CHECK(result.injections.boarding_over_limit > 0);
    CHECK(result.injections.treatment_over_limit > 0);
    CHECK(result.injections.missing_esi > 0);

    const auto [cleaned, report] = clean_visits(result.visits);
    CHECK(report.waiting_over_limit == result.injections.waiting_over_limit);
    CHECK(report.boarding_over_limit == result.injections.boarding_over_limit);
    CHECK(report.treatment_over_limit == result.injections.treatment_over_limit);
    CHECK(report.excluded == result.injections.waiting_over_limit +
                                 result.injections.boarding_over_limit +
                                 result.injections.treatment_over_limit);

    const auto [imputed, imputed_count] = impute_esi(cleaned);
    CHECK(imputed_count == result.injections.missing_esi);

    const auto assembled = assemble_hourly_records(imputed, result.stays, result.weather,
                                                   result.calendar, result.index);
    REQUIRE(assembled.rows() == result.ground_truth.rows());
    for (const auto& name : result.ground_truth.column_names()) {
        CHECK(assembled.column(name) == result.ground_truth.column(name));
    }
}

TEST_CASE("a flat scenario concentrates near its stationary occupancies") {
    const auto scenario = flat_scenario(230, 10.0, 5);
    const auto result = generate(scenario);
    REQUIRE(result.index.size() >= 5000);

    const auto& waiting = result.ground_truth.column("waiting_count");
    const double expected_waiting = 10.0 * scenario.mean_waiting_minutes / 60.0;
    double waiting_mean = 0.0;
    for (const double v : waiting) waiting_mean += v;
    waiting_mean /= static_cast<double>(waiting.size());

    // Batch means give a standard error that respects the hour-to-hour
    // correlation; the small constant absorbs the clamp-at-limit bias.
    const std::size_t batches = 40;
    const std::size_t per_batch = waiting.size() / batches;
    std::vector<double> batch_means;
    for (std::size_t b = 0; b < batches; ++b) {
        double sum = 0.0;
        for (std::size_t i = b * per_batch; i < (b + 1) * per_batch; ++i) sum += waiting[i];
        batch_means.push_back(sum / static_cast<double>(per_batch));
    }
    double spread = 0.0;
    for (const double m : batch_means) spread += (m - waiting_mean) * (m - waiting_mean);
    const double se = std::sqrt(spread / static_cast<double>(batches - 1)) /
                      std::sqrt(static_cast<double>(batches));
    CHECK(std::abs(waiting_mean - expected_waiting) <= 3.0 * se + 0.1);

    const auto& boarding = result.ground_truth.column("boarding_count");
    const double expected_boarding =
        10.0 * scenario.admission_probability * scenario.mean_boarding_minutes / 60.0;
    double boarding_mean = 0.0;
    for (const double v : boarding) boarding_mean += v;
    boarding_mean /= static_cast<double>(boarding.size());
    CHECK(std::abs(boarding_mean - expected_boarding) <= 2.0);

    const auto& census = result.ground_truth.column("hospital_census");
    const double expected_census = scenario.inpatient_rate * scenario.mean_inpatient_stay_hours;
    double census_mean = 0.0;
    for (const double v : census) census_mean += v;
    census_mean /= static_cast<double>(census.size());
    CHECK(std::abs(census_mean - expected_census) / expected_census <= 0.05);
}

TEST_CASE("holiday arrivals exceed ordinary-day arrivals when boosted") {
    ScenarioConfig scenario = small_scenario(600, 8.0, 17);
    scenario.holiday_multiplier = 1.5;
    scenario.game1_multiplier = 1.0;
    scenario.game2_multiplier = 1.0;
    scenario.weekly_amplitude = 0.0;
    const auto result = generate(scenario);

    std::map<Date, std::size_t> per_day;
    const Date first = scenario.start_date;
    const Date last = scenario.start_date + scenario.days;
    for (const auto& visit : result.visits) {
        const Date date = day_of(visit.arrival);
        if (date >= first && date < last) per_day[date] += 1;
    }
    double holiday_sum = 0.0;
    double other_sum = 0.0;
    std::size_t holiday_days = 0;
    std::size_t other_days = 0;
    for (const auto& [date, count] : per_day) {
        if (result.calendar.holidays.count(date)) {
            holiday_sum += static_cast<double>(count);
            holiday_days += 1;
        } else {
            other_sum += static_cast<double>(count);
            other_days += 1;
        }
    }
    REQUIRE(holiday_days >= 15);
    const double holiday_mean = holiday_sum / static_cast<double>(holiday_days);
    const double other_mean = other_sum / static_cast<double>(other_days);
    CHECK(holiday_mean > other_mean);
    CHECK(holiday_mean > 1.25 * other_mean);
}

TEST_CASE("game dates fall on the right weekdays inside each season") {
    const auto result = generate(small_scenario(730, 2.0, 9));
    std::map<int, int> game1_per_year;
    for (const Date date : result.calendar.game1) {
        const auto fields = calendar_fields(day_start(date));
        CHECK(fields.day_of_week == 5);
        CHECK(fields.month >= 9);
        CHECK(fields.month <= 11);
        game1_per_year[fields.year] += 1;
    }
    for (const auto& [year, count] : game1_per_year) CHECK(count == 7);
    CHECK(game1_per_year.size() >= 2);

    std::map<int, int> game2_per_year;
    for (const Date date : result.calendar.game2) {
        const auto fields = calendar_fields(day_start(date));
        CHECK(fields.day_of_week == 6);
        CHECK(fields.month >= 9);
        CHECK(fields.month <= 12);
        game2_per_year[fields.year] += 1;
    }
    for (const auto& [year, count] : game2_per_year) CHECK(count == 8);
}

TEST_CASE("weather covers every scenario hour in order") {
    const auto result = generate(small_scenario(15, 4.0, 2));
    REQUIRE(result.weather.size() == result.index.size());
    for (std::size_t i = 0; i < result.weather.size(); ++i) {
        CHECK(result.weather[i].hour == result.index.hours[i]);
        CHECK(std::isfinite(result.weather[i].temperature_f));
    }
}

TEST_CASE("scenario JSON round-trips and rejects infeasible settings") {
    ScenarioConfig scenario = small_scenario(90, 9.5, 123);
    scenario.dirty_waiting_rate = 0.01;
    scenario.annual_amplitude = 0.25;
    const auto restored = ScenarioConfig::from_json(scenario.to_json());
    CHECK(restored == scenario);

    ScenarioConfig bad = scenario;
    bad.base_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = scenario;
    bad.esi_mix = {0.5, 0.5, 0.5, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = scenario;
    bad.daily_amplitude = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = scenario;
    bad.missing_esi_rate = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = scenario;
    bad.admission_probability = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(ScenarioConfig::from_json("{}"), std::invalid_argument);
}
