#include "edflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "edflow/csv.hpp"
#include "edflow/flow_features.hpp"
#include "edflow/preprocess.hpp"
#include "edflow/rng.hpp"
#include "edflow/stats.hpp"

namespace edflow {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kEdWarmupDays = 14;
constexpr int kInpatientWarmupDays = 60;
constexpr double kMinHourlyRate = 0.05;
constexpr double kWeatherStayProbability = 0.88;
constexpr int kGame1PerSeason = 7;
constexpr int kGame2PerSeason = 8;

// Relative frequencies of the ten raw conditions, used both for the initial
// state and for every off-diagonal Markov transition.
const std::vector<double> kConditionWeights = {
    0.28,  // Clouds
    0.34,  // Clear
    0.14,  // Rain
    0.07,  // Mist
    0.03,  // Thunderstorm
    0.05,  // Drizzle
    0.03,  // Fog
    0.03,  // Haze
    0.02,  // Snow
    0.01,  // Smoke
};

Date nth_weekday(int year, int month, int weekday, int n) {
    Date date = make_date(year, month, 1);
    while (calendar_fields(day_start(date)).day_of_week != weekday) ++date;
    return date + static_cast<Date>(n - 1) * 7;
}

Date last_weekday(int year, int month, int weekday) {
    Date date = make_date(year, month + 1, 1) - 1;
    while (calendar_fields(day_start(date)).day_of_week != weekday) --date;
    return date;
}

int day_of_year(Date date) {
    const int year = calendar_fields(day_start(date)).year;
    return static_cast<int>(date - make_date(year, 1, 1));
}

std::string visit_id(const char* prefix, std::size_t ordinal) {
    char buffer[24];
    std::snprintf(buffer, sizeof(buffer), "%s%07zu", prefix, ordinal);
    return buffer;
}

double clamp_duration(double seconds, double limit_seconds) {
    return std::min(seconds, limit_seconds);
}

// Next instant with a clock hour inside [start_hour, end_hour), drawn
// uniformly over the window; instants already inside stay put.
Timestamp defer_to_release_window(Timestamp checkout, int start_hour, int end_hour, Rng& rng) {
    const Timestamp midnight = day_start(day_of(checkout));
    const std::int64_t second_of_day = checkout - midnight;
    const std::int64_t window_start = start_hour * kSecondsPerHour;
    const std::int64_t window_end = end_hour * kSecondsPerHour;
    if (second_of_day >= window_start && second_of_day < window_end) return checkout;
    const Timestamp base = second_of_day >= window_end ? midnight + kSecondsPerDay : midnight;
    const auto offset = static_cast<std::int64_t>(
        rng.uniform(0.0, static_cast<double>(window_end - window_start)));
    return base + window_start + offset;
}

// Hours h with s <= h < e, clipped to the index, as positions.
template <typename Fn>
void for_each_covered_hour(Timestamp s, Timestamp e, const HourIndex& index, Fn&& fn) {
    Timestamp h = hour_floor(s + kSecondsPerHour - 1);
    if (h < index.start) h = index.start;
    for (; h < e && h <= index.end; h += kSecondsPerHour) {
        fn(static_cast<std::size_t>((h - index.start) / kSecondsPerHour), h);
    }
}

struct PhaseAccumulator {
    std::vector<std::int64_t> count;
    std::vector<std::int64_t> seconds;
    std::vector<std::int64_t> esi12;
    std::vector<std::int64_t> esi3;
    std::vector<std::int64_t> esi45;

    explicit PhaseAccumulator(std::size_t n)
        : count(n, 0), seconds(n, 0), esi12(n, 0), esi3(n, 0), esi45(n, 0) {}
};

std::vector<double> to_double(const std::vector<std::int64_t>& values) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = static_cast<double>(values[i]);
    return out;
}

HourlyTable bookkeeping_table(const std::vector<VisitTimeline>& clean,
                              const std::vector<InpatientStay>& stays, const HourIndex& index) {
    const std::size_t n = index.size();
    PhaseAccumulator boarding(n);
    PhaseAccumulator waiting(n);
    PhaseAccumulator treatment(n);

    for (const VisitTimeline& visit : clean) {
        const EsiGroup group = esi_group(visit.esi);
        for (const Phase phase : {Phase::kBoarding, Phase::kWaiting, Phase::kTreatment}) {
            const auto interval = phase_interval(visit, phase);
            if (!interval || interval->first == interval->second) continue;
            PhaseAccumulator& accum = phase == Phase::kBoarding  ? boarding
                                      : phase == Phase::kWaiting ? waiting
                                                                 : treatment;
            for_each_covered_hour(
                interval->first, interval->second, index,
                [&](std::size_t pos, Timestamp h) {
                    accum.count[pos] += 1;
                    accum.seconds[pos] += h - interval->first;
                    if (group == EsiGroup::kG12) accum.esi12[pos] += 1;
                    if (group == EsiGroup::kG3) accum.esi3[pos] += 1;
                    if (group == EsiGroup::kG45) accum.esi45[pos] += 1;
                });
        }
    }

    std::vector<std::int64_t> census(n, 0);
    for (const InpatientStay& stay : stays) {
        for_each_covered_hour(stay.arrival, stay.discharge, index,
                              [&](std::size_t pos, Timestamp) { census[pos] += 1; });
    }

    auto averages = [](const PhaseAccumulator& accum) {
        std::vector<double> out(accum.count.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = mean_minutes(accum.seconds[i], accum.count[i]);
        }
        return out;
    };

    HourlyTable table(index.hours);
    table.add_column("boarding_count", to_double(boarding.count));
    table.add_column("boarding_count_esi12", to_double(boarding.esi12));
    table.add_column("boarding_count_esi3", to_double(boarding.esi3));
    table.add_column("boarding_count_esi45", to_double(boarding.esi45));
    table.add_column("avg_boarding_time", averages(boarding));
    table.add_column("waiting_count", to_double(waiting.count));
    table.add_column("waiting_count_esi12", to_double(waiting.esi12));
    table.add_column("waiting_count_esi3", to_double(waiting.esi3));
    table.add_column("waiting_count_esi45", to_double(waiting.esi45));
    table.add_column("avg_waiting_time", averages(waiting));
    table.add_column("treatment_count", to_double(treatment.count));
    table.add_column("avg_treatment_time", averages(treatment));
    table.add_column("hospital_census", to_double(census));
    return table;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (days < 1) throw std::invalid_argument("scenario needs at least one day");
    if (!(base_rate > 0.0)) throw std::invalid_argument("base arrival rate must be positive");
    if (trend_per_year < -0.9) throw std::invalid_argument("trend would drive the rate negative");
    for (const double amplitude : {daily_amplitude, weekly_amplitude, annual_amplitude}) {
        if (amplitude < 0.0 || amplitude > 1.0) {
            throw std::invalid_argument("seasonal amplitudes must lie in [0, 1]");
        }
    }
    for (const double multiplier : {holiday_multiplier, game1_multiplier, game2_multiplier}) {
        if (!(multiplier > 0.0)) throw std::invalid_argument("event multipliers must be positive");
    }
    for (const double multiplier : weather_multipliers) {
        if (!(multiplier > 0.0)) throw std::invalid_argument("weather multipliers must be positive");
    }
    for (const double minutes : {mean_waiting_minutes, mean_treatment_minutes,
                                 mean_boarding_minutes, mean_inpatient_stay_hours}) {
        if (!(minutes > 0.0)) throw std::invalid_argument("mean durations must be positive");
    }
    for (const double sigma : {waiting_sigma, treatment_sigma, boarding_sigma, inpatient_sigma}) {
        if (sigma < 0.0) throw std::invalid_argument("duration dispersions must be non-negative");
    }
    if (admission_probability < 0.0 || admission_probability > 1.0) {
        throw std::invalid_argument("admission probability must lie in [0, 1]");
    }
    if (discharge_window_start_hour < 0 || discharge_window_end_hour > 24 ||
        discharge_window_start_hour >= discharge_window_end_hour) {
        throw std::invalid_argument("discharge window must satisfy 0 <= start < end <= 24");
    }
    if (discharge_bypass_fraction < 0.0 || discharge_bypass_fraction > 1.0) {
        throw std::invalid_argument("discharge bypass fraction must lie in [0, 1]");
    }
    if (!(inpatient_rate > 0.0)) throw std::invalid_argument("inpatient rate must be positive");
    double mix_sum = 0.0;
    for (const double p : esi_mix) {
        if (p < 0.0) throw std::invalid_argument("acuity mix entries must be non-negative");
        mix_sum += p;
    }
    if (std::abs(mix_sum - 1.0) > 1e-9) {
        throw std::invalid_argument("acuity mix must sum to 1");
    }
    double dirty_sum = 0.0;
    for (const double rate :
         {dirty_waiting_rate, dirty_boarding_rate, dirty_treatment_rate, missing_esi_rate}) {
        if (rate < 0.0 || rate > 1.0) {
            throw std::invalid_argument("injection rates must lie in [0, 1]");
        }
        dirty_sum += rate;
    }
    if (dirty_sum > 1.0) {
        throw std::invalid_argument("injection rates together exceed the visit count");
    }
}

std::string ScenarioConfig::to_json() const {
    ordered_json doc;
    doc["start_date"] = format_date(start_date);
    doc["days"] = days;
    doc["base_rate"] = base_rate;
    doc["trend_per_year"] = trend_per_year;
    doc["daily_amplitude"] = daily_amplitude;
    doc["weekly_amplitude"] = weekly_amplitude;
    doc["annual_amplitude"] = annual_amplitude;
    doc["holiday_multiplier"] = holiday_multiplier;
    doc["game1_multiplier"] = game1_multiplier;
    doc["game2_multiplier"] = game2_multiplier;
    doc["weather_multipliers"] = weather_multipliers;
    doc["mean_waiting_minutes"] = mean_waiting_minutes;
    doc["waiting_sigma"] = waiting_sigma;
    doc["mean_treatment_minutes"] = mean_treatment_minutes;
    doc["treatment_sigma"] = treatment_sigma;
    doc["admission_probability"] = admission_probability;
    doc["mean_boarding_minutes"] = mean_boarding_minutes;
    doc["boarding_sigma"] = boarding_sigma;
    doc["discharge_window_start_hour"] = discharge_window_start_hour;
    doc["discharge_window_end_hour"] = discharge_window_end_hour;
    doc["discharge_bypass_fraction"] = discharge_bypass_fraction;
    doc["inpatient_rate"] = inpatient_rate;
    doc["mean_inpatient_stay_hours"] = mean_inpatient_stay_hours;
    doc["inpatient_sigma"] = inpatient_sigma;
    doc["esi_mix"] = esi_mix;
    doc["dirty_waiting_rate"] = dirty_waiting_rate;
    doc["dirty_boarding_rate"] = dirty_boarding_rate;
    doc["dirty_treatment_rate"] = dirty_treatment_rate;
    doc["missing_esi_rate"] = missing_esi_rate;
    doc["seed"] = seed;
    return doc.dump(2);
}

ScenarioConfig ScenarioConfig::from_json(std::string_view text) {
    try {
        const auto doc = ordered_json::parse(text);
        ScenarioConfig config;
        const auto date = parse_date(doc.at("start_date").get<std::string>());
        if (!date) throw std::invalid_argument("bad scenario start_date");
        config.start_date = *date;
        config.days = doc.at("days").get<int>();
        config.base_rate = doc.at("base_rate").get<double>();
        config.trend_per_year = doc.at("trend_per_year").get<double>();
        config.daily_amplitude = doc.at("daily_amplitude").get<double>();
        config.weekly_amplitude = doc.at("weekly_amplitude").get<double>();
        config.annual_amplitude = doc.at("annual_amplitude").get<double>();
        config.holiday_multiplier = doc.at("holiday_multiplier").get<double>();
        config.game1_multiplier = doc.at("game1_multiplier").get<double>();
        config.game2_multiplier = doc.at("game2_multiplier").get<double>();
        config.weather_multipliers = doc.at("weather_multipliers").get<std::array<double, 5>>();
        config.mean_waiting_minutes = doc.at("mean_waiting_minutes").get<double>();
        config.waiting_sigma = doc.at("waiting_sigma").get<double>();
        config.mean_treatment_minutes = doc.at("mean_treatment_minutes").get<double>();
        config.treatment_sigma = doc.at("treatment_sigma").get<double>();
        config.admission_probability = doc.at("admission_probability").get<double>();
        config.mean_boarding_minutes = doc.at("mean_boarding_minutes").get<double>();
        config.boarding_sigma = doc.at("boarding_sigma").get<double>();
        config.discharge_window_start_hour = doc.at("discharge_window_start_hour").get<int>();
        config.discharge_window_end_hour = doc.at("discharge_window_end_hour").get<int>();
        config.discharge_bypass_fraction = doc.at("discharge_bypass_fraction").get<double>();
        config.inpatient_rate = doc.at("inpatient_rate").get<double>();
        config.mean_inpatient_stay_hours = doc.at("mean_inpatient_stay_hours").get<double>();
        config.inpatient_sigma = doc.at("inpatient_sigma").get<double>();
        config.esi_mix = doc.at("esi_mix").get<std::array<double, 6>>();
        config.dirty_waiting_rate = doc.at("dirty_waiting_rate").get<double>();
        config.dirty_boarding_rate = doc.at("dirty_boarding_rate").get<double>();
        config.dirty_treatment_rate = doc.at("dirty_treatment_rate").get<double>();
        config.missing_esi_rate = doc.at("missing_esi_rate").get<double>();
        config.seed = doc.at("seed").get<std::uint64_t>();
        config.validate();
        return config;
    } catch (const ordered_json::exception& error) {
        throw std::invalid_argument(std::string("bad scenario JSON: ") + error.what());
    }
}

std::string InjectionCounts::to_json() const {
    ordered_json doc;
    doc["waiting_over_limit"] = waiting_over_limit;
    doc["boarding_over_limit"] = boarding_over_limit;
    doc["treatment_over_limit"] = treatment_over_limit;
    doc["missing_esi"] = missing_esi;
    return doc.dump(2);
}

std::set<Date> federal_holidays(int year) {
    std::set<Date> dates;
    dates.insert(make_date(year, 1, 1));
    dates.insert(nth_weekday(year, 1, 0, 3));   // MLK: third Monday of January
    dates.insert(nth_weekday(year, 2, 0, 3));   // Presidents: third Monday of February
    dates.insert(last_weekday(year, 5, 0));     // Memorial: last Monday of May
    dates.insert(make_date(year, 6, 19));
    dates.insert(make_date(year, 7, 4));
    dates.insert(nth_weekday(year, 9, 0, 1));   // Labor: first Monday of September
    dates.insert(nth_weekday(year, 10, 0, 2));  // Columbus: second Monday of October
    dates.insert(make_date(year, 11, 11));
    dates.insert(nth_weekday(year, 11, 3, 4));  // Thanksgiving: fourth Thursday of November
    dates.insert(make_date(year, 12, 25));
    return dates;
}

SynthResult generate(ScenarioConfig scenario, std::uint64_t seed_override) {
    scenario.seed = seed_override;
    return generate(scenario);
}

SynthResult generate(const ScenarioConfig& scenario) {
    scenario.validate();
    Rng rng(scenario.seed);
    const CleanLimits limits;

    SynthResult result;
    const Timestamp scenario_start = day_start(scenario.start_date);
    const Timestamp scenario_last =
        scenario_start + static_cast<Timestamp>(scenario.days) * kSecondsPerDay - kSecondsPerHour;
    result.index = HourIndex::build(scenario_start, scenario_last);

    const Timestamp ed_start = scenario_start - kEdWarmupDays * kSecondsPerDay;
    const Timestamp inpatient_start = scenario_start - kInpatientWarmupDays * kSecondsPerDay;

    // Calendar flags, drawn per season year in ascending order.
    const int first_year = calendar_fields(ed_start).year;
    const int last_year = calendar_fields(scenario_last).year;
    for (int year = first_year; year <= last_year; ++year) {
        const auto holidays = federal_holidays(year);
        result.calendar.holidays.insert(holidays.begin(), holidays.end());

        std::vector<Date> saturdays;
        std::vector<Date> sundays;
        for (int month = 9; month <= 12; ++month) {
            const Date begin = make_date(year, month, 1);
            const Date end = month == 12 ? make_date(year + 1, 1, 1) : make_date(year, month + 1, 1);
            for (Date date = begin; date < end; ++date) {
                const int weekday = calendar_fields(day_start(date)).day_of_week;
                if (weekday == 5 && month <= 11) saturdays.push_back(date);
                if (weekday == 6) sundays.push_back(date);
            }
        }
        rng.shuffle(saturdays);
        rng.shuffle(sundays);
        saturdays.resize(std::min<std::size_t>(saturdays.size(), kGame1PerSeason));
        sundays.resize(std::min<std::size_t>(sundays.size(), kGame2PerSeason));
        result.calendar.game1.insert(saturdays.begin(), saturdays.end());
        result.calendar.game2.insert(sundays.begin(), sundays.end());
    }

    // Hourly weather over the warmed-up range; only scenario hours are
    // emitted but arrivals are modulated throughout.
    const std::size_t weather_hours =
        static_cast<std::size_t>((scenario_last - ed_start) / kSecondsPerHour) + 1;
    std::vector<WeatherCondition> conditions(weather_hours);
    std::vector<double> temperatures(weather_hours);
    double temperature_noise = 0.0;
    for (std::size_t i = 0; i < weather_hours; ++i) {
        if (i == 0) {
            conditions[i] = static_cast<WeatherCondition>(rng.categorical(kConditionWeights));
        } else if (rng.bernoulli(kWeatherStayProbability)) {
            conditions[i] = conditions[i - 1];
        } else {
            conditions[i] = static_cast<WeatherCondition>(rng.categorical(kConditionWeights));
        }
        const Timestamp hour = ed_start + static_cast<Timestamp>(i) * kSecondsPerHour;
        const auto fields = calendar_fields(hour);
        const int doy = day_of_year(day_of(hour));
        temperature_noise = 0.9 * temperature_noise + rng.normal(0.0, 1.5);
        temperatures[i] = 55.0 + 22.0 * std::cos(2.0 * kPi * (doy - 200) / 365.0) +
                          8.0 * std::cos(2.0 * kPi * (fields.hour - 15) / 24.0) +
                          temperature_noise;
    }
    for (std::size_t i = 0; i < result.index.size(); ++i) {
        const std::size_t offset =
            static_cast<std::size_t>((scenario_start - ed_start) / kSecondsPerHour) + i;
        result.weather.push_back(
            {result.index.hours[i], conditions[offset], temperatures[offset]});
    }

    // Inpatient stays at a constant rate; the long warm start fills the
    // census before the first scenario hour.
    std::size_t stay_ordinal = 0;
    for (Timestamp hour = inpatient_start; hour <= scenario_last; hour += kSecondsPerHour) {
        const int count = rng.poisson(scenario.inpatient_rate);
        std::vector<std::int64_t> offsets(static_cast<std::size_t>(count));
        for (auto& offset : offsets) offset = static_cast<std::int64_t>(rng.below(3600));
        std::sort(offsets.begin(), offsets.end());
        for (const auto offset : offsets) {
            InpatientStay stay;
            stay.visit_id = visit_id("IP", ++stay_ordinal);
            stay.arrival = hour + offset;
            const double hours_stayed = std::clamp(
                rng.lognormal_mean(scenario.mean_inpatient_stay_hours, scenario.inpatient_sigma),
                2.0, 2000.0);
            stay.discharge = stay.arrival + std::llround(hours_stayed * kSecondsPerHour);
            result.stays.push_back(std::move(stay));
        }
    }

    // ED visits from the modulated arrival process.
    std::size_t ed_ordinal = 0;
    for (Timestamp hour = ed_start; hour <= scenario_last; hour += kSecondsPerHour) {
        const auto fields = calendar_fields(hour);
        const Date date = day_of(hour);
        const double elapsed_years =
            static_cast<double>(hour - scenario_start) / (365.0 * kSecondsPerDay);
        double rate = scenario.base_rate;
        rate *= 1.0 + scenario.trend_per_year * elapsed_years;
        rate *= 1.0 + scenario.daily_amplitude * std::cos(2.0 * kPi * (fields.hour - 15) / 24.0);
        rate *= 1.0 + scenario.weekly_amplitude * std::cos(2.0 * kPi * fields.day_of_week / 7.0);
        rate *= 1.0 +
                scenario.annual_amplitude * std::cos(2.0 * kPi * (day_of_year(date) - 15) / 365.0);
        if (result.calendar.holidays.count(date)) rate *= scenario.holiday_multiplier;
        if (result.calendar.game1.count(date)) rate *= scenario.game1_multiplier;
        if (result.calendar.game2.count(date)) rate *= scenario.game2_multiplier;
        const std::size_t weather_pos =
            static_cast<std::size_t>((hour - ed_start) / kSecondsPerHour);
        rate *= scenario.weather_multipliers[static_cast<std::size_t>(
            group_weather(conditions[weather_pos]))];
        rate = std::max(rate, kMinHourlyRate);

        const int count = rng.poisson(rate);
        std::vector<std::int64_t> offsets(static_cast<std::size_t>(count));
        for (auto& offset : offsets) offset = static_cast<std::int64_t>(rng.below(3600));
        std::sort(offsets.begin(), offsets.end());

        for (const auto offset : offsets) {
            VisitTimeline visit;
            visit.visit_id = visit_id("V", ++ed_ordinal);
            visit.arrival = hour + offset;
            visit.waiting_start = visit.arrival;
            const double waiting_seconds = clamp_duration(
                rng.lognormal_mean(scenario.mean_waiting_minutes * 60.0, scenario.waiting_sigma),
                static_cast<double>(limits.waiting_limit_seconds));
            visit.waiting_end = *visit.waiting_start + std::llround(waiting_seconds);
            visit.treatment_start = visit.waiting_end;
            const double treatment_seconds =
                clamp_duration(rng.lognormal_mean(scenario.mean_treatment_minutes * 60.0,
                                                  scenario.treatment_sigma),
                               static_cast<double>(limits.treatment_limit_seconds));
            visit.treatment_end = *visit.treatment_start + std::llround(treatment_seconds);
            if (rng.bernoulli(scenario.admission_probability)) {
                visit.bed_request = visit.treatment_end;
                const double boarding_seconds =
                    clamp_duration(rng.lognormal_mean(scenario.mean_boarding_minutes * 60.0,
                                                      scenario.boarding_sigma),
                                   static_cast<double>(limits.boarding_limit_seconds));
                visit.checkout = *visit.bed_request + std::llround(boarding_seconds);
                if (rng.uniform() >= scenario.discharge_bypass_fraction) {
                    const Timestamp deferred = defer_to_release_window(
                        visit.checkout, scenario.discharge_window_start_hour,
                        scenario.discharge_window_end_hour, rng);
                    if (deferred - *visit.bed_request <= limits.boarding_limit_seconds) {
                        visit.checkout = deferred;
                    }
                }
            } else {
                visit.checkout = *visit.treatment_end;
            }
            const std::size_t esi_pick = rng.categorical(
                std::vector<double>(scenario.esi_mix.begin(), scenario.esi_mix.end()));
            visit.esi = esi_pick < 5 ? EsiCode::level(static_cast<int>(esi_pick) + 1)
                                     : EsiCode::obstetrics();
            result.visits.push_back(std::move(visit));
        }
    }

    // Injection victims: one shuffled pass hands out disjoint slices per
    // rule, then a slice that only loses its acuity.
    const std::size_t total = result.visits.size();
    const auto count_for = [total](double rate) {
        return static_cast<std::size_t>(std::llround(rate * static_cast<double>(total)));
    };
    const std::size_t n_waiting = count_for(scenario.dirty_waiting_rate);
    const std::size_t n_boarding = count_for(scenario.dirty_boarding_rate);
    const std::size_t n_treatment = count_for(scenario.dirty_treatment_rate);
    const std::size_t n_missing = count_for(scenario.missing_esi_rate);
    if (n_waiting + n_boarding + n_treatment + n_missing > total) {
        throw std::invalid_argument("injection rates exceed the generated visit count");
    }
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    std::size_t cursor = 0;
    std::vector<std::uint8_t> dirty(total, 0);
    const auto take_slice = [&](std::size_t count) {
        std::vector<std::size_t> slice;
        slice.reserve(count);
        for (std::size_t k = 0; k < count; ++k) {
            slice.push_back(order[cursor]);
            dirty[order[cursor++]] = 1;
        }
        return slice;
    };
    const auto waiting_victims = take_slice(n_waiting);
    const auto boarding_victims = take_slice(n_boarding);
    const auto treatment_victims = take_slice(n_treatment);
    for (std::size_t k = 0; k < n_missing; ++k) {
        result.visits[order[cursor++]].esi.reset();
    }
    result.injections = {n_waiting, n_boarding, n_treatment, n_missing};

    // Ground truth sees exactly what survives cleaning: every visit except
    // the dirty ones, acuity blanks included.
    std::vector<VisitTimeline> clean;
    clean.reserve(total - n_waiting - n_boarding - n_treatment);
    for (std::size_t i = 0; i < total; ++i) {
        if (!dirty[i]) clean.push_back(result.visits[i]);
    }
    result.ground_truth = bookkeeping_table(clean, result.stays, result.index);

    // Mutate the victims after bookkeeping. Shifting every later milestone
    // by the same delta keeps the timeline valid while pushing one duration
    // over its limit.
    for (const std::size_t idx : waiting_victims) {
        VisitTimeline& visit = result.visits[idx];
        const std::int64_t current = *visit.waiting_end - *visit.waiting_start;
        const std::int64_t delta = limits.waiting_limit_seconds - current + kSecondsPerHour +
                                   static_cast<std::int64_t>(rng.below(3 * kSecondsPerHour));
        *visit.waiting_end += delta;
        *visit.treatment_start += delta;
        *visit.treatment_end += delta;
        if (visit.bed_request) *visit.bed_request += delta;
        visit.checkout += delta;
    }
    for (const std::size_t idx : boarding_victims) {
        VisitTimeline& visit = result.visits[idx];
        if (!visit.bed_request) visit.bed_request = visit.treatment_end;
        visit.checkout = *visit.bed_request + limits.boarding_limit_seconds + kSecondsPerHour +
                         static_cast<std::int64_t>(rng.below(24 * kSecondsPerHour));
    }
    for (const std::size_t idx : treatment_victims) {
        VisitTimeline& visit = result.visits[idx];
        const std::int64_t current = *visit.treatment_end - *visit.treatment_start;
        const std::int64_t delta = limits.treatment_limit_seconds - current + kSecondsPerHour +
                                   static_cast<std::int64_t>(rng.below(48 * kSecondsPerHour));
        *visit.treatment_end += delta;
        if (visit.bed_request) *visit.bed_request += delta;
        visit.checkout += delta;
    }

    return result;
}

void write_outputs(const SynthResult& result, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const auto path = [&dir](const char* name) {
        return (std::filesystem::path(dir) / name).string();
    };
    write_file(path("ed_tracking.csv"), serialize_visits(result.visits));
    write_file(path("inpatient.csv"), serialize_stays(result.stays));
    write_file(path("weather.csv"), serialize_weather(result.weather));
    write_file(path("holidays.csv"), serialize_dates(result.calendar.holidays));
    write_file(path("games1.csv"), serialize_dates(result.calendar.game1));
    write_file(path("games2.csv"), serialize_dates(result.calendar.game2));
    write_file(path("ground_truth.csv"), result.ground_truth.to_csv());
    write_file(path("injections.json"), result.injections.to_json());
}

}  // namespace edflow
