#include "edflow/flow_features.hpp"

#include <algorithm>
#include <stdexcept>

#include "edflow/preprocess.hpp"
#include "edflow/stats.hpp"

namespace edflow {
namespace {

struct IntervalEvents {
    // Phase starts, ascending.
    std::vector<Timestamp> starts;
    // (end, start) of each interval, ascending by end.
    std::vector<std::pair<Timestamp, Timestamp>> ends;
};

IntervalEvents collect_events(const std::vector<VisitTimeline>& visits, Phase phase,
                              std::optional<EsiGroup> esi_filter) {
    IntervalEvents events;
    for (const auto& visit : visits) {
        if (esi_filter && esi_group(visit.esi) != *esi_filter) continue;
        auto interval = phase_interval(visit, phase);
        if (!interval || interval->first == interval->second) continue;
        events.starts.push_back(interval->first);
        events.ends.emplace_back(interval->second, interval->first);
    }
    std::sort(events.starts.begin(), events.starts.end());
    std::sort(events.ends.begin(), events.ends.end());
    return events;
}

ElapsedSums sweep(const IntervalEvents& events, const HourIndex& index) {
    ElapsedSums sums;
    sums.count.assign(index.size(), 0);
    sums.seconds.assign(index.size(), 0);

    std::size_t si = 0;
    std::size_t ei = 0;
    std::int64_t started = 0;
    std::int64_t ended = 0;
    std::int64_t started_start_sum = 0;
    std::int64_t ended_start_sum = 0;

    std::size_t row = 0;
    for (Timestamp h = index.start; h <= index.end; h += kSecondsPerHour, ++row) {
        while (si < events.starts.size() && events.starts[si] <= h) {
            started_start_sum += events.starts[si];
            ++started;
            ++si;
        }
        while (ei < events.ends.size() && events.ends[ei].first <= h) {
            ended_start_sum += events.ends[ei].second;
            ++ended;
            ++ei;
        }
        std::int64_t active = started - ended;
        sums.count[row] = active;
        sums.seconds[row] = active * h - (started_start_sum - ended_start_sum);
    }
    return sums;
}

}  // namespace

EsiGroup esi_group(const std::optional<EsiCode>& esi) {
    if (!esi || esi->is_obstetrics()) return EsiGroup::kG3;
    switch (esi->code) {
        case 1:
        case 2:
            return EsiGroup::kG12;
        case 3:
            return EsiGroup::kG3;
        default:
            return EsiGroup::kG45;
    }
}

std::optional<std::pair<Timestamp, Timestamp>> phase_interval(const VisitTimeline& visit,
                                                              Phase phase) {
    switch (phase) {
        case Phase::kBoarding:
            if (!visit.bed_request) return std::nullopt;
            return std::make_pair(*visit.bed_request, visit.checkout);
        case Phase::kWaiting:
            if (!visit.waiting_start || !visit.waiting_end) return std::nullopt;
            return std::make_pair(*visit.waiting_start, *visit.waiting_end);
        case Phase::kTreatment:
            if (!visit.treatment_start || !visit.treatment_end) return std::nullopt;
            return std::make_pair(*visit.treatment_start, *visit.treatment_end);
    }
    throw std::invalid_argument("unknown phase");
}

std::vector<double> hourly_phase_count(const std::vector<VisitTimeline>& visits, Phase phase,
                                       const HourIndex& index,
                                       std::optional<EsiGroup> esi_filter) {
    ElapsedSums sums = sweep(collect_events(visits, phase, esi_filter), index);
    std::vector<double> counts(sums.count.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        counts[i] = static_cast<double>(sums.count[i]);
    }
    return counts;
}

ElapsedSums hourly_elapsed_sums(const std::vector<VisitTimeline>& visits, Phase phase,
                                const HourIndex& index) {
    return sweep(collect_events(visits, phase, std::nullopt), index);
}

std::vector<double> hourly_avg_elapsed(const std::vector<VisitTimeline>& visits, Phase phase,
                                       const HourIndex& index) {
    ElapsedSums sums = hourly_elapsed_sums(visits, phase, index);
    std::vector<double> minutes(sums.count.size());
    for (std::size_t i = 0; i < minutes.size(); ++i) {
        minutes[i] = mean_minutes(sums.seconds[i], sums.count[i]);
    }
    return minutes;
}

std::vector<double> hourly_census(const std::vector<InpatientStay>& stays,
                                  const HourIndex& index) {
    IntervalEvents events;
    for (const auto& stay : stays) {
        if (stay.arrival == stay.discharge) continue;
        events.starts.push_back(stay.arrival);
        events.ends.emplace_back(stay.discharge, stay.arrival);
    }
    std::sort(events.starts.begin(), events.starts.end());
    std::sort(events.ends.begin(), events.ends.end());

    ElapsedSums sums = sweep(events, index);
    std::vector<double> counts(sums.count.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        counts[i] = static_cast<double>(sums.count[i]);
    }
    return counts;
}

std::vector<double> extreme_indicator(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("extreme indicator of empty series");
    double cutoff = mean(values) + population_std(values);
    std::vector<double> flags(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        flags[i] = values[i] > cutoff ? 1.0 : 0.0;
    }
    return flags;
}

const std::vector<std::string>& hourly_record_columns() {
    static const std::vector<std::string> names = {
        "boarding_count",
        "boarding_count_esi12",
        "boarding_count_esi3",
        "boarding_count_esi45",
        "avg_boarding_time",
        "waiting_count",
        "waiting_count_esi12",
        "waiting_count_esi3",
        "waiting_count_esi45",
        "avg_waiting_time",
        "treatment_count",
        "avg_treatment_time",
        "extreme_case_indicator",
        "hospital_census",
        "year",
        "month",
        "day_of_month",
        "day_of_week",
        "hour_of_day",
        "temperature_f",
        "weather_clear",
        "weather_clouds",
        "weather_rain",
        "weather_thunderstorm",
        "weather_others",
        "federal_holiday",
        "football_game1",
        "football_game2",
    };
    return names;
}

HourlyTable assemble_hourly_records(const std::vector<VisitTimeline>& visits,
                                    const std::vector<InpatientStay>& stays,
                                    const std::vector<WeatherObservation>& weather,
                                    const CalendarFlags& calendar, const HourIndex& index,
                                    const AssembleOptions& options) {
    if (weather.empty()) {
        throw std::invalid_argument("at least one weather observation is required");
    }
    std::vector<WeatherObservation> sorted_weather = weather;
    std::sort(sorted_weather.begin(), sorted_weather.end(),
              [](const auto& a, const auto& b) { return a.hour < b.hour; });

    const std::size_t n = index.size();
    std::vector<Timestamp> hours;
    hours.reserve(n);
    for (Timestamp h = index.start; h <= index.end; h += kSecondsPerHour) hours.push_back(h);

    std::vector<double> boarding = hourly_phase_count(visits, Phase::kBoarding, index);
    std::vector<double> extreme;
    if (options.extreme_threshold) {
        extreme.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            extreme[i] = boarding[i] > *options.extreme_threshold ? 1.0 : 0.0;
        }
    } else {
        extreme = extreme_indicator(boarding);
    }

    std::vector<double> year(n), month(n), dom(n), dow(n), hod(n);
    std::vector<double> holiday(n), game1(n), game2(n);
    std::vector<double> temperature(n);
    std::vector<std::vector<double>> weather_onehot(5, std::vector<double>(n, 0.0));

    std::size_t wi = 0;
    for (std::size_t i = 0; i < n; ++i) {
        CalendarFields fields = calendar_fields(hours[i]);
        year[i] = fields.year;
        month[i] = fields.month;
        dom[i] = fields.day_of_month;
        dow[i] = fields.day_of_week;
        hod[i] = fields.hour;

        Date day = day_of(hours[i]);
        holiday[i] = calendar.holidays.count(day) ? 1.0 : 0.0;
        game1[i] = calendar.game1.count(day) ? 1.0 : 0.0;
        game2[i] = calendar.game2.count(day) ? 1.0 : 0.0;

        while (wi + 1 < sorted_weather.size() && sorted_weather[wi + 1].hour <= hours[i]) ++wi;
        const WeatherObservation& obs = sorted_weather[wi];
        temperature[i] = obs.temperature_f;
        weather_onehot[static_cast<std::size_t>(group_weather(obs.condition))][i] = 1.0;
    }

    HourlyTable table(std::move(hours));
    table.add_column("boarding_count", std::move(boarding));
    table.add_column("boarding_count_esi12",
                     hourly_phase_count(visits, Phase::kBoarding, index, EsiGroup::kG12));
    table.add_column("boarding_count_esi3",
                     hourly_phase_count(visits, Phase::kBoarding, index, EsiGroup::kG3));
    table.add_column("boarding_count_esi45",
                     hourly_phase_count(visits, Phase::kBoarding, index, EsiGroup::kG45));
    table.add_column("avg_boarding_time", hourly_avg_elapsed(visits, Phase::kBoarding, index));
    table.add_column("waiting_count", hourly_phase_count(visits, Phase::kWaiting, index));
    table.add_column("waiting_count_esi12",
                     hourly_phase_count(visits, Phase::kWaiting, index, EsiGroup::kG12));
    table.add_column("waiting_count_esi3",
                     hourly_phase_count(visits, Phase::kWaiting, index, EsiGroup::kG3));
    table.add_column("waiting_count_esi45",
                     hourly_phase_count(visits, Phase::kWaiting, index, EsiGroup::kG45));
    table.add_column("avg_waiting_time", hourly_avg_elapsed(visits, Phase::kWaiting, index));
    table.add_column("treatment_count", hourly_phase_count(visits, Phase::kTreatment, index));
    table.add_column("avg_treatment_time", hourly_avg_elapsed(visits, Phase::kTreatment, index));
    table.add_column("extreme_case_indicator", std::move(extreme));
    table.add_column("hospital_census", hourly_census(stays, index));
    table.add_column("year", std::move(year));
    table.add_column("month", std::move(month));
    table.add_column("day_of_month", std::move(dom));
    table.add_column("day_of_week", std::move(dow));
    table.add_column("hour_of_day", std::move(hod));
    table.add_column("temperature_f", std::move(temperature));
    table.add_column("weather_clear", std::move(weather_onehot[0]));
    table.add_column("weather_clouds", std::move(weather_onehot[1]));
    table.add_column("weather_rain", std::move(weather_onehot[2]));
    table.add_column("weather_thunderstorm", std::move(weather_onehot[3]));
    table.add_column("weather_others", std::move(weather_onehot[4]));
    table.add_column("federal_holiday", std::move(holiday));
    table.add_column("football_game1", std::move(game1));
    table.add_column("football_game2", std::move(game2));
    return table;
}

}  // namespace edflow
