#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "edflow/ingest.hpp"
#include "edflow/table.hpp"
#include "edflow/time.hpp"

namespace edflow {

// Generator controls. The defaults are tuned so the boarding series roughly
// matches the published operational moments (mean near 28.7, std near 11.2,
// census near 788) while leaving enough predictable structure for the
// forecasting acceptance run. Arrays follow fixed orders: weather
// multipliers by grouped category (clear, clouds, rain, thunderstorm,
// others), acuity mix by ESI level 1..5 and then obstetrics.
struct ScenarioConfig {
    Date start_date = make_date(2022, 1, 1);
    int days = 730;

    double base_rate = 13.4;         // ED arrivals per hour before modulation
    double trend_per_year = 0.15;    // relative arrival growth per 365 days
    double daily_amplitude = 0.6;    // hour-of-day sinusoid, peak mid-afternoon
    double weekly_amplitude = 0.45;  // day-of-week sinusoid, peak Monday
    double annual_amplitude = 0.2;   // day-of-year sinusoid, peak mid-January

    double holiday_multiplier = 1.35;
    double game1_multiplier = 1.8;
    double game2_multiplier = 1.5;
    std::array<double, 5> weather_multipliers = {1.0, 1.0, 0.88, 0.7, 0.92};

    double mean_waiting_minutes = 72.0;
    double waiting_sigma = 0.8;
    double mean_treatment_minutes = 210.0;
    double treatment_sigma = 0.7;
    double admission_probability = 0.0714;
    double mean_boarding_minutes = 1560.0;
    double boarding_sigma = 0.6;

    // Inpatient beds free up during a daytime release window, so boarding
    // ends cluster inside it: a sampled checkout outside the window is
    // deferred to a uniform instant in the next one unless the visit draws a
    // bypass (transfers and off-hours releases).
    int discharge_window_start_hour = 10;
    int discharge_window_end_hour = 18;
    double discharge_bypass_fraction = 0.35;

    double inpatient_rate = 7.2;  // hospital admissions per hour
    double mean_inpatient_stay_hours = 110.0;
    double inpatient_sigma = 0.6;

    std::array<double, 6> esi_mix = {0.02, 0.22, 0.42, 0.24, 0.07, 0.03};

    // Fractions of generated visits mutated to violate one cleaning rule
    // each; victims are disjoint across rules. missing_esi_rate blanks the
    // acuity of visits that stay otherwise clean.
    double dirty_waiting_rate = 0.0;
    double dirty_boarding_rate = 0.0;
    double dirty_treatment_rate = 0.0;
    double missing_esi_rate = 0.0;

    std::uint64_t seed = 0;

    void validate() const;
    std::string to_json() const;
    static ScenarioConfig from_json(std::string_view text);

    bool operator==(const ScenarioConfig&) const = default;
};

struct InjectionCounts {
    std::size_t waiting_over_limit = 0;
    std::size_t boarding_over_limit = 0;
    std::size_t treatment_over_limit = 0;
    std::size_t missing_esi = 0;

    std::string to_json() const;

    bool operator==(const InjectionCounts&) const = default;
};

// Everything one scenario produces. visits holds the records exactly as
// written, injected violations included; ground_truth holds the flow
// metrics and census over the scenario hours, computed by per-visit hour
// enumeration over the clean visits only, independently of the sweep-line
// aggregator.
struct SynthResult {
    std::vector<VisitTimeline> visits;
    std::vector<InpatientStay> stays;
    std::vector<WeatherObservation> weather;
    CalendarFlags calendar;
    HourIndex index;
    HourlyTable ground_truth;
    InjectionCounts injections;
};

// The eleven fixed-or-nth-weekday US federal holidays of one year.
std::set<Date> federal_holidays(int year);

// Runs the scenario: inhomogeneous Poisson arrivals modulated by trend,
// daily/weekly/annual cycles, holidays, games, and Markov-chain weather;
// log-normal phase durations clamped to the cleaning limits; admissions
// routed into boarding; inpatient stays sized for the census target. ED
// generation warm-starts 14 days and inpatient 60 days before the scenario
// so the first scenario hour is already stationary.
SynthResult generate(const ScenarioConfig& scenario);
SynthResult generate(ScenarioConfig scenario, std::uint64_t seed_override);

// Writes ed_tracking.csv, inpatient.csv, weather.csv, holidays.csv,
// games1.csv, games2.csv, ground_truth.csv, and injections.json under dir.
void write_outputs(const SynthResult& result, const std::string& dir);

}  // namespace edflow
