#include "edflow/ingest.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "edflow/csv.hpp"

namespace edflow {
namespace {

const std::vector<std::string> kEdTrackingHeader = {
    "visit_id", "arrival",         "waiting_start", "waiting_end", "treatment_start",
    "treatment_end", "bed_request", "checkout",      "esi"};
const std::vector<std::string> kInpatientHeader = {"visit_id", "arrival", "discharge"};
const std::vector<std::string> kWeatherHeader = {"hour", "condition", "temperature_f"};

void require_header(const CsvFile& file, const std::vector<std::string>& expected,
                    const char* source_name) {
    if (file.header != expected) {
        throw std::runtime_error(std::string("unexpected header for ") + source_name);
    }
}

// Empty field -> nullopt(valid); malformed -> sets bad flag.
std::optional<Timestamp> optional_timestamp(const std::string& field, bool& bad) {
    if (field.empty()) return std::nullopt;
    auto ts = parse_timestamp(field);
    if (!ts) bad = true;
    return ts;
}

}  // namespace

std::optional<EsiCode> parse_esi(std::string_view text) {
    if (text == "OB") return EsiCode::obstetrics();
    if (text.size() == 1 && text[0] >= '1' && text[0] <= '5') {
        return EsiCode::level(text[0] - '0');
    }
    return std::nullopt;
}

std::string format_esi(const EsiCode& esi) {
    if (esi.is_obstetrics()) return "OB";
    return std::string(1, static_cast<char>('0' + esi.code));
}

std::optional<std::string> validate_visit(const VisitTimeline& visit) {
    if (visit.esi && !visit.esi->valid()) return "bad_esi";
    // Present milestones must be non-decreasing in declaration order.
    Timestamp previous = visit.arrival;
    const std::optional<Timestamp> sequence[] = {
        visit.waiting_start, visit.waiting_end,  visit.treatment_start,
        visit.treatment_end, visit.bed_request,  visit.checkout};
    for (const auto& milestone : sequence) {
        if (!milestone) continue;
        if (*milestone < previous) return "non_monotonic_timestamps";
        previous = *milestone;
    }
    return std::nullopt;
}

std::optional<WeatherCondition> parse_weather_condition(std::string_view text) {
    static const std::map<std::string_view, WeatherCondition> lookup = {
        {"Clouds", WeatherCondition::Clouds},
        {"Clear", WeatherCondition::Clear},
        {"Rain", WeatherCondition::Rain},
        {"Mist", WeatherCondition::Mist},
        {"Thunderstorm", WeatherCondition::Thunderstorm},
        {"Drizzle", WeatherCondition::Drizzle},
        {"Fog", WeatherCondition::Fog},
        {"Haze", WeatherCondition::Haze},
        {"Snow", WeatherCondition::Snow},
        {"Smoke", WeatherCondition::Smoke},
    };
    auto it = lookup.find(text);
    if (it == lookup.end()) return std::nullopt;
    return it->second;
}

std::string_view weather_condition_name(WeatherCondition condition) {
    switch (condition) {
        case WeatherCondition::Clouds: return "Clouds";
        case WeatherCondition::Clear: return "Clear";
        case WeatherCondition::Rain: return "Rain";
        case WeatherCondition::Mist: return "Mist";
        case WeatherCondition::Thunderstorm: return "Thunderstorm";
        case WeatherCondition::Drizzle: return "Drizzle";
        case WeatherCondition::Fog: return "Fog";
        case WeatherCondition::Haze: return "Haze";
        case WeatherCondition::Snow: return "Snow";
        case WeatherCondition::Smoke: return "Smoke";
    }
    return "Clear";
}

ParseResult<VisitTimeline> parse_ed_tracking(std::string_view content) {
    const CsvFile file = parse_csv(content);
    require_header(file, kEdTrackingHeader, "ed_tracking");

    ParseResult<VisitTimeline> result;
    result.total_rows = file.rows.size();
    for (const auto& row : file.rows) {
        if (row.fields.size() != kEdTrackingHeader.size()) {
            result.rejected.push_back({row.line, "bad_field_count"});
            continue;
        }
        VisitTimeline visit;
        visit.visit_id = row.fields[0];
        if (visit.visit_id.empty()) {
            result.rejected.push_back({row.line, "missing_visit_id"});
            continue;
        }
        auto arrival = parse_timestamp(row.fields[1]);
        if (!arrival) {
            result.rejected.push_back({row.line, row.fields[1].empty() ? "missing_arrival" : "bad_timestamp"});
            continue;
        }
        visit.arrival = *arrival;
        bool bad_optional = false;
        visit.waiting_start = optional_timestamp(row.fields[2], bad_optional);
        visit.waiting_end = optional_timestamp(row.fields[3], bad_optional);
        visit.treatment_start = optional_timestamp(row.fields[4], bad_optional);
        visit.treatment_end = optional_timestamp(row.fields[5], bad_optional);
        visit.bed_request = optional_timestamp(row.fields[6], bad_optional);
        if (bad_optional) {
            result.rejected.push_back({row.line, "bad_timestamp"});
            continue;
        }
        auto checkout = parse_timestamp(row.fields[7]);
        if (!checkout) {
            result.rejected.push_back({row.line, row.fields[7].empty() ? "missing_checkout" : "bad_timestamp"});
            continue;
        }
        visit.checkout = *checkout;
        if (!row.fields[8].empty()) {
            auto esi = parse_esi(row.fields[8]);
            if (!esi) {
                result.rejected.push_back({row.line, "bad_esi"});
                continue;
            }
            visit.esi = esi;
        }
        if (auto reason = validate_visit(visit)) {
            result.rejected.push_back({row.line, *reason});
            continue;
        }
        result.records.push_back(std::move(visit));
    }
    return result;
}

ParseResult<InpatientStay> parse_inpatient(std::string_view content) {
    const CsvFile file = parse_csv(content);
    require_header(file, kInpatientHeader, "inpatient");

    ParseResult<InpatientStay> result;
    result.total_rows = file.rows.size();
    for (const auto& row : file.rows) {
        if (row.fields.size() != kInpatientHeader.size()) {
            result.rejected.push_back({row.line, "bad_field_count"});
            continue;
        }
        InpatientStay stay;
        stay.visit_id = row.fields[0];
        auto arrival = parse_timestamp(row.fields[1]);
        auto discharge = parse_timestamp(row.fields[2]);
        if (!arrival || !discharge) {
            result.rejected.push_back({row.line, "bad_timestamp"});
            continue;
        }
        stay.arrival = *arrival;
        stay.discharge = *discharge;
        if (stay.discharge < stay.arrival) {
            result.rejected.push_back({row.line, "non_monotonic_timestamps"});
            continue;
        }
        result.records.push_back(std::move(stay));
    }
    return result;
}

ParseResult<WeatherObservation> parse_weather(std::string_view content) {
    const CsvFile file = parse_csv(content);
    require_header(file, kWeatherHeader, "weather");

    ParseResult<WeatherObservation> result;
    result.total_rows = file.rows.size();
    // Last occurrence wins for duplicate hours.
    std::map<Timestamp, WeatherObservation> by_hour;
    for (const auto& row : file.rows) {
        if (row.fields.size() != kWeatherHeader.size()) {
            result.rejected.push_back({row.line, "bad_field_count"});
            continue;
        }
        auto hour = parse_timestamp(row.fields[0]);
        if (!hour) {
            result.rejected.push_back({row.line, "bad_timestamp"});
            continue;
        }
        auto condition = parse_weather_condition(row.fields[1]);
        if (!condition) {
            result.rejected.push_back({row.line, "unknown_condition"});
            continue;
        }
        auto temperature = parse_double(row.fields[2]);
        if (!temperature) {
            result.rejected.push_back({row.line, "bad_temperature"});
            continue;
        }
        by_hour[hour_floor(*hour)] = {hour_floor(*hour), *condition, *temperature};
    }
    result.records.reserve(by_hour.size());
    for (const auto& [hour, observation] : by_hour) result.records.push_back(observation);
    return result;
}

namespace {

void parse_date_file(std::string_view content, std::set<Date>& out,
                     std::vector<RejectedRow>& rejected, std::size_t& total_rows) {
    const CsvFile file = parse_csv(content);
    if (file.header != std::vector<std::string>{"date"}) {
        throw std::runtime_error("unexpected header for date file");
    }
    total_rows += file.rows.size();
    for (const auto& row : file.rows) {
        if (row.fields.size() != 1) {
            rejected.push_back({row.line, "bad_field_count"});
            continue;
        }
        auto date = parse_date(row.fields[0]);
        if (!date) {
            rejected.push_back({row.line, "bad_date"});
            continue;
        }
        out.insert(*date);
    }
}

}  // namespace

CalendarParseResult parse_calendar(std::string_view holiday_content,
                                   std::string_view game1_content,
                                   std::string_view game2_content) {
    CalendarParseResult result;
    parse_date_file(holiday_content, result.flags.holidays, result.rejected, result.total_rows);
    parse_date_file(game1_content, result.flags.game1, result.rejected, result.total_rows);
    parse_date_file(game2_content, result.flags.game2, result.rejected, result.total_rows);
    return result;
}

namespace {

std::string opt_ts(const std::optional<Timestamp>& ts) {
    return ts ? format_timestamp(*ts) : std::string();
}

}  // namespace

std::string serialize_visits(const std::vector<VisitTimeline>& visits) {
    std::string out;
    append_csv_row(out, kEdTrackingHeader);
    for (const auto& v : visits) {
        append_csv_row(out, {v.visit_id, format_timestamp(v.arrival), opt_ts(v.waiting_start),
                             opt_ts(v.waiting_end), opt_ts(v.treatment_start),
                             opt_ts(v.treatment_end), opt_ts(v.bed_request),
                             format_timestamp(v.checkout), v.esi ? format_esi(*v.esi) : ""});
    }
    return out;
}

std::string serialize_stays(const std::vector<InpatientStay>& stays) {
    std::string out;
    append_csv_row(out, kInpatientHeader);
    for (const auto& s : stays) {
        append_csv_row(out, {s.visit_id, format_timestamp(s.arrival), format_timestamp(s.discharge)});
    }
    return out;
}

std::string serialize_weather(const std::vector<WeatherObservation>& observations) {
    std::string out;
    append_csv_row(out, kWeatherHeader);
    for (const auto& o : observations) {
        append_csv_row(out, {format_timestamp(o.hour), std::string(weather_condition_name(o.condition)),
                             format_double(o.temperature_f)});
    }
    return out;
}

std::string serialize_dates(const std::set<Date>& dates) {
    std::string out = "date\n";
    for (Date d : dates) {
        out += format_date(d);
        out.push_back('\n');
    }
    return out;
}

}  // namespace edflow
