#include "edflow/table.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "edflow/csv.hpp"

namespace edflow {

bool HourlyTable::has_column(std::string_view name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t HourlyTable::column_index(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
        throw std::invalid_argument("unknown column: " + std::string(name));
    }
    return static_cast<std::size_t>(it - names_.begin());
}

const std::vector<double>& HourlyTable::column(std::string_view name) const {
    return columns_[column_index(name)];
}

void HourlyTable::add_column(std::string name, std::vector<double> values) {
    if (values.size() != hours_.size()) {
        throw std::invalid_argument("column " + name + " has " + std::to_string(values.size()) +
                                    " values for " + std::to_string(hours_.size()) + " rows");
    }
    if (has_column(name)) {
        throw std::invalid_argument("duplicate column: " + name);
    }
    names_.push_back(std::move(name));
    columns_.push_back(std::move(values));
}

std::vector<std::size_t> HourlyTable::segment_ids() const {
    std::vector<std::size_t> ids(hours_.size(), 0);
    std::size_t current = 0;
    for (std::size_t i = 1; i < hours_.size(); ++i) {
        if (hours_[i] - hours_[i - 1] != kSecondsPerHour) ++current;
        ids[i] = current;
    }
    return ids;
}

HourlyTable HourlyTable::without_window(Timestamp from, Timestamp to) const {
    std::vector<std::size_t> keep;
    keep.reserve(hours_.size());
    for (std::size_t i = 0; i < hours_.size(); ++i) {
        if (hours_[i] < from || hours_[i] > to) keep.push_back(i);
    }
    std::vector<Timestamp> hours;
    hours.reserve(keep.size());
    for (std::size_t i : keep) hours.push_back(hours_[i]);

    HourlyTable out(std::move(hours));
    for (std::size_t c = 0; c < names_.size(); ++c) {
        std::vector<double> values;
        values.reserve(keep.size());
        for (std::size_t i : keep) values.push_back(columns_[c][i]);
        out.add_column(names_[c], std::move(values));
    }
    for (std::size_t j = 0; j < keep.size(); ++j) {
        if (warmup_[keep[j]]) out.mark_warmup(j);
    }
    return out;
}

std::string HourlyTable::to_csv() const {
    std::string out = "hour";
    for (const auto& name : names_) {
        out += ',';
        out += csv_escape(name);
    }
    out += '\n';
    for (std::size_t i = 0; i < hours_.size(); ++i) {
        out += format_timestamp(hours_[i]);
        for (std::size_t c = 0; c < columns_.size(); ++c) {
            out += ',';
            out += format_double(columns_[c][i]);
        }
        out += '\n';
    }
    return out;
}

HourlyTable HourlyTable::from_csv(std::string_view content) {
    CsvFile file = parse_csv(content);
    if (file.header.empty() || file.header[0] != "hour") {
        throw std::runtime_error("hourly table csv must start with an hour column");
    }
    std::vector<Timestamp> hours;
    hours.reserve(file.rows.size());
    std::vector<std::vector<double>> columns(file.header.size() - 1);
    for (auto& col : columns) col.reserve(file.rows.size());

    for (const auto& row : file.rows) {
        if (row.fields.size() != file.header.size()) {
            throw std::runtime_error("row " + std::to_string(row.line) + ": expected " +
                                     std::to_string(file.header.size()) + " fields");
        }
        auto hour = parse_timestamp(row.fields[0]);
        if (!hour) {
            throw std::runtime_error("row " + std::to_string(row.line) + ": bad hour timestamp");
        }
        hours.push_back(*hour);
        for (std::size_t c = 1; c < row.fields.size(); ++c) {
            auto value = parse_double(row.fields[c]);
            if (!value) {
                throw std::runtime_error("row " + std::to_string(row.line) + ": bad number in " +
                                         file.header[c]);
            }
            columns[c - 1].push_back(*value);
        }
    }

    HourlyTable out(std::move(hours));
    for (std::size_t c = 1; c < file.header.size(); ++c) {
        out.add_column(file.header[c], std::move(columns[c - 1]));
    }
    return out;
}

}  // namespace edflow
