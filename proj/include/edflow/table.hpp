#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "edflow/time.hpp"

namespace edflow {

// Column-oriented hourly table. Hours are strictly ascending and advance in
// one-hour steps except across recorded exclusion gaps; contiguous runs form
// segments that windowed transforms must not straddle.
class HourlyTable {
public:
    HourlyTable() = default;
    explicit HourlyTable(std::vector<Timestamp> hours) : hours_(std::move(hours)) {
        warmup_.assign(hours_.size(), 0);
    }

    std::size_t rows() const { return hours_.size(); }
    std::size_t cols() const { return names_.size(); }

    const std::vector<Timestamp>& hours() const { return hours_; }
    const std::vector<std::string>& column_names() const { return names_; }

    bool has_column(std::string_view name) const;
    // Throws std::invalid_argument for an unknown name.
    const std::vector<double>& column(std::string_view name) const;
    std::size_t column_index(std::string_view name) const;

    // Throws on length mismatch or duplicate name.
    void add_column(std::string name, std::vector<double> values);

    const std::vector<std::uint8_t>& warmup() const { return warmup_; }
    void mark_warmup(std::size_t row) { warmup_.at(row) = 1; }

    // Segment id per row; increments wherever consecutive hours differ from
    // one hour.
    std::vector<std::size_t> segment_ids() const;

    // Rows with hours in [from, to] removed (closed window).
    HourlyTable without_window(Timestamp from, Timestamp to) const;

    // Delimited export/import; hour column first, then columns in order.
    std::string to_csv() const;
    static HourlyTable from_csv(std::string_view content);

private:
    std::vector<Timestamp> hours_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
    std::vector<std::uint8_t> warmup_;
};

}  // namespace edflow
