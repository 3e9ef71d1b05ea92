#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edflow {

// Minimal comma-separated reader for the toolkit's flat schemas. Handles
// double-quoted fields and CRLF endings; one record per line.
struct CsvRow {
    std::size_t line = 0;  // 1-based physical line number
    std::vector<std::string> fields;
};

struct CsvFile {
    std::vector<std::string> header;
    std::vector<CsvRow> rows;
};

// Throws std::runtime_error when the content has no header row.
CsvFile parse_csv(std::string_view content);

// Reads the whole file; throws std::runtime_error if unreadable.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

std::string csv_escape(std::string_view field);
void append_csv_row(std::string& out, const std::vector<std::string>& fields);

// Shortest round-trip decimal rendering (std::to_chars).
std::string format_double(double value);
std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

// FNV-1a 64-bit content digest, hex-encoded; used in run manifests.
std::string fnv1a_hex(std::string_view content);

}  // namespace edflow
