#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace edflow {

inline double mean(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean of empty vector");
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

// Population standard deviation (divides by n, not n-1).
inline double population_std(std::span<const double> values) {
    double m = mean(values);
    double sq = 0.0;
    for (double v : values) sq += (v - m) * (v - m);
    return std::sqrt(sq / static_cast<double>(values.size()));
}

// Shared conversion from integer second totals to a mean in minutes. Both the
// sweep-line aggregator and the simulator's ground-truth bookkeeping go
// through this, so their outputs agree bit for bit whenever the integer sums
// agree.
inline double mean_minutes(std::int64_t total_seconds, std::int64_t count) {
    if (count == 0) return 0.0;
    return static_cast<double>(total_seconds) / (60.0 * static_cast<double>(count));
}

}  // namespace edflow
