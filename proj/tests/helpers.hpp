#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edflow/ingest.hpp"
#include "edflow/rng.hpp"
#include "edflow/time.hpp"

namespace edflow::testing {

// Random valid visit whose milestones land within [base, base + span_hours).
inline VisitTimeline random_visit(Rng& rng, std::string id, Timestamp base,
                                  std::int64_t span_hours) {
    VisitTimeline v;
    v.visit_id = std::move(id);
    v.arrival = base + rng.below(static_cast<std::uint64_t>(span_hours * kSecondsPerHour / 2));

    Timestamp cursor = v.arrival;
    auto advance = [&](double max_hours) {
        cursor += static_cast<Timestamp>(rng.uniform(0.0, max_hours * kSecondsPerHour));
        return cursor;
    };

    if (rng.bernoulli(0.95)) {
        v.waiting_start = advance(0.5);
        v.waiting_end = advance(4.0);
    }
    if (rng.bernoulli(0.95)) {
        v.treatment_start = advance(0.5);
        v.treatment_end = advance(8.0);
    }
    if (rng.bernoulli(0.5)) {
        v.bed_request = advance(0.5);
        advance(24.0);
    }
    v.checkout = cursor > v.arrival ? cursor : v.arrival;

    double pick = rng.uniform();
    if (pick < 0.1) {
        v.esi = std::nullopt;
    } else if (pick < 0.15) {
        v.esi = EsiCode::obstetrics();
    } else {
        v.esi = EsiCode::level(1 + static_cast<int>(rng.below(5)));
    }
    return v;
}

inline std::vector<VisitTimeline> random_visits(Rng& rng, std::size_t count, Timestamp base,
                                                std::int64_t span_hours) {
    std::vector<VisitTimeline> visits;
    visits.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        visits.push_back(random_visit(rng, "v" + std::to_string(i), base, span_hours));
    }
    return visits;
}

}  // namespace edflow::testing
