#pragma once

// Brute-force reference for window_occupancy, independent of the run/gap
// bookkeeping in the library: walk the window in 1-second steps, sampling at
// each second's midpoint, and hand the whole second to whichever record is
// nearest in time (equidistant seconds are split half/half). For integer
// timestamps every run boundary lands on an integer or half-integer, so the
// midpoint samples reproduce the half-gap attribution exactly.

#include "mobent/entropy.hpp"
#include "mobent/grid.hpp"
#include "mobent/trace.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <span>

namespace testsupport {

inline std::map<int, double> occupancy_oracle_1s(std::span<const mobent::LocationRecord> records,
                                                 const mobent::Grid& grid,
                                                 const mobent::TimeWindow& window) {
    std::map<int, double> seconds;
    if (records.empty()) return seconds;
    const std::int64_t duration = window.t_end - window.t_start;
    std::size_t j = 0;
    for (std::int64_t i = 0; i < duration; ++i) {
        const double s = static_cast<double>(window.t_start) + static_cast<double>(i) + 0.5;
        while (j + 1 < records.size() && static_cast<double>(records[j + 1].timestamp) <= s) ++j;
        const double d0 = std::abs(static_cast<double>(records[j].timestamp) - s);
        const int c0 = grid.cell_of(records[j].latitude, records[j].longitude);
        if (j + 1 < records.size()) {
            const double d1 = std::abs(static_cast<double>(records[j + 1].timestamp) - s);
            const int c1 = grid.cell_of(records[j + 1].latitude, records[j + 1].longitude);
            if (d1 < d0) {
                seconds[c1] += 1.0;
            } else if (d0 < d1) {
                seconds[c0] += 1.0;
            } else {
                seconds[c0] += 0.5;
                seconds[c1] += 0.5;
            }
        } else {
            seconds[c0] += 1.0;
        }
    }
    for (auto& [cell, t] : seconds) t /= static_cast<double>(duration);
    return seconds;
}

} // namespace testsupport
