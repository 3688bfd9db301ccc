#pragma once

#include "mobent/missing.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mobent {

struct Grid;
struct LocationRecord;
struct TraceDataset;

/// One slot of the tiling. Half-open [t_start, t_end); the final window of a
/// trace additionally contains its own t_end so the last fix is covered.
struct TimeWindow {
    int k = 0;                  // 1-based index
    std::int64_t t_start = 0;
    std::int64_t t_end = 0;
};

/// Share of a window's wall time spent in one cell.
struct CellOccupancy {
    int cell = 0;
    double proportion = 0.0;
};

struct EntropySample {
    int k = 0;
    double value = missing_value;  // percentage in [0, 100], or missing
};

struct EntropySequence {
    std::string user_id;
    std::int64_t window_duration = 3600;
    std::int64_t anchor = 0;  // t_start of window k = 1
    std::vector<EntropySample> samples;
};

/// Tiles [t_first, t_last] with equal windows. The first window starts at
/// t_first floored to the previous whole-duration boundary of the local
/// clock (`utc_offset_s` east of UTC), so hour-of-day covariates line up
/// with wall time.
std::vector<TimeWindow> make_windows(std::int64_t t_first, std::int64_t t_last,
                                     std::int64_t duration = 3600,
                                     std::int64_t utc_offset_s = 3600);

/// Splits a sorted record vector into per-window [begin, end) index ranges.
/// Records at an interior window's t_end fall into the next window; the
/// final window keeps its own t_end.
std::vector<std::pair<std::size_t, std::size_t>> window_slices(
    const std::vector<LocationRecord>& records, const std::vector<TimeWindow>& windows);

/// Time-proportion attribution for one window. Records must be the sorted
/// slice of fixes falling inside the window. Each maximal run of
/// consecutive fixes in one cell collects: the span between its first and
/// last fix, half of each gap to the neighbouring runs, and — for the
/// window's outermost runs — the full slack to the window edge. Proportions
/// are the collected times divided by the window duration; per-cell entries
/// are summed over runs and sum to 1 overall. Empty input → empty list.
std::vector<CellOccupancy> window_occupancy(std::span<const LocationRecord> records,
                                            const Grid& grid, const TimeWindow& window);

/// Normalized Shannon entropy of the occupancy distribution, as a
/// percentage of the grid's maximum log2(n·m). Empty occupancy → missing.
double window_entropy(const std::vector<CellOccupancy>& occupancy, const Grid& grid);

/// Full pipeline for one user: window the trace span, attribute time,
/// reduce to one entropy value per window (missing where no fixes fall).
EntropySequence entropy_sequence(const TraceDataset& dataset, const Grid& grid,
                                 std::int64_t duration = 3600,
                                 std::int64_t utc_offset_s = 3600);

/// CSV: `user_id,window_index,window_start,entropy`; entropy with 6
/// fractional digits, missing as empty field.
void write_entropy(std::ostream& out, const std::vector<EntropySequence>& sequences);
std::vector<EntropySequence> parse_entropy(std::istream& in);

} // namespace mobent
