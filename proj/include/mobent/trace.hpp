#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mobent {

/// One raw fix from a positioning device: where and when.
struct LocationRecord {
    double latitude = 0.0;   // degrees, [-90, 90]
    double longitude = 0.0;  // degrees, [-180, 180]
    std::int64_t timestamp = 0;  // seconds since Unix epoch, > 0
};

/// A user's validated location history, sorted strictly ascending by
/// timestamp with duplicate timestamps collapsed.
struct TraceDataset {
    std::string user_id;
    std::vector<LocationRecord> records;
};

/// Coverage summary of one trace.
struct GapReport {
    double duration_days = 0.0;  // (last - first) / 86400
    int max_gap_days = 0;        // longest run of local calendar days with no record
};

/// Parses the canonical locations CSV (`user_id,lat,lon,timestamp`, header
/// required). Returns one dataset per distinct user in first-appearance
/// order; each dataset's records are sorted and de-duplicated, keeping the
/// first occurrence of a (user, timestamp) pair.
///
/// Throws ParseError with the offending line number on malformed rows.
std::vector<TraceDataset> parse_traces(std::istream& in);

/// Serializes datasets back to the canonical locations CSV. Coordinates are
/// written with round-trip-exact precision so parse(serialize(x)) == x.
void write_traces(std::ostream& out, const std::vector<TraceDataset>& datasets);

/// Duration and worst day-level coverage hole of one non-empty trace.
/// Calendar days are evaluated in a fixed UTC offset (seconds east).
GapReport gap_statistics(const TraceDataset& dataset, std::int64_t day_boundary_offset_s);

/// Keeps datasets that span at least `min_days` and whose longest run of
/// empty calendar days does not exceed `max_gap_days`. Order preserved.
std::vector<TraceDataset> select_users(const std::vector<TraceDataset>& datasets,
                                       double min_days = 20.0,
                                       int max_gap_days = 3,
                                       std::int64_t day_boundary_offset_s = 3600);

} // namespace mobent
