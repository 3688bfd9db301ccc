#include "mobent/entropy.hpp"
#include "mobent/csv.hpp"
#include "mobent/error.hpp"
#include "mobent/grid.hpp"
#include "mobent/trace.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

namespace mobent {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

} // namespace

std::vector<TimeWindow> make_windows(std::int64_t t_first, std::int64_t t_last,
                                     std::int64_t duration, std::int64_t utc_offset_s) {
    if (duration <= 0)
        throw ValidationError("make_windows: duration must be positive");
    if (t_last < t_first)
        throw ValidationError("make_windows: t_last before t_first");

    std::int64_t anchor = floor_div(t_first + utc_offset_s, duration) * duration - utc_offset_s;
    std::int64_t span = t_last - anchor;
    std::int64_t count = std::max<std::int64_t>(1, floor_div(span + duration - 1, duration));

    std::vector<TimeWindow> windows;
    windows.reserve(static_cast<std::size_t>(count));
    for (std::int64_t k = 0; k < count; ++k)
        windows.push_back(TimeWindow{static_cast<int>(k + 1), anchor + k * duration,
                                     anchor + (k + 1) * duration});
    return windows;
}

std::vector<std::pair<std::size_t, std::size_t>> window_slices(
    const std::vector<LocationRecord>& records, const std::vector<TimeWindow>& windows) {
    std::vector<std::pair<std::size_t, std::size_t>> slices;
    slices.reserve(windows.size());
    std::size_t lo = 0;
    for (const auto& window : windows) {
        const bool last_window = window.k == static_cast<int>(windows.size());
        std::size_t hi = lo;
        while (hi < records.size() &&
               (records[hi].timestamp < window.t_end ||
                (last_window && records[hi].timestamp == window.t_end)))
            ++hi;
        slices.emplace_back(lo, hi);
        lo = hi;
    }
    return slices;
}

std::vector<CellOccupancy> window_occupancy(std::span<const LocationRecord> records,
                                            const Grid& grid, const TimeWindow& window) {
    if (records.empty()) return {};

    const double t_start = static_cast<double>(window.t_start);
    const double t_end = static_cast<double>(window.t_end);
    const double duration = t_end - t_start;
    if (duration <= 0.0)
        throw ValidationError("window_occupancy: degenerate window");

    struct Run {
        int cell;
        double first_t;
        double last_t;
    };
    std::vector<Run> runs;
    double prev_t = t_start - 1.0;
    for (const auto& rec : records) {
        double t = static_cast<double>(rec.timestamp);
        if (t < t_start || t > t_end)
            throw ValidationError("window_occupancy: record outside window");
        if (!runs.empty() && t < prev_t)
            throw ValidationError("window_occupancy: records not sorted");
        prev_t = t;
        int cell = grid.cell_of(rec.latitude, rec.longitude);
        if (!runs.empty() && runs.back().cell == cell)
            runs.back().last_t = t;
        else
            runs.push_back(Run{cell, t, t});
    }

    std::map<int, double> time_in_cell;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        double credit = runs[r].last_t - runs[r].first_t;
        credit += (r == 0) ? runs[r].first_t - t_start
                           : (runs[r].first_t - runs[r - 1].last_t) / 2.0;
        credit += (r + 1 == runs.size()) ? t_end - runs[r].last_t
                                         : (runs[r + 1].first_t - runs[r].last_t) / 2.0;
        time_in_cell[runs[r].cell] += credit;
    }

    std::vector<CellOccupancy> occupancy;
    occupancy.reserve(time_in_cell.size());
    for (const auto& [cell, time] : time_in_cell) {
        double p = time / duration;
        if (p > 0.0) occupancy.push_back(CellOccupancy{cell, p});
    }
    return occupancy;
}

double window_entropy(const std::vector<CellOccupancy>& occupancy, const Grid& grid) {
    if (occupancy.empty()) return missing_value;
    if (grid.total_cells() <= 1)
        throw ValidationError("window_entropy: grid must have more than one cell");

    double sum = 0.0;
    double h = 0.0;
    for (const auto& occ : occupancy) {
        sum += occ.proportion;
        if (occ.proportion > 0.0) h -= occ.proportion * std::log2(occ.proportion);
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("window_entropy: proportions sum to " + std::to_string(sum));

    double value = h / std::log2(static_cast<double>(grid.total_cells())) * 100.0;
    return std::clamp(value, 0.0, 100.0);
}

EntropySequence entropy_sequence(const TraceDataset& dataset, const Grid& grid,
                                 std::int64_t duration, std::int64_t utc_offset_s) {
    if (dataset.records.empty())
        throw ValidationError("entropy_sequence: empty trace for user '" + dataset.user_id + "'");

    auto windows = make_windows(dataset.records.front().timestamp,
                                dataset.records.back().timestamp, duration, utc_offset_s);

    EntropySequence seq;
    seq.user_id = dataset.user_id;
    seq.window_duration = duration;
    seq.anchor = windows.front().t_start;
    seq.samples.reserve(windows.size());

    const auto& recs = dataset.records;
    auto slices = window_slices(recs, windows);
    for (std::size_t w = 0; w < windows.size(); ++w) {
        auto [lo, hi] = slices[w];
        auto occ = window_occupancy(
            std::span<const LocationRecord>(recs.data() + lo, hi - lo), grid, windows[w]);
        seq.samples.push_back(EntropySample{windows[w].k, window_entropy(occ, grid)});
    }
    return seq;
}

void write_entropy(std::ostream& out, const std::vector<EntropySequence>& sequences) {
    out << "user_id,window_index,window_start,entropy\n";
    for (const auto& seq : sequences)
        for (const auto& sample : seq.samples) {
            out << seq.user_id << ',' << sample.k << ','
                << seq.anchor + (sample.k - 1) * seq.window_duration << ',';
            if (!is_missing(sample.value)) out << csv::fixed(sample.value, 6);
            out << '\n';
        }
}

std::vector<EntropySequence> parse_entropy(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line))
        throw ParseError(1, "missing header");
    ++line_no;
    csv::strip_cr(line);
    if (line != "user_id,window_index,window_start,entropy")
        throw ParseError(line_no, "expected entropy header, got '" + line + "'");

    std::vector<EntropySequence> sequences;
    std::map<std::string, std::size_t> index_of;

    while (std::getline(in, line)) {
        ++line_no;
        csv::strip_cr(line);
        if (line.empty()) continue;
        auto fields = csv::split(line);
        if (fields.size() != 4)
            throw ParseError(line_no, "expected 4 fields, got " + std::to_string(fields.size()));

        std::string user(fields[0]);
        int k = static_cast<int>(csv::to_int64(fields[1], line_no, "window_index"));
        std::int64_t start = csv::to_int64(fields[2], line_no, "window_start");
        double value = missing_value;
        if (!fields[3].empty()) {
            value = csv::to_double(fields[3], line_no, "entropy");
            if (value < 0.0 || value > 100.0)
                throw ParseError(line_no, "entropy out of [0,100]");
        }

        auto it = index_of.find(user);
        if (it == index_of.end()) {
            if (k != 1)
                throw ParseError(line_no, "first window for user '" + user + "' must have index 1");
            it = index_of.emplace(user, sequences.size()).first;
            EntropySequence seq;
            seq.user_id = user;
            seq.anchor = start;
            seq.window_duration = 0;  // inferred from the second row
            sequences.push_back(std::move(seq));
        }
        EntropySequence& seq = sequences[it->second];
        int expected = static_cast<int>(seq.samples.size()) + 1;
        if (k != expected)
            throw ParseError(line_no, "window indices for user '" + user +
                                          "' must be contiguous; expected " +
                                          std::to_string(expected));
        if (k == 2)
            seq.window_duration = start - seq.anchor;
        else if (k > 2 && start != seq.anchor + (k - 1) * seq.window_duration)
            throw ParseError(line_no, "window_start not on the user's window lattice");
        seq.samples.push_back(EntropySample{k, value});
    }
    return sequences;
}

} // namespace mobent
