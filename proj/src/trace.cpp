#include "mobent/trace.hpp"
#include "mobent/csv.hpp"
#include "mobent/error.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace mobent {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

} // namespace

std::vector<TraceDataset> parse_traces(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line))
        throw ParseError(1, "missing header");
    ++line_no;
    csv::strip_cr(line);
    if (line != "user_id,lat,lon,timestamp")
        throw ParseError(line_no, "expected header 'user_id,lat,lon,timestamp', got '" + line + "'");

    std::vector<TraceDataset> datasets;
    std::unordered_map<std::string, std::size_t> index_of;

    while (std::getline(in, line)) {
        ++line_no;
        csv::strip_cr(line);
        if (line.empty()) continue;

        auto fields = csv::split(line);
        if (fields.size() != 4)
            throw ParseError(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
        if (fields[0].empty())
            throw ParseError(line_no, "empty user_id");

        LocationRecord rec;
        rec.latitude = csv::to_double(fields[1], line_no, "lat");
        rec.longitude = csv::to_double(fields[2], line_no, "lon");
        rec.timestamp = csv::to_int64(fields[3], line_no, "timestamp");

        if (rec.latitude < -90.0 || rec.latitude > 90.0)
            throw ParseError(line_no, "lat out of range [-90,90]: " + std::string(fields[1]));
        if (rec.longitude < -180.0 || rec.longitude > 180.0)
            throw ParseError(line_no, "lon out of range [-180,180]: " + std::string(fields[2]));
        if (rec.timestamp <= 0)
            throw ParseError(line_no, "timestamp must be positive: " + std::string(fields[3]));

        std::string user(fields[0]);
        auto it = index_of.find(user);
        if (it == index_of.end()) {
            it = index_of.emplace(user, datasets.size()).first;
            datasets.push_back(TraceDataset{std::move(user), {}});
        }
        datasets[it->second].records.push_back(rec);
    }

    for (auto& ds : datasets) {
        std::stable_sort(ds.records.begin(), ds.records.end(),
                         [](const LocationRecord& a, const LocationRecord& b) {
                             return a.timestamp < b.timestamp;
                         });
        // stable sort keeps input order within equal timestamps, so unique
        // retains the first-seen fix for each instant
        auto last = std::unique(ds.records.begin(), ds.records.end(),
                                [](const LocationRecord& a, const LocationRecord& b) {
                                    return a.timestamp == b.timestamp;
                                });
        ds.records.erase(last, ds.records.end());
    }

    return datasets;
}

void write_traces(std::ostream& out, const std::vector<TraceDataset>& datasets) {
    out << "user_id,lat,lon,timestamp\n";
    for (const auto& ds : datasets)
        for (const auto& rec : ds.records)
            out << ds.user_id << ',' << csv::exact(rec.latitude) << ','
                << csv::exact(rec.longitude) << ',' << rec.timestamp << '\n';
}

GapReport gap_statistics(const TraceDataset& dataset, std::int64_t day_boundary_offset_s) {
    if (dataset.records.empty())
        throw ValidationError("gap_statistics: empty trace for user '" + dataset.user_id + "'");

    GapReport report;
    const auto& recs = dataset.records;
    report.duration_days =
        static_cast<double>(recs.back().timestamp - recs.front().timestamp) / 86400.0;

    auto day_of = [day_boundary_offset_s](std::int64_t t) {
        return floor_div(t + day_boundary_offset_s, 86400);
    };

    std::int64_t prev_day = day_of(recs.front().timestamp);
    std::int64_t worst = 0;
    for (const auto& rec : recs) {
        std::int64_t day = day_of(rec.timestamp);
        worst = std::max(worst, day - prev_day - 1);
        prev_day = day;
    }
    report.max_gap_days = static_cast<int>(worst);
    return report;
}

std::vector<TraceDataset> select_users(const std::vector<TraceDataset>& datasets,
                                       double min_days, int max_gap_days,
                                       std::int64_t day_boundary_offset_s) {
    std::vector<TraceDataset> kept;
    for (const auto& ds : datasets) {
        if (ds.records.empty()) continue;
        GapReport report = gap_statistics(ds, day_boundary_offset_s);
        if (report.duration_days >= min_days && report.max_gap_days <= max_gap_days)
            kept.push_back(ds);
    }
    return kept;
}

} // namespace mobent
