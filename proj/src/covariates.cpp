#include "mobent/covariates.hpp"
#include "mobent/csv.hpp"
#include "mobent/entropy.hpp"
#include "mobent/error.hpp"
#include "mobent/trace.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>

namespace mobent {

namespace {

constexpr double earth_radius_m = 6'371'000.0;
constexpr std::int64_t seconds_per_day = 86'400;
constexpr std::int64_t seconds_per_week = 7 * seconds_per_day;
// 1970-01-01 is a Thursday; the Monday before it is 3 days earlier.
constexpr std::int64_t epoch_to_monday_s = 3 * seconds_per_day;

std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
    std::int64_t r = a % b;
    return r < 0 ? r + b : r;
}

std::string profiles_header() {
    std::string header = "user_id";
    for (const auto& field : profile_fields) {
        header += ',';
        header += field.name;
    }
    return header;
}

} // namespace

double haversine_m(double lat_a, double lon_a, double lat_b, double lon_b) {
    constexpr double deg = std::numbers::pi / 180.0;
    double phi_a = lat_a * deg;
    double phi_b = lat_b * deg;
    double dphi = (lat_b - lat_a) * deg;
    double dlambda = (lon_b - lon_a) * deg;

    double s = std::sin(dphi / 2.0);
    double t = std::sin(dlambda / 2.0);
    double h = s * s + std::cos(phi_a) * std::cos(phi_b) * t * t;
    return 2.0 * earth_radius_m * std::asin(std::min(1.0, std::sqrt(h)));
}

WindowFeatures window_features(std::span<const LocationRecord> records,
                               const TimeWindow& window, const CampusRegion& campus,
                               std::int64_t utc_offset_s, std::int64_t duration) {
    if (duration <= 0)
        throw ValidationError("window_features: duration must be positive");

    WindowFeatures f;

    std::int64_t local = window.t_start + utc_offset_s;
    f.tsnb = static_cast<int>(floor_mod(local + epoch_to_monday_s, seconds_per_week) /
                              duration) + 1;
    f.hourNb = static_cast<int>(floor_mod(local, seconds_per_day) / 3600) + 1;
    f.night = (f.hourNb >= 21 || f.hourNb <= 7) ? 1 : 0;
    std::int64_t days = (local - floor_mod(local, seconds_per_day)) / seconds_per_day;
    f.dayNb = static_cast<int>(floor_mod(days + 3, 7)) + 1;
    f.prevdayNb = f.dayNb == 1 ? 7 : f.dayNb - 1;
    f.nextdayNb = f.dayNb == 7 ? 1 : f.dayNb + 1;
    f.weekend = f.dayNb >= 6 ? 1 : 0;

    if (records.empty()) return f;  // kinematics stay missing, campus stays 0

    for (const auto& rec : records)
        if (campus.contains(rec.latitude, rec.longitude)) {
            f.campus = 1;
            break;
        }

    double max_pair = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i)
        for (std::size_t j = i + 1; j < records.size(); ++j)
            max_pair = std::max(max_pair,
                                haversine_m(records[i].latitude, records[i].longitude,
                                            records[j].latitude, records[j].longitude));
    f.maxdistance = max_pair;

    double path = 0.0;
    double elapsed = 0.0;
    double fastest = 0.0;
    for (std::size_t i = 0; i + 1 < records.size(); ++i) {
        double d = haversine_m(records[i].latitude, records[i].longitude,
                               records[i + 1].latitude, records[i + 1].longitude);
        double dt = static_cast<double>(records[i + 1].timestamp - records[i].timestamp);
        path += d;
        elapsed += dt;
        if (dt > 0.0) fastest = std::max(fastest, d / dt);
    }
    f.meanspeed = elapsed > 0.0 ? path / elapsed : 0.0;
    f.maxspeed = fastest;
    return f;
}

FeatureSequence feature_sequence(const TraceDataset& dataset, const CampusRegion& campus,
                                 std::int64_t duration, std::int64_t utc_offset_s) {
    if (dataset.records.empty())
        throw ValidationError("feature_sequence: empty trace for user '" + dataset.user_id + "'");

    auto windows = make_windows(dataset.records.front().timestamp,
                                dataset.records.back().timestamp, duration, utc_offset_s);
    auto slices = window_slices(dataset.records, windows);

    FeatureSequence seq;
    seq.user_id = dataset.user_id;
    seq.rows.reserve(windows.size());
    for (std::size_t w = 0; w < windows.size(); ++w) {
        auto [lo, hi] = slices[w];
        seq.rows.push_back(window_features(
            std::span<const LocationRecord>(dataset.records.data() + lo, hi - lo),
            windows[w], campus, utc_offset_s, duration));
    }
    return seq;
}

std::vector<StaticProfile> load_profiles(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line))
        throw ParseError(1, "missing header");
    ++line_no;
    csv::strip_cr(line);
    if (line != profiles_header())
        throw ParseError(line_no, "expected profiles header '" + profiles_header() + "'");

    std::vector<StaticProfile> profiles;
    std::map<std::string, std::size_t> seen;

    while (std::getline(in, line)) {
        ++line_no;
        csv::strip_cr(line);
        if (line.empty()) continue;
        auto fields = csv::split(line);
        if (fields.size() != profile_fields.size() + 1)
            throw ParseError(line_no, "expected " + std::to_string(profile_fields.size() + 1) +
                                          " fields, got " + std::to_string(fields.size()));
        if (fields[0].empty())
            throw ParseError(line_no, "empty user_id");

        StaticProfile profile;
        profile.user_id = std::string(fields[0]);
        if (!seen.emplace(profile.user_id, line_no).second)
            throw ParseError(line_no, "duplicate profile for user '" + profile.user_id + "'");

        for (std::size_t i = 0; i < profile_fields.size(); ++i) {
            int code = csv::to_code(fields[i + 1], line_no, profile_fields[i].name);
            if (code < 0 || code > profile_fields[i].max_code)
                throw ParseError(line_no, std::string(profile_fields[i].name) + " code " +
                                              std::to_string(code) + " outside 0.." +
                                              std::to_string(profile_fields[i].max_code));
            profile.codes[i] = code;
        }
        profiles.push_back(std::move(profile));
    }
    return profiles;
}

void write_profiles(std::ostream& out, const std::vector<StaticProfile>& profiles) {
    out << profiles_header() << '\n';
    for (const auto& profile : profiles) {
        out << profile.user_id;
        for (int code : profile.codes) out << ',' << code;
        out << '\n';
    }
}

void write_features(std::ostream& out, const std::vector<FeatureSequence>& sequences) {
    out << "user_id,window_index,tsnb,maxdistance,meanspeed,maxspeed,campus,hourNb,night,"
           "dayNb,prevdayNb,nextdayNb,weekend\n";
    for (const auto& seq : sequences)
        for (std::size_t i = 0; i < seq.rows.size(); ++i) {
            const auto& f = seq.rows[i];
            out << seq.user_id << ',' << i + 1 << ',' << f.tsnb << ',';
            if (!is_missing(f.maxdistance)) out << csv::fixed(f.maxdistance, 6);
            out << ',';
            if (!is_missing(f.meanspeed)) out << csv::fixed(f.meanspeed, 6);
            out << ',';
            if (!is_missing(f.maxspeed)) out << csv::fixed(f.maxspeed, 6);
            out << ',' << f.campus << ',' << f.hourNb << ',' << f.night << ',' << f.dayNb
                << ',' << f.prevdayNb << ',' << f.nextdayNb << ',' << f.weekend << '\n';
        }
}

std::vector<FeatureSequence> parse_features(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line))
        throw ParseError(1, "missing header");
    ++line_no;
    csv::strip_cr(line);
    if (line != "user_id,window_index,tsnb,maxdistance,meanspeed,maxspeed,campus,hourNb,night,"
                "dayNb,prevdayNb,nextdayNb,weekend")
        throw ParseError(line_no, "unexpected features header");

    std::vector<FeatureSequence> sequences;
    std::map<std::string, std::size_t> index_of;

    while (std::getline(in, line)) {
        ++line_no;
        csv::strip_cr(line);
        if (line.empty()) continue;
        auto fields = csv::split(line);
        if (fields.size() != 13)
            throw ParseError(line_no, "expected 13 fields, got " + std::to_string(fields.size()));

        std::string user(fields[0]);
        auto it = index_of.find(user);
        if (it == index_of.end()) {
            it = index_of.emplace(user, sequences.size()).first;
            sequences.push_back(FeatureSequence{user, {}});
        }
        FeatureSequence& seq = sequences[it->second];
        int k = static_cast<int>(csv::to_int64(fields[1], line_no, "window_index"));
        if (k != static_cast<int>(seq.rows.size()) + 1)
            throw ParseError(line_no, "window indices for user '" + user + "' must be contiguous");

        WindowFeatures f;
        f.tsnb = csv::to_code(fields[2], line_no, "tsnb");
        f.maxdistance =
            fields[3].empty() ? missing_value : csv::to_double(fields[3], line_no, "maxdistance");
        f.meanspeed =
            fields[4].empty() ? missing_value : csv::to_double(fields[4], line_no, "meanspeed");
        f.maxspeed =
            fields[5].empty() ? missing_value : csv::to_double(fields[5], line_no, "maxspeed");
        f.campus = csv::to_code(fields[6], line_no, "campus");
        f.hourNb = csv::to_code(fields[7], line_no, "hourNb");
        f.night = csv::to_code(fields[8], line_no, "night");
        f.dayNb = csv::to_code(fields[9], line_no, "dayNb");
        f.prevdayNb = csv::to_code(fields[10], line_no, "prevdayNb");
        f.nextdayNb = csv::to_code(fields[11], line_no, "nextdayNb");
        f.weekend = csv::to_code(fields[12], line_no, "weekend");
        seq.rows.push_back(f);
    }
    return sequences;
}

} // namespace mobent
