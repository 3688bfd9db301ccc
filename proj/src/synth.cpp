#include "mobent/synth.hpp"
#include "mobent/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace mobent {

namespace {

constexpr double earth_radius_m = 6'371'000.0;
constexpr double deg = std::numbers::pi / 180.0;
constexpr double meters_per_degree = earth_radius_m * deg;

// [0, 1) with the full 53-bit mantissa; bit-stable across standard libraries.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller; one draw per call, the sine branch is discarded for simplicity.
double standard_normal(std::mt19937_64& rng) {
    double u1 = 1.0 - uniform01(rng);  // (0, 1], keeps the log finite
    double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

struct Vec3 {
    double x, y, z;
};

Vec3 to_unit(const SynthAnchor& a) {
    double lat = a.latitude * deg;
    double lon = a.longitude * deg;
    return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

SynthAnchor to_latlon(const Vec3& v) {
    double norm = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    return {std::asin(v.z / norm) / deg, std::atan2(v.y, v.x) / deg};
}

// Point at fraction f of the great circle from a to b.
SynthAnchor slerp(const SynthAnchor& a, const SynthAnchor& b, double f) {
    Vec3 va = to_unit(a);
    Vec3 vb = to_unit(b);
    double dot = std::clamp(va.x * vb.x + va.y * vb.y + va.z * vb.z, -1.0, 1.0);
    double omega = std::acos(dot);
    if (omega < 1e-12) return a;
    double wa = std::sin((1.0 - f) * omega) / std::sin(omega);
    double wb = std::sin(f * omega) / std::sin(omega);
    return to_latlon({wa * va.x + wb * vb.x, wa * va.y + wb * vb.y, wa * va.z + wb * vb.z});
}

SynthAnchor jittered(const SynthAnchor& a, double noise_m, std::mt19937_64& rng) {
    double north = std::clamp(standard_normal(rng), -4.0, 4.0) * noise_m;
    double east = std::clamp(standard_normal(rng), -4.0, 4.0) * noise_m;
    return {a.latitude + north / meters_per_degree,
            a.longitude + east / (meters_per_degree * std::cos(a.latitude * deg))};
}

struct Segment {
    double t0 = 0.0;  // local seconds within the day, [t0, t1)
    double t1 = 0.0;
    bool transit = false;
    int from = 0;  // anchor indices; dwell uses `from` only
    int to = 0;
};

// One day's timeline: dwell at home, then for each commute pair an
// out-transit, a dwell at the destination, and a return transit.
std::vector<Segment> day_schedule(const SynthConfig& cfg) {
    std::vector<std::pair<int, int>> trips = cfg.commute_hours;
    std::sort(trips.begin(), trips.end());
    std::vector<Segment> segments;
    double cursor = 0.0;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        auto [h_out, h_back] = trips[i];
        if (h_out < 0 || h_back <= h_out || h_back >= 24)
            throw ValidationError("synth: commute hours must satisfy 0 <= out < back < 24");
        int dest = 1 + static_cast<int>(i % (cfg.anchors.size() - 1));
        double travel =
            haversine_m(cfg.anchors[0].latitude, cfg.anchors[0].longitude,
                        cfg.anchors[dest].latitude, cfg.anchors[dest].longitude) /
            cfg.speed;
        double depart = h_out * 3600.0;
        double ret = h_back * 3600.0;
        if (depart < cursor || depart + travel > ret || ret + travel > 86400.0)
            throw ValidationError("synth: commute schedule does not fit in the day");
        segments.push_back({cursor, depart, false, 0, 0});
        segments.push_back({depart, depart + travel, true, 0, dest});
        segments.push_back({depart + travel, ret, false, dest, dest});
        segments.push_back({ret, ret + travel, true, dest, 0});
        cursor = ret + travel;
    }
    segments.push_back({cursor, 86400.0, false, 0, 0});
    return segments;
}

} // namespace

TraceDataset generate_trace(const SynthConfig& cfg) {
    if (cfg.anchors.size() < 2) throw ValidationError("synth: need at least two anchors");
    if (cfg.fix_interval <= 0) throw ValidationError("synth: fix interval must be positive");
    if (cfg.speed <= 0.0) throw ValidationError("synth: speed must be positive");
    if (cfg.days < 1) throw ValidationError("synth: need at least one day");
    if (cfg.missing_day_prob < 0.0 || cfg.missing_day_prob >= 1.0)
        throw ValidationError("synth: missing day probability must be in [0, 1)");
    for (std::size_t i = 0; i < cfg.anchors.size(); ++i)
        for (std::size_t j = i + 1; j < cfg.anchors.size(); ++j)
            if (haversine_m(cfg.anchors[i].latitude, cfg.anchors[i].longitude,
                            cfg.anchors[j].latitude, cfg.anchors[j].longitude) < 1.0)
                throw ValidationError("synth: anchors coincide");

    std::vector<Segment> schedule = day_schedule(cfg);

    std::mt19937_64 rng(cfg.seed);
    std::vector<bool> dropped(static_cast<std::size_t>(cfg.days));
    for (auto&& day : dropped) day = uniform01(rng) < cfg.missing_day_prob;

    TraceDataset dataset;
    dataset.user_id = cfg.user_id;
    for (int d = 0; d < cfg.days; ++d) {
        if (dropped[static_cast<std::size_t>(d)]) continue;
        std::int64_t day_start_utc =
            (cfg.start_day + d) * 86400 - cfg.utc_offset_seconds;
        std::size_t seg = 0;
        for (std::int64_t t = 0; t < 86400; t += cfg.fix_interval) {
            while (schedule[seg].t1 <= static_cast<double>(t)) ++seg;
            const Segment& s = schedule[seg];
            SynthAnchor pos;
            if (s.transit) {
                double f = (static_cast<double>(t) - s.t0) / (s.t1 - s.t0);
                pos = slerp(cfg.anchors[static_cast<std::size_t>(s.from)],
                            cfg.anchors[static_cast<std::size_t>(s.to)], f);
            } else {
                pos = jittered(cfg.anchors[static_cast<std::size_t>(s.from)], cfg.dwell_noise,
                               rng);
            }
            dataset.records.push_back({pos.latitude, pos.longitude, day_start_utc + t});
        }
    }
    return dataset;
}

Cohort generate_cohort(const CohortConfig& cohort) {
    if (cohort.n_users < 1) throw ValidationError("synth: cohort needs at least one user");

    std::size_t job_field = profile_fields.size();
    for (std::size_t f = 0; f < profile_fields.size(); ++f)
        if (std::string_view(profile_fields[f].name) == "job") job_field = f;

    Cohort out;
    for (int u = 0; u < cohort.n_users; ++u) {
        char name[32];
        std::snprintf(name, sizeof name, "user-%02d", u + 1);

        std::mt19937_64 user_rng(splitmix64(cohort.base_seed + static_cast<std::uint64_t>(u)));

        SynthConfig cfg = cohort.base;
        cfg.user_id = name;
        cfg.seed = splitmix64(cohort.base_seed ^ (0x517CC1B727220A95ull * (u + 1)));
        double north = (2.0 * uniform01(user_rng) - 1.0) * cohort.home_scatter_m;
        double east = (2.0 * uniform01(user_rng) - 1.0) * cohort.home_scatter_m;
        SynthAnchor& home = cfg.anchors.at(0);
        home.latitude += north / meters_per_degree;
        home.longitude += east / (meters_per_degree * std::cos(home.latitude * deg));

        StaticProfile profile;
        profile.user_id = name;
        if (cohort.mixer) {
            profile.codes = cohort.mixer(static_cast<std::size_t>(u), user_rng);
            for (std::size_t f = 0; f < profile_fields.size(); ++f)
                if (profile.codes[f] < 0 || profile.codes[f] > profile_fields[f].max_code)
                    throw ValidationError(std::string("synth: mixer code out of range for ") +
                                          profile_fields[f].name);
        } else {
            // A cohort of n users can identify at most n-1 per-user-constant
            // contrasts, far fewer than the full coded-field expansion, so the
            // default mixer varies only a short whitelist and pins the rest at
            // 0 to keep pooled designs full rank. Custom mixers may vary anything.
            for (std::size_t f = 0; f < profile_fields.size(); ++f) {
                std::string_view name = profile_fields[f].name;
                bool varied = name == "gender" || name == "age_group" || name == "car_week" ||
                              name == "bike_week";
                profile.codes[f] =
                    varied ? static_cast<int>(user_rng() %
                                              static_cast<std::uint64_t>(
                                                  profile_fields[f].max_code + 1))
                           : 0;
            }
        }
        if (cohort.inject_job_effect) {
            profile.codes[job_field] = u % 2;
            if (profile.codes[job_field] == 1) {
                cfg.commute_hours = cohort.job_commute_hours;
                cfg.dwell_noise *= cohort.job_noise_factor;
            }
        }

        out.datasets.push_back(generate_trace(cfg));
        out.profiles.push_back(std::move(profile));
    }
    return out;
}

} // namespace mobent
