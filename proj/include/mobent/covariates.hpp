#pragma once

#include "mobent/missing.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mobent {

struct LocationRecord;
struct TraceDataset;
struct TimeWindow;

/// Axis-aligned box used for the campus membership flag.
struct CampusRegion {
    double min_lat = 0.0;
    double max_lat = 0.0;
    double min_lon = 0.0;
    double max_lon = 0.0;

    bool contains(double lat, double lon) const {
        return lat >= min_lat && lat <= max_lat && lon >= min_lon && lon <= max_lon;
    }
};

/// Per-window features. Temporal fields always defined; kinematic fields
/// (maxdistance, meanspeed, maxspeed) are missing when the window holds no
/// fixes. campus defaults to 0 for empty windows.
struct WindowFeatures {
    int tsnb = 1;        // 1-based slot in the Monday-00:00-anchored week
    double maxdistance = missing_value;  // max pairwise separation, m
    double meanspeed = missing_value;    // path length / elapsed, m/s
    double maxspeed = missing_value;     // fastest consecutive segment, m/s
    int campus = 0;      // any fix inside the campus box
    int hourNb = 1;      // 1..24, local hour of window start + 1
    int night = 0;       // 1 iff local time in [20:00, 07:00)
    int dayNb = 1;       // 1..7, Monday = 1
    int prevdayNb = 7;
    int nextdayNb = 2;
    int weekend = 0;     // 1 iff dayNb in {6, 7}
};

struct FeatureSequence {
    std::string user_id;
    std::vector<WindowFeatures> rows;  // rows[i] belongs to window index i + 1
};

/// Coded per-user questionnaire fields, in CSV column order.
struct ProfileField {
    const char* name;
    int max_code;  // valid codes are 0..max_code
};
inline constexpr std::array<ProfileField, 24> profile_fields = {{
    {"gender", 1},
    {"age_group", 3},
    {"working_profile", 2},
    {"job", 1},
    {"university", 4},
    {"section", 3},
    {"living_parent_s_home", 1},
    {"parent_s_home_location", 1},
    {"family_status", 4},
    {"sport_exercises_frequence", 2},
    {"student_association", 1},
    {"smoking_cigarettes", 1},
    {"seasonal_allergies", 1},
    {"diet", 4},
    {"car_week", 1},
    {"car_weekend", 1},
    {"public_transportation_week", 1},
    {"public_transportation_weekend", 1},
    {"bike_week", 1},
    {"bike_weekend", 1},
    {"taxi_week", 1},
    {"taxi_weekend", 1},
    {"walking_week", 1},
    {"walking_weekend", 1},
}};

struct StaticProfile {
    std::string user_id;
    std::array<int, profile_fields.size()> codes{};

    int code(std::size_t field) const { return codes[field]; }
};

/// Great-circle distance in meters, spherical Earth of radius 6,371,000 m.
double haversine_m(double lat_a, double lon_a, double lat_b, double lon_b);

/// Features for one window given the sorted fixes inside it (possibly none).
WindowFeatures window_features(std::span<const LocationRecord> records,
                               const TimeWindow& window, const CampusRegion& campus,
                               std::int64_t utc_offset_s, std::int64_t duration);

/// Features for every window of a trace, tiled exactly like
/// entropy_sequence so rows pair 1:1 with entropy samples.
FeatureSequence feature_sequence(const TraceDataset& dataset, const CampusRegion& campus,
                                 std::int64_t duration = 3600,
                                 std::int64_t utc_offset_s = 3600);

/// Profiles CSV: user_id plus the 24 coded fields above, in order.
std::vector<StaticProfile> load_profiles(std::istream& in);
void write_profiles(std::ostream& out, const std::vector<StaticProfile>& profiles);

/// Features CSV:
/// `user_id,window_index,tsnb,maxdistance,meanspeed,maxspeed,campus,hourNb,night,dayNb,prevdayNb,nextdayNb,weekend`
void write_features(std::ostream& out, const std::vector<FeatureSequence>& sequences);
std::vector<FeatureSequence> parse_features(std::istream& in);

} // namespace mobent
