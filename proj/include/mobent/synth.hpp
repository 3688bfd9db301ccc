#pragma once

#include "mobent/covariates.hpp"
#include "mobent/trace.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace mobent {

struct SynthAnchor {
    double latitude = 0.0;
    double longitude = 0.0;
};

/// Commuter-style trace generator used by tests and the `synth` command.
///
/// Each simulated day alternates dwell phases (fixes at an anchor with
/// truncated Gaussian jitter) and great-circle transit legs at constant
/// speed. commute_hours lists (departure, return) local hours for round
/// trips starting and ending at anchors[0]; trip i heads to anchor
/// 1 + (i mod (anchors.size() - 1)), so extra anchors are visited in
/// rotation. Whole days are dropped independently with missing_day_prob.
///
/// Day d covers local day start_day + d; emitted timestamps are UTC with
/// local = UTC + utc_offset_seconds, matching the pipeline default, and the
/// default start_day is a Monday. Everything is a pure function of the
/// config: reruns are bit-identical, including across standard libraries
/// (the generator rolls its own uniform/normal draws on top of
/// mt19937_64 rather than using distribution objects, whose output is
/// implementation-defined).
struct SynthConfig {
    std::string user_id = "user-01";
    std::uint64_t seed = 1;
    int days = 28;
    std::int64_t start_day = 20444;  // local days since epoch; 20444 is a Monday
    std::int64_t utc_offset_seconds = 3600;
    std::vector<SynthAnchor> anchors = {{45.0000, 7.0000}, {45.0300, 7.0400}};
    std::vector<std::pair<int, int>> commute_hours = {{9, 17}};
    std::int64_t fix_interval = 300;  // seconds between fixes
    double speed = 8.0;               // transit speed, m/s
    // Dwell jitter std dev in meters, truncated at 4 sigma. The default is a
    // sizeable fraction of the default cell so dwell clouds straddle cell
    // edges: entropy then varies smoothly instead of collapsing to exact
    // zeros, which keeps log-link models on synthetic cohorts well behaved.
    double dwell_noise = 80.0;
    double missing_day_prob = 0.0;
};

TraceDataset generate_trace(const SynthConfig& config);

/// Draws the 24 coded profile fields for one user. The cohort passes a
/// per-user deterministic RNG; the default mixer picks each code uniformly
/// from its valid range.
using ProfileMixer =
    std::function<std::array<int, profile_fields.size()>(std::size_t user_index,
                                                         std::mt19937_64& rng)>;

/// Cohort = n_users perturbed copies of a base config plus coded profiles.
/// Per user: the home anchor is displaced by up to home_scatter_m in each
/// axis and the trace seed is re-derived from base_seed, so users differ
/// but the whole cohort is a function of (base_seed, config).
///
/// inject_job_effect plants a known, recoverable positive factor effect:
/// job is assigned alternately (user u gets code u mod 2) and job = 1 users
/// run job_commute_hours (two round trips a day) with their dwell noise
/// scaled by job_noise_factor. The noise scaling shifts those users' mean
/// entropy across every window, which no shared time-of-day term can
/// absorb, so the effect stays visible to a pooled factor estimate.
struct CohortConfig {
    std::uint64_t base_seed = 1;
    int n_users = 12;
    SynthConfig base;
    double home_scatter_m = 400.0;
    bool inject_job_effect = false;
    std::vector<std::pair<int, int>> job_commute_hours = {{8, 12}, {14, 18}};
    double job_noise_factor = 1.6;
    ProfileMixer mixer;  // empty: uniform codes
};

struct Cohort {
    std::vector<TraceDataset> datasets;
    std::vector<StaticProfile> profiles;
};

Cohort generate_cohort(const CohortConfig& config);

} // namespace mobent
