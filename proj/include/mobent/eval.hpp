#pragma once

#include "mobent/arima.hpp"
#include "mobent/covariates.hpp"
#include "mobent/entropy.hpp"
#include "mobent/gam.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mobent {

struct Grid;
struct TraceDataset;

/// One user's windowed data: entropy samples and the aligned feature rows.
struct UserData {
    EntropySequence entropy;
    FeatureSequence features;
};

/// First ceil(fraction·T) windows (missing ones included) go to train, the
/// rest to test. Window indices keep their original values so test windows
/// stay aligned with the calendar. Throws ValidationError when either part
/// would hold no observed entropy.
std::pair<UserData, UserData> chronological_split(const UserData& user, double train_fraction);

/// Scores in entropy percentage units. Inputs must be pairwise aligned and
/// pre-filtered of missing actuals; lengths must match and be non-empty.
double mae(const std::vector<double>& predicted, const std::vector<double>& actual);
double rmse(const std::vector<double>& predicted, const std::vector<double>& actual);

/// Drops factor terms that have fewer than two observed levels in `table`,
/// so per-user refits of a shared spec survive degenerate stretches.
ModelSpec prune_constant_factors(const ModelSpec& spec, const DataTable& table);

/// Modeling rows for one user: one row per window with observed entropy.
/// Columns: entropy, window_index, the feature fields, and — when a profile
/// is given — one constant column per coded profile field.
DataTable build_table(const EntropySequence& entropy, const FeatureSequence& features,
                      const StaticProfile* profile = nullptr);

struct EvalRow {
    std::string user_id;
    std::string model;  // "global-gam" | "individual-gam" | "arima"
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t n_test = 0;
    std::string status;  // "ok" or "failed: reason"
};

struct EvalAverage {
    std::string model;
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t users = 0;     // rows that entered the unweighted mean
    std::size_t failures = 0;  // rows excluded
};

struct EvalReport {
    std::vector<EvalRow> rows;          // grouped by user, model order fixed
    std::vector<EvalAverage> averages;  // one per model kind
};

struct ComparisonConfig {
    std::int64_t window_seconds = 3600;
    std::int64_t utc_offset_seconds = 3600;
    CampusRegion campus;
    double train_fraction = 0.6;
    ModelSpec base_terms;                       // shared by global and individual GAMs
    std::vector<std::string> profile_factors;   // appended to the global GAM only
    ArimaOrder arima_caps{3, 2, 3};
};

/// Shared defaults: Gamma/log response on s(hourNb, k=10) + s(dayNb, k=5)
/// with campus, night and weekend factors; the global model adds every
/// coded profile field (constant ones are pruned at fit time).
ComparisonConfig default_comparison_config();

struct ComparisonResult {
    EvalReport report;
    std::optional<FittedAdditiveModel> global_model;  // absent if the pooled fit failed
};

/// The three-way protocol: one pooled GAM with profile factors, per-user
/// GAMs without them, per-user auto ARIMA — each scored on the user's test
/// windows. Per-user failures become "failed" rows and stay out of the
/// averages.
ComparisonResult run_comparison(const std::vector<TraceDataset>& users, const Grid& grid,
                                const std::vector<StaticProfile>& profiles,
                                const ComparisonConfig& config);

/// Same protocol on already-windowed data (e.g. re-read from the entropy
/// and features CSVs); window/campus settings in `config` are unused.
ComparisonResult run_comparison(const std::vector<UserData>& users,
                                const std::vector<StaticProfile>& profiles,
                                const ComparisonConfig& config);

/// CSV `user_id,model,mae,rmse,n_test,status`, then one
/// `AVERAGE,<model>,<mae>,<rmse>,<users>,failures=<n>` row per model kind.
void write_report(std::ostream& out, const EvalReport& report);

} // namespace mobent
