#include "mobent/eval.hpp"
#include "mobent/csv.hpp"
#include "mobent/error.hpp"
#include "mobent/grid.hpp"
#include "mobent/trace.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace mobent {

namespace {

std::size_t observed_count(const std::vector<EntropySample>& samples) {
    std::size_t count = 0;
    for (const auto& s : samples)
        if (!is_missing(s.value)) ++count;
    return count;
}

} // namespace

std::pair<UserData, UserData> chronological_split(const UserData& user, double train_fraction) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw ValidationError("split: train fraction must be inside (0, 1)");
    const auto& samples = user.entropy.samples;
    const std::size_t total = samples.size();
    if (total != user.features.rows.size())
        throw ValidationError("split: entropy and features disagree on window count");
    std::size_t n_train =
        static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(total)));
    if (n_train == 0 || n_train >= total)
        throw ValidationError("split: user '" + user.entropy.user_id + "' would have an empty " +
                              (n_train == 0 ? std::string("train") : std::string("test")) +
                              " partition");

    auto slice = [&user](std::size_t from, std::size_t to) {
        UserData part;
        part.entropy.user_id = user.entropy.user_id;
        part.entropy.window_duration = user.entropy.window_duration;
        part.entropy.anchor = user.entropy.anchor;
        part.entropy.samples.assign(user.entropy.samples.begin() + static_cast<std::ptrdiff_t>(from),
                                    user.entropy.samples.begin() + static_cast<std::ptrdiff_t>(to));
        part.features.user_id = user.features.user_id;
        part.features.rows.assign(user.features.rows.begin() + static_cast<std::ptrdiff_t>(from),
                                  user.features.rows.begin() + static_cast<std::ptrdiff_t>(to));
        return part;
    };
    UserData train = slice(0, n_train);
    UserData test = slice(n_train, total);
    if (observed_count(train.entropy.samples) == 0)
        throw ValidationError("split: user '" + user.entropy.user_id +
                              "' has no observed entropy in the train partition");
    if (observed_count(test.entropy.samples) == 0)
        throw ValidationError("split: user '" + user.entropy.user_id +
                              "' has no observed entropy in the test partition");
    return {std::move(train), std::move(test)};
}

double mae(const std::vector<double>& predicted, const std::vector<double>& actual) {
    if (predicted.size() != actual.size())
        throw ValidationError("mae: length mismatch");
    if (predicted.empty()) throw ValidationError("mae: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) total += std::abs(predicted[i] - actual[i]);
    return total / static_cast<double>(predicted.size());
}

double rmse(const std::vector<double>& predicted, const std::vector<double>& actual) {
    if (predicted.size() != actual.size())
        throw ValidationError("rmse: length mismatch");
    if (predicted.empty()) throw ValidationError("rmse: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        double e = predicted[i] - actual[i];
        total += e * e;
    }
    return std::sqrt(total / static_cast<double>(predicted.size()));
}

ModelSpec prune_constant_factors(const ModelSpec& spec, const DataTable& table) {
    ModelSpec pruned = spec;
    pruned.factors.clear();
    for (const auto& factor : spec.factors) {
        const auto& col = table.column(factor.name);
        bool varies = false;
        for (std::size_t i = 1; i < col.size() && !varies; ++i)
            if (col[i] != col[0]) varies = true;
        if (varies) pruned.factors.push_back(factor);
    }
    return pruned;
}

DataTable build_table(const EntropySequence& entropy, const FeatureSequence& features,
                      const StaticProfile* profile) {
    if (entropy.samples.size() != features.rows.size())
        throw ValidationError("build_table: entropy and features disagree on window count");

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < entropy.samples.size(); ++i)
        if (!is_missing(entropy.samples[i].value)) keep.push_back(i);

    auto gather = [&keep](auto&& get) {
        std::vector<double> out;
        out.reserve(keep.size());
        for (std::size_t i : keep) out.push_back(get(i));
        return out;
    };

    DataTable table;
    table.add_column("entropy", gather([&entropy](std::size_t i) {
        return entropy.samples[i].value;
    }));
    table.add_column("window_index", gather([&entropy](std::size_t i) {
        return static_cast<double>(entropy.samples[i].k);
    }));
    const auto& rows = features.rows;
    table.add_column("tsnb", gather([&rows](std::size_t i) { return double(rows[i].tsnb); }));
    table.add_column("maxdistance", gather([&rows](std::size_t i) { return rows[i].maxdistance; }));
    table.add_column("meanspeed", gather([&rows](std::size_t i) { return rows[i].meanspeed; }));
    table.add_column("maxspeed", gather([&rows](std::size_t i) { return rows[i].maxspeed; }));
    table.add_column("campus", gather([&rows](std::size_t i) { return double(rows[i].campus); }));
    table.add_column("hourNb", gather([&rows](std::size_t i) { return double(rows[i].hourNb); }));
    table.add_column("night", gather([&rows](std::size_t i) { return double(rows[i].night); }));
    table.add_column("dayNb", gather([&rows](std::size_t i) { return double(rows[i].dayNb); }));
    table.add_column("prevdayNb",
                     gather([&rows](std::size_t i) { return double(rows[i].prevdayNb); }));
    table.add_column("nextdayNb",
                     gather([&rows](std::size_t i) { return double(rows[i].nextdayNb); }));
    table.add_column("weekend", gather([&rows](std::size_t i) { return double(rows[i].weekend); }));

    if (profile != nullptr)
        for (std::size_t f = 0; f < profile_fields.size(); ++f)
            table.add_column(profile_fields[f].name,
                             std::vector<double>(keep.size(), double(profile->codes[f])));
    return table;
}

ComparisonConfig default_comparison_config() {
    ComparisonConfig config;
    config.base_terms.response = "entropy";
    config.base_terms.family = Family::gamma_log;
    config.base_terms.smooths = {SmoothTermSpec{"hourNb", 10, 2, false},
                                 SmoothTermSpec{"dayNb", 5, 2, false}};
    config.base_terms.factors = {FactorTermSpec{"campus"}, FactorTermSpec{"night"},
                                 FactorTermSpec{"weekend"}};
    for (const auto& field : profile_fields) config.profile_factors.push_back(field.name);
    return config;
}

namespace {

struct PreparedUser {
    std::string user_id;
    UserData train;
    UserData test;
    const StaticProfile* profile = nullptr;
    DataTable train_table;  // without profile columns
    DataTable test_table;
    std::string split_error;  // non-empty: user unusable
};

std::vector<double> observed_test_actuals(const UserData& test) {
    std::vector<double> actual;
    for (const auto& s : test.entropy.samples)
        if (!is_missing(s.value)) actual.push_back(s.value);
    return actual;
}

EvalRow scored_row(const std::string& user_id, const std::string& model,
                   const std::vector<double>& predicted, const std::vector<double>& actual) {
    EvalRow row;
    row.user_id = user_id;
    row.model = model;
    row.mae = mae(predicted, actual);
    row.rmse = rmse(predicted, actual);
    row.n_test = actual.size();
    row.status = "ok";
    return row;
}

EvalRow failed_row(const std::string& user_id, const std::string& model,
                   const std::string& reason) {
    EvalRow row;
    row.user_id = user_id;
    row.model = model;
    row.status = "failed: " + reason;
    return row;
}

} // namespace

ComparisonResult run_comparison(const std::vector<TraceDataset>& users, const Grid& grid,
                                const std::vector<StaticProfile>& profiles,
                                const ComparisonConfig& config) {
    std::vector<UserData> windowed;
    for (const auto& dataset : users) {
        UserData data;
        data.entropy =
            entropy_sequence(dataset, grid, config.window_seconds, config.utc_offset_seconds);
        data.features = feature_sequence(dataset, config.campus, config.window_seconds,
                                         config.utc_offset_seconds);
        windowed.push_back(std::move(data));
    }
    return run_comparison(windowed, profiles, config);
}

ComparisonResult run_comparison(const std::vector<UserData>& users,
                                const std::vector<StaticProfile>& profiles,
                                const ComparisonConfig& config) {
    if (users.empty()) throw ValidationError("run_comparison: no users");

    auto profile_of = [&profiles](const std::string& user_id) -> const StaticProfile* {
        for (const auto& p : profiles)
            if (p.user_id == user_id) return &p;
        return nullptr;
    };

    // split every user up front
    std::vector<PreparedUser> prepared;
    for (const auto& data : users) {
        PreparedUser pu;
        pu.user_id = data.entropy.user_id;
        pu.profile = profile_of(pu.user_id);
        if (pu.profile == nullptr)
            throw ValidationError("run_comparison: no profile for user '" + pu.user_id + "'");
        try {
            auto [train, test] = chronological_split(data, config.train_fraction);
            pu.train = std::move(train);
            pu.test = std::move(test);
            pu.train_table = build_table(pu.train.entropy, pu.train.features);
            pu.test_table = build_table(pu.test.entropy, pu.test.features);
        } catch (const Error& e) {
            pu.split_error = e.what();
        }
        prepared.push_back(std::move(pu));
    }

    ComparisonResult result;

    // (a) pooled GAM with profile factors
    std::string global_error;
    try {
        DataTable pooled;
        for (const auto& pu : prepared) {
            if (!pu.split_error.empty()) continue;
            pooled.append(build_table(pu.train.entropy, pu.train.features, pu.profile));
        }
        if (pooled.rows() == 0) throw ModelError("no user survived the chronological split");

        ModelSpec global_spec = config.base_terms;
        for (const auto& name : config.profile_factors)
            global_spec.factors.push_back(FactorTermSpec{name});
        global_spec = prune_constant_factors(global_spec, pooled);
        result.global_model = fit(global_spec, pooled);
    } catch (const Error& e) {
        global_error = e.what();
    }

    for (const auto& pu : prepared) {
        // global GAM row
        if (!pu.split_error.empty()) {
            result.report.rows.push_back(failed_row(pu.user_id, "global-gam", pu.split_error));
        } else if (!global_error.empty()) {
            result.report.rows.push_back(failed_row(pu.user_id, "global-gam", global_error));
        } else {
            try {
                DataTable test_table = build_table(pu.test.entropy, pu.test.features, pu.profile);
                auto predictions = predict(*result.global_model, test_table);
                result.report.rows.push_back(scored_row(pu.user_id, "global-gam", predictions,
                                                        observed_test_actuals(pu.test)));
            } catch (const Error& e) {
                result.report.rows.push_back(failed_row(pu.user_id, "global-gam", e.what()));
            }
        }

        // individual GAM row
        if (!pu.split_error.empty()) {
            result.report.rows.push_back(failed_row(pu.user_id, "individual-gam", pu.split_error));
        } else {
            try {
                ModelSpec spec = prune_constant_factors(config.base_terms, pu.train_table);
                FittedAdditiveModel model = fit(spec, pu.train_table);
                auto predictions = predict(model, pu.test_table);
                result.report.rows.push_back(scored_row(pu.user_id, "individual-gam", predictions,
                                                        observed_test_actuals(pu.test)));
            } catch (const Error& e) {
                result.report.rows.push_back(failed_row(pu.user_id, "individual-gam", e.what()));
            }
        }

        // ARIMA row
        if (!pu.split_error.empty()) {
            result.report.rows.push_back(failed_row(pu.user_id, "arima", pu.split_error));
        } else {
            try {
                PreparedSeries series = prepare_series(pu.train.entropy);
                ArimaModel model = auto_select(series.values, config.arima_caps);
                int last_test_k = pu.test.entropy.samples.back().k;
                int horizon = last_test_k - series.last_window;
                std::vector<double> path = forecast(model, horizon);
                std::vector<double> predictions;
                std::vector<double> actual;
                for (const auto& s : pu.test.entropy.samples)
                    if (!is_missing(s.value)) {
                        predictions.push_back(
                            path[static_cast<std::size_t>(s.k - series.last_window - 1)]);
                        actual.push_back(s.value);
                    }
                result.report.rows.push_back(
                    scored_row(pu.user_id, "arima", predictions, actual));
            } catch (const Error& e) {
                result.report.rows.push_back(failed_row(pu.user_id, "arima", e.what()));
            }
        }
    }

    // unweighted per-user averages, failures counted per model kind
    for (const std::string model : {"global-gam", "individual-gam", "arima"}) {
        EvalAverage avg;
        avg.model = model;
        for (const auto& row : result.report.rows) {
            if (row.model != model) continue;
            if (row.status == "ok") {
                avg.mae += row.mae;
                avg.rmse += row.rmse;
                ++avg.users;
            } else {
                ++avg.failures;
            }
        }
        if (avg.users > 0) {
            avg.mae /= static_cast<double>(avg.users);
            avg.rmse /= static_cast<double>(avg.users);
        }
        result.report.averages.push_back(std::move(avg));
    }
    return result;
}

void write_report(std::ostream& out, const EvalReport& report) {
    out << "user_id,model,mae,rmse,n_test,status\n";
    for (const auto& row : report.rows) {
        out << row.user_id << ',' << row.model << ',';
        if (row.status == "ok")
            out << csv::fixed(row.mae, 6) << ',' << csv::fixed(row.rmse, 6);
        else
            out << ',';
        out << ',' << row.n_test << ',' << row.status << '\n';
    }
    for (const auto& avg : report.averages) {
        out << "AVERAGE," << avg.model << ',';
        if (avg.users > 0)
            out << csv::fixed(avg.mae, 6) << ',' << csv::fixed(avg.rmse, 6);
        else
            out << ',';
        out << ',' << avg.users << ",failures=" << avg.failures << '\n';
    }
}

} // namespace mobent
