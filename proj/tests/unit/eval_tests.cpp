#include "doctest.h"

#include "mobent/error.hpp"
#include "mobent/eval.hpp"
#include "mobent/missing.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace mobent;

namespace {

// Deterministic synthetic user: T hourly windows starting at a local Monday
// 00:00, entropy following a smooth positive daily curve plus a tiny
// hand-rolled LCG wobble so rows are never exactly collinear.
UserData make_user(const std::string& id, int T, const std::set<int>& missing_k = {},
                   unsigned salt = 1) {
    UserData user;
    user.entropy.user_id = id;
    user.entropy.window_duration = 3600;
    user.entropy.anchor = 0;
    user.features.user_id = id;

    unsigned state = salt * 2654435761u + 12345u;
    auto wobble = [&state]() {
        state = state * 1664525u + 1013904223u;
        return static_cast<double>(state >> 16) / 65536.0;  // [0, 1)
    };

    for (int k = 1; k <= T; ++k) {
        EntropySample sample;
        sample.k = k;
        int hour = (k - 1) % 24 + 1;
        int day = ((k - 1) / 24) % 7 + 1;
        if (missing_k.count(k) == 0)
            sample.value =
                25.0 + 15.0 * std::sin(2.0 * 3.14159265358979 * (hour - 1) / 24.0) + 2.0 * wobble();
        user.entropy.samples.push_back(sample);

        WindowFeatures row;
        row.tsnb = (k - 1) % 168 + 1;
        row.hourNb = hour;
        row.dayNb = day;
        row.prevdayNb = day == 1 ? 7 : day - 1;
        row.nextdayNb = day == 7 ? 1 : day + 1;
        row.night = (hour >= 21 || hour <= 7) ? 1 : 0;
        row.weekend = day >= 6 ? 1 : 0;
        row.campus = (hour >= 9 && hour <= 17) ? 1 : 0;
        row.maxdistance = 120.0 + 30.0 * wobble();
        row.meanspeed = 0.8 + 0.4 * wobble();
        row.maxspeed = row.meanspeed + 0.6;
        user.features.rows.push_back(row);
    }
    return user;
}

StaticProfile profile_for(const std::string& id, int gender = 0) {
    StaticProfile p;
    p.user_id = id;
    p.codes.fill(0);
    p.codes[0] = gender;
    return p;
}

// Small GAM that stays estimable on short stretches.
ComparisonConfig small_config() {
    ComparisonConfig config;
    config.base_terms.response = "entropy";
    config.base_terms.family = Family::gamma_log;
    config.base_terms.smooths = {SmoothTermSpec{"hourNb", 4, 2, false}};
    config.base_terms.factors = {FactorTermSpec{"night"}};
    config.profile_factors = {"gender"};
    return config;
}

const EvalRow& row_of(const EvalReport& report, const std::string& user,
                      const std::string& model) {
    for (const auto& row : report.rows)
        if (row.user_id == user && row.model == model) return row;
    throw std::runtime_error("row not found: " + user + "/" + model);
}

const EvalAverage& avg_of(const EvalReport& report, const std::string& model) {
    for (const auto& avg : report.averages)
        if (avg.model == model) return avg;
    throw std::runtime_error("average not found: " + model);
}

} // namespace

TEST_CASE("chronological split cuts at the ceiling and keeps window indices") {
    UserData user = make_user("u1", 10);
    auto [train, test] = chronological_split(user, 0.6);
    CHECK(train.entropy.samples.size() == 6);
    CHECK(test.entropy.samples.size() == 4);
    CHECK(train.entropy.samples.front().k == 1);
    CHECK(train.entropy.samples.back().k == 6);
    CHECK(test.entropy.samples.front().k == 7);
    CHECK(test.entropy.samples.back().k == 10);
    CHECK(train.features.rows.size() == 6);
    CHECK(test.features.rows.size() == 4);
    CHECK(train.entropy.user_id == "u1");
    CHECK(test.entropy.window_duration == 3600);
    CHECK(test.entropy.anchor == user.entropy.anchor);

    UserData five = make_user("u2", 5);
    auto [t3, t2] = chronological_split(five, 0.6);  // ceil(3.0) = 3
    CHECK(t3.entropy.samples.size() == 3);
    CHECK(t2.entropy.samples.size() == 2);
}

TEST_CASE("chronological split rejects bad fractions and empty partitions") {
    UserData user = make_user("u1", 10);
    CHECK_THROWS_AS((void)chronological_split(user, 0.0), ValidationError);
    CHECK_THROWS_AS((void)chronological_split(user, 1.0), ValidationError);
    CHECK_THROWS_AS((void)chronological_split(user, -0.2), ValidationError);
    CHECK_THROWS_AS((void)chronological_split(user, 1.5), ValidationError);

    SUBCASE("no observed entropy in train") {
        UserData gappy = make_user("u3", 10, {1, 2, 3, 4, 5, 6});
        CHECK_THROWS_AS((void)chronological_split(gappy, 0.6), ValidationError);
    }
    SUBCASE("no observed entropy in test") {
        UserData gappy = make_user("u4", 10, {7, 8, 9, 10});
        CHECK_THROWS_AS((void)chronological_split(gappy, 0.6), ValidationError);
    }
    SUBCASE("entropy and features lengths must agree") {
        UserData bad = make_user("u5", 10);
        bad.features.rows.pop_back();
        CHECK_THROWS_AS((void)chronological_split(bad, 0.6), ValidationError);
    }
}

TEST_CASE("mae and rmse match hand-computed values") {
    std::vector<double> actual = {2.0, 4.0};
    std::vector<double> predicted = {3.0, 7.0};  // errors 1 and 3
    CHECK(mae(predicted, actual) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rmse(predicted, actual) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));

    CHECK(mae(actual, actual) == 0.0);
    CHECK(rmse(actual, actual) == 0.0);

    SUBCASE("rmse dominates mae") {
        unsigned state = 99u;
        auto next = [&state]() {
            state = state * 1664525u + 1013904223u;
            return static_cast<double>(state >> 16) / 655.36;  // [0, 100)
        };
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<double> a, b;
            for (int i = 0; i < 17; ++i) {
                a.push_back(next());
                b.push_back(next());
            }
            CHECK(rmse(a, b) >= mae(a, b) - 1e-12);
        }
    }
    SUBCASE("length mismatch and empty input are rejected") {
        std::vector<double> one = {1.0};
        std::vector<double> two = {1.0, 2.0};
        std::vector<double> none;
        CHECK_THROWS_AS((void)mae(one, two), ValidationError);
        CHECK_THROWS_AS((void)rmse(one, two), ValidationError);
        CHECK_THROWS_AS((void)mae(none, none), ValidationError);
        CHECK_THROWS_AS((void)rmse(none, none), ValidationError);
    }
}

TEST_CASE("constant factors are pruned, varying ones kept") {
    DataTable table;
    table.add_column("entropy", {10.0, 11.0, 12.0, 13.0});
    table.add_column("campus", {1.0, 1.0, 1.0, 1.0});
    table.add_column("night", {0.0, 1.0, 0.0, 1.0});

    ModelSpec spec;
    spec.response = "entropy";
    spec.factors = {FactorTermSpec{"campus"}, FactorTermSpec{"night"}};
    ModelSpec pruned = prune_constant_factors(spec, table);
    REQUIRE(pruned.factors.size() == 1);
    CHECK(pruned.factors[0].name == "night");
    CHECK(pruned.response == "entropy");
}

TEST_CASE("build_table drops missing windows and carries profile constants") {
    UserData user = make_user("u1", 5, {3});
    DataTable table = build_table(user.entropy, user.features);
    CHECK(table.rows() == 4);
    CHECK(table.columns().size() == 13);

    const auto& k = table.column("window_index");
    REQUIRE(k.size() == 4);
    CHECK(k[0] == 1.0);
    CHECK(k[1] == 2.0);
    CHECK(k[2] == 4.0);  // window 3 dropped
    CHECK(k[3] == 5.0);

    const auto& entropy = table.column("entropy");
    for (double v : entropy) CHECK(!is_missing(v));
    CHECK(entropy[2] == doctest::Approx(user.entropy.samples[3].value));

    const auto& hour = table.column("hourNb");
    CHECK(hour[2] == 4.0);

    SUBCASE("profile adds one constant column per coded field") {
        StaticProfile profile = profile_for("u1", 1);
        profile.codes[1] = 3;  // age_group
        DataTable with = build_table(user.entropy, user.features, &profile);
        CHECK(with.columns().size() == 13 + profile_fields.size());
        const auto& gender = with.column("gender");
        const auto& age = with.column("age_group");
        for (std::size_t i = 0; i < with.rows(); ++i) {
            CHECK(gender[i] == 1.0);
            CHECK(age[i] == 3.0);
        }
    }
    SUBCASE("length mismatch is rejected") {
        user.features.rows.pop_back();
        CHECK_THROWS_AS((void)build_table(user.entropy, user.features), ValidationError);
    }
}

TEST_CASE("single-user comparison: averages equal the one row") {
    UserData user = make_user("solo", 240, {}, 7);
    std::vector<UserData> users = {user};
    std::vector<StaticProfile> profiles = {profile_for("solo")};

    ComparisonResult result = run_comparison(users, profiles, small_config());
    REQUIRE(result.report.rows.size() == 3);
    for (const auto& row : result.report.rows) {
        CHECK(row.status == "ok");
        CHECK(row.n_test == 96);  // 240 - ceil(0.6*240)
    }
    for (const std::string model : {"global-gam", "individual-gam", "arima"}) {
        const EvalRow& row = row_of(result.report, "solo", model);
        const EvalAverage& avg = avg_of(result.report, model);
        CHECK(avg.users == 1);
        CHECK(avg.failures == 0);
        CHECK(avg.mae == doctest::Approx(row.mae).epsilon(1e-12));
        CHECK(avg.rmse == doctest::Approx(row.rmse).epsilon(1e-12));
        CHECK(row.rmse >= row.mae - 1e-12);
    }
    CHECK(result.global_model.has_value());

    SUBCASE("rerun is identical") {
        ComparisonResult again = run_comparison(users, profiles, small_config());
        std::ostringstream a, b;
        write_report(a, result.report);
        write_report(b, again.report);
        CHECK(a.str() == b.str());
    }
}

TEST_CASE("a user too short for arima fails that row only") {
    // 15 windows: train keeps 9 observed values, below the ~10 the order caps
    // require, while the small GAM stays estimable.
    std::vector<UserData> users = {make_user("long", 240, {}, 3), make_user("short", 15, {}, 4)};
    std::vector<StaticProfile> profiles = {profile_for("long", 0), profile_for("short", 1)};

    ComparisonResult result = run_comparison(users, profiles, small_config());
    REQUIRE(result.report.rows.size() == 6);

    CHECK(row_of(result.report, "long", "arima").status == "ok");
    const EvalRow& failed = row_of(result.report, "short", "arima");
    CHECK(failed.status.substr(0, 7) == "failed:");
    CHECK(failed.n_test == 0);

    CHECK(row_of(result.report, "short", "global-gam").status == "ok");
    CHECK(row_of(result.report, "short", "individual-gam").status == "ok");

    const EvalAverage& arima_avg = avg_of(result.report, "arima");
    CHECK(arima_avg.users == 1);
    CHECK(arima_avg.failures == 1);
    CHECK(arima_avg.mae ==
          doctest::Approx(row_of(result.report, "long", "arima").mae).epsilon(1e-12));
    CHECK(avg_of(result.report, "global-gam").users == 2);
    CHECK(avg_of(result.report, "individual-gam").failures == 0);
}

TEST_CASE("per-user models do not depend on who else is in the cohort") {
    UserData a = make_user("a", 240, {}, 11);
    UserData b = make_user("b", 240, {24, 25, 26}, 12);
    UserData c = make_user("c", 240, {}, 13);
    std::vector<StaticProfile> profiles = {profile_for("a", 0), profile_for("b", 1),
                                           profile_for("c", 0)};

    ComparisonResult full = run_comparison({a, b, c}, profiles, small_config());
    ComparisonResult duo = run_comparison({a, b}, {profiles[0], profiles[1]}, small_config());

    for (const std::string user : {"a", "b"})
        for (const std::string model : {"individual-gam", "arima"}) {
            const EvalRow& lhs = row_of(full.report, user, model);
            const EvalRow& rhs = row_of(duo.report, user, model);
            CHECK(lhs.status == "ok");
            CHECK(lhs.status == rhs.status);
            CHECK(lhs.mae == rhs.mae);
            CHECK(lhs.rmse == rhs.rmse);
            CHECK(lhs.n_test == rhs.n_test);
        }
}

TEST_CASE("report rows: scores for ok, empty fields for failed") {
    EvalReport report;
    EvalRow ok;
    ok.user_id = "u1";
    ok.model = "arima";
    ok.mae = 1.25;
    ok.rmse = 2.5;
    ok.n_test = 12;
    ok.status = "ok";
    report.rows.push_back(ok);
    EvalRow bad;
    bad.user_id = "u2";
    bad.model = "arima";
    bad.status = "failed: boom";
    report.rows.push_back(bad);

    EvalAverage avg;
    avg.model = "arima";
    avg.mae = 1.25;
    avg.rmse = 2.5;
    avg.users = 1;
    avg.failures = 1;
    report.averages.push_back(avg);
    EvalAverage empty;
    empty.model = "global-gam";
    empty.users = 0;
    empty.failures = 2;
    report.averages.push_back(empty);

    std::ostringstream out;
    write_report(out, report);
    std::istringstream lines(out.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "user_id,model,mae,rmse,n_test,status");
    std::getline(lines, line);
    CHECK(line == "u1,arima,1.250000,2.500000,12,ok");
    std::getline(lines, line);
    CHECK(line == "u2,arima,,,0,failed: boom");
    std::getline(lines, line);
    CHECK(line == "AVERAGE,arima,1.250000,2.500000,1,failures=1");
    std::getline(lines, line);
    CHECK(line == "AVERAGE,global-gam,,,0,failures=2");
    CHECK(!std::getline(lines, line));
}

TEST_CASE("comparison requires a profile for every user") {
    std::vector<UserData> users = {make_user("lost", 240)};
    CHECK_THROWS_AS((void)run_comparison(users, {}, small_config()), ValidationError);
    CHECK_THROWS_AS((void)run_comparison(std::vector<UserData>{}, {}, small_config()),
                    ValidationError);
}
