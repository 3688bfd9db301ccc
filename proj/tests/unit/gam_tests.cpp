#include "mobent/gam.hpp"

#include "mobent/error.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

using namespace mobent;

namespace {

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean_of(a), mb = mean_of(b);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        da += (a[i] - ma) * (a[i] - ma);
        db += (b[i] - mb) * (b[i] - mb);
    }
    return num / std::sqrt(da * db);
}

std::vector<double> gamma_sample(std::mt19937& rng, const std::vector<double>& mu,
                                 double shape) {
    std::vector<double> y(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        std::gamma_distribution<double> g(shape, mu[i] / shape);
        y[i] = g(rng);
    }
    return y;
}

double lambda_at(int i) { return std::pow(10.0, -4.0 + 0.5 * i); }

} // namespace

TEST_CASE("intercept-only gamma fit recovers the log of the mean") {
    DataTable t;
    std::vector<double> y = {2.0, 3.0, 4.0, 2.5, 3.5, 5.0, 1.5, 2.0};
    t.add_column("y", y);
    ModelSpec spec;
    spec.response = "y";
    auto model = fit(spec, t);
    CHECK(model.intercept == doctest::Approx(std::log(mean_of(y))).epsilon(1e-8));
    CHECK(model.epsilon_y == 0.0);
    CHECK(model.n_obs == 8);
    auto rows = coefficient_table(model);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].name == "(Intercept)");
    for (double f : model.fitted) CHECK(f == doctest::Approx(mean_of(y)).epsilon(1e-8));
}

TEST_CASE("constant response gives zero deviance") {
    DataTable t;
    t.add_column("y", std::vector<double>(20, 4.2));
    ModelSpec spec;
    spec.response = "y";
    auto model = fit(spec, t);
    CHECK(model.deviance == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(model.intercept == doctest::Approx(std::log(4.2)).epsilon(1e-10));
}

TEST_CASE("a zero response switches on the 0.01 shift and fitted values floor at zero") {
    DataTable t;
    t.add_column("y", std::vector<double>(10, 0.0));
    ModelSpec spec;
    spec.response = "y";
    auto model = fit(spec, t);
    CHECK(model.epsilon_y == 0.01);
    for (double f : model.fitted) CHECK(f == 0.0);

    DataTable pos;
    pos.add_column("y", {1.0, 2.0, 3.0});
    auto clean = fit(spec, pos);
    CHECK(clean.epsilon_y == 0.0);
}

TEST_CASE("factor-only gamma fit reproduces group means exactly") {
    std::mt19937 rng(314);
    const std::vector<double> true_means = {2.0, 3.5, 1.2};
    std::vector<double> y, code;
    std::vector<double> group_mean(3, 0.0);
    std::vector<int> group_n(3, 0);
    for (int g = 0; g < 3; ++g) {
        for (int i = 0; i < 150; ++i) {
            std::gamma_distribution<double> d(20.0, true_means[g] / 20.0);
            double v = d(rng);
            y.push_back(v);
            code.push_back(g);
            group_mean[g] += v;
            ++group_n[g];
        }
    }
    for (int g = 0; g < 3; ++g) group_mean[g] /= group_n[g];

    DataTable t;
    t.add_column("y", y);
    t.add_column("grp", code);
    ModelSpec spec;
    spec.response = "y";
    spec.factors = {{"grp"}};
    auto model = fit(spec, t);

    // the mle of this saturated model is the per-group sample mean
    CHECK(model.intercept == doctest::Approx(std::log(group_mean[0])).epsilon(1e-6));
    REQUIRE(model.factors.size() == 1);
    REQUIRE(model.factors[0].levels == std::vector<int>{0, 1, 2});
    CHECK(model.factors[0].coef(0) ==
          doctest::Approx(std::log(group_mean[1]) - std::log(group_mean[0])).epsilon(1e-6));
    CHECK(model.factors[0].coef(1) ==
          doctest::Approx(std::log(group_mean[2]) - std::log(group_mean[0])).epsilon(1e-6));
}

TEST_CASE("smooth term recovers a sinusoidal gamma signal") {
    std::mt19937 rng(2718);
    const int n = 2000;
    std::uniform_real_distribution<double> ux(0.0, 2.0 * M_PI);
    std::vector<double> x(n), mu(n);
    for (int i = 0; i < n; ++i) {
        x[i] = ux(rng);
        mu[i] = std::exp(1.0 + 0.8 * std::sin(x[i]));
    }
    auto y = gamma_sample(rng, mu, 20.0);

    DataTable t;
    t.add_column("y", y);
    t.add_column("x", x);
    ModelSpec spec;
    spec.response = "y";
    spec.smooths = {{"x", 10, 2, false}};
    auto model = fit(spec, t);

    auto pred = predict(model, t);
    CHECK(pearson(pred, mu) >= 0.95);
    CHECK(model.edf_total > 2.0);  // the smooth actually bends
    CHECK(model.smooths[0].coef.size() == 9);
}

TEST_CASE("every accepted IRLS step lowers the penalized deviance") {
    std::mt19937 rng(99);
    for (int problem = 0; problem < 20; ++problem) {
        std::uniform_int_distribution<int> un(80, 200);
        const int n = un(rng);
        std::uniform_real_distribution<double> ux(0.0, 10.0);
        std::vector<double> x(n), z(n), mu(n);
        std::uniform_int_distribution<int> uf(0, 2);
        for (int i = 0; i < n; ++i) {
            x[i] = ux(rng);
            z[i] = uf(rng);
            mu[i] = std::exp(0.5 + 0.3 * std::sin(x[i]) + 0.2 * z[i]);
        }
        auto y = gamma_sample(rng, mu, 10.0);
        DataTable t;
        t.add_column("y", y);
        t.add_column("x", x);
        t.add_column("z", z);
        ModelSpec spec;
        spec.response = "y";
        spec.smooths = {{"x", 8, 2, false}};
        spec.factors = {{"z"}};
        auto model = fit(spec, t);
        REQUIRE(model.trace.size() >= 1);
        for (std::size_t i = 1; i < model.trace.size(); ++i) {
            REQUIRE(model.trace[i] <= model.trace[i - 1] * (1.0 + 1e-10) + 1e-12);
        }
    }
}

TEST_CASE("gaussian fit equals the direct penalized normal-equations solve") {
    std::mt19937 rng(4242);
    const int n = 300;
    std::vector<double> x(n), y(n);
    std::normal_distribution<double> noise(0.0, 0.3);
    for (int i = 0; i < n; ++i) {
        x[i] = 10.0 * i / (n - 1);
        y[i] = std::sin(x[i]) + noise(rng);
    }
    DataTable t;
    t.add_column("y", y);
    t.add_column("x", x);
    ModelSpec spec;
    spec.response = "y";
    spec.family = Family::gaussian_identity;
    spec.smooths = {{"x", 8, 2, false}};
    auto model = fit(spec, t);

    auto a = gam_detail::assemble(spec, t);
    const double lambda = model.smooths[0].lambda;
    Eigen::MatrixXd S = lambda * a.penalties[0];
    Eigen::VectorXd beta = Eigen::LDLT<Eigen::MatrixXd>(a.XtX + S).solve(a.X.transpose() * a.y);
    REQUIRE(beta.size() == model.coef.size());
    for (int j = 0; j < beta.size(); ++j) {
        CHECK(model.coef(j) == doctest::Approx(beta(j)).epsilon(1e-8));
    }

    // ... and the grid choice is the gcv argmin computed independently
    double best_score = std::numeric_limits<double>::infinity();
    double best_lambda = 0.0;
    for (int i = 0; i < 17; ++i) {
        const double l = lambda_at(i);
        Eigen::LDLT<Eigen::MatrixXd> solver(a.XtX + l * a.penalties[0]);
        Eigen::VectorXd b = solver.solve(a.X.transpose() * a.y);
        double edf = solver.solve(a.XtX).trace();
        double rss = (a.y - a.X * b).squaredNorm();
        double score = n * rss / ((n - edf) * (n - edf));
        if (score < best_score) {
            best_score = score;
            best_lambda = l;
        }
    }
    CHECK(model.smooths[0].lambda == doctest::Approx(best_lambda).epsilon(1e-12));
}

TEST_CASE("analytic gradient of the penalized deviance matches finite differences") {
    std::mt19937 rng(555);
    const int n = 60;
    std::uniform_real_distribution<double> ux(0.0, 5.0);
    std::vector<double> x(n), z(n), mu(n);
    std::uniform_int_distribution<int> uf(0, 1);
    for (int i = 0; i < n; ++i) {
        x[i] = ux(rng);
        z[i] = uf(rng);
        mu[i] = std::exp(1.0 + 0.2 * x[i]);
    }
    auto y = gamma_sample(rng, mu, 15.0);
    DataTable t;
    t.add_column("y", y);
    t.add_column("x", x);
    t.add_column("z", z);
    ModelSpec spec;
    spec.response = "y";
    spec.smooths = {{"x", 5, 2, false}};
    spec.factors = {{"z"}};

    for (Family family : {Family::gamma_log, Family::gaussian_identity}) {
        spec.family = family;
        auto a = gam_detail::assemble(spec, t);
        std::vector<double> lambdas = {0.37};
        std::normal_distribution<double> coef(0.0, 0.1);
        Eigen::VectorXd beta(a.X.cols());
        for (int j = 0; j < beta.size(); ++j) beta(j) = coef(rng);
        beta(0) = 1.0;

        Eigen::VectorXd grad = gam_detail::penalized_gradient(a, family, lambdas, beta);
        Eigen::VectorXd fd(beta.size());
        const double h = 1e-6;
        for (int j = 0; j < beta.size(); ++j) {
            Eigen::VectorXd up = beta, dn = beta;
            up(j) += h;
            dn(j) -= h;
            fd(j) = (gam_detail::penalized_deviance(a, family, lambdas, up) -
                     gam_detail::penalized_deviance(a, family, lambdas, dn)) /
                    (2.0 * h);
        }
        CHECK((grad - fd).norm() <= 1e-4 * (grad.norm() + 1.0));
    }
}

TEST_CASE("deviance anchors for both families") {
    Eigen::VectorXd y(3), mu(3);
    y << 2.0, 3.0, 4.0;
    mu << 2.0, 3.0, 4.0;
    CHECK(gam_detail::deviance(Family::gamma_log, y, mu) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(gam_detail::deviance(Family::gaussian_identity, y, mu) ==
          doctest::Approx(0.0).epsilon(1e-14));
    Eigen::VectorXd y1(1), m1(1);
    y1 << 2.0;
    m1 << 1.0;
    // gamma: 2 * (-ln(y/mu) + (y - mu)/mu)
    CHECK(gam_detail::deviance(Family::gamma_log, y1, m1) ==
          doctest::Approx(2.0 * (-std::log(2.0) + 1.0)).epsilon(1e-12));
    CHECK(gam_detail::deviance(Family::gaussian_identity, y1, m1) ==
          doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("effective degrees of freedom shrink as lambda grows") {
    std::mt19937 rng(808);
    const int n = 150;
    std::uniform_real_distribution<double> ux(0.0, 8.0);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
        x[i] = ux(rng);
        y[i] = std::exp(1.0 + 0.3 * std::cos(x[i]));
    }
    DataTable t;
    t.add_column("y", y);
    t.add_column("x", x);
    ModelSpec spec;
    spec.response = "y";
    spec.smooths = {{"x", 9, 2, false}};
    auto a = gam_detail::assemble(spec, t);

    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 17; ++i) {
        Eigen::LDLT<Eigen::MatrixXd> solver(a.XtX + lambda_at(i) * a.penalties[0]);
        double edf = solver.solve(a.XtX).trace();
        CHECK(edf <= prev + 1e-9);
        prev = edf;
    }
}

TEST_CASE("predict on the training table reproduces the stored fitted values") {
    std::mt19937 rng(31337);
    const int n = 120;
    std::uniform_real_distribution<double> ux(0.0, 6.0);
    std::vector<double> x(n), mu(n), z(n);
    std::uniform_int_distribution<int> uf(0, 1);
    for (int i = 0; i < n; ++i) {
        x[i] = ux(rng);
        z[i] = uf(rng);
        mu[i] = std::exp(1.0 + 0.4 * std::sin(x[i]) + 0.3 * z[i]);
    }
    auto y = gamma_sample(rng, mu, 20.0);
    DataTable t;
    t.add_column("y", y);
    t.add_column("x", x);
    t.add_column("z", z);
    ModelSpec spec;
    spec.response = "y";
    spec.smooths = {{"x", 6, 2, false}};
    spec.factors = {{"z"}};
    auto model = fit(spec, t);

    auto pred = predict(model, t);
    REQUIRE(pred.size() == model.fitted.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        CHECK(std::abs(pred[i] - model.fitted[i]) <= 1e-9);
    }

    SUBCASE("covariates clamp to the training range") {
        auto one_row = [&](double xv, double zv) {
            DataTable q;
            q.add_column("y", {1.0});
            q.add_column("x", {xv});
            q.add_column("z", {zv});
            return predict(model, q)[0];
        };
        const double lo = model.smooths[0].basis.a;
        const double hi = model.smooths[0].basis.b;
        CHECK(one_row(hi + 50.0, 0.0) == doctest::Approx(one_row(hi, 0.0)).epsilon(1e-12));
        CHECK(one_row(lo - 50.0, 1.0) == doctest::Approx(one_row(lo, 1.0)).epsilon(1e-12));
    }

    SUBCASE("unseen factor codes are rejected") {
        DataTable q;
        q.add_column("y", {1.0});
        q.add_column("x", {3.0});
        q.add_column("z", {9.0});
        CHECK_THROWS_AS(predict(model, q), ModelError);
    }

    SUBCASE("smooth curves are centered with finite standard errors") {
        auto curve = smooth_curve(model, "x", 100);
        REQUIRE(curve.size() == 100);
        CHECK(curve.front().x == doctest::Approx(model.smooths[0].basis.a));
        CHECK(curve.back().x == doctest::Approx(model.smooths[0].basis.b));
        double mean_fit = 0.0;
        for (const auto& p : curve) {
            mean_fit += p.fit;
            CHECK(p.se >= 0.0);
            CHECK(std::isfinite(p.se));
        }
        mean_fit /= static_cast<double>(curve.size());
        CHECK(mean_fit == doctest::Approx(0.0).epsilon(1e-6));
        CHECK_THROWS_AS(smooth_curve(model, "nope", 50), ModelError);
    }

    SUBCASE("the json blob reproduces the model exactly") {
        auto text = model_to_json(model);
        auto back = model_from_json(text);
        CHECK(back.intercept == model.intercept);
        CHECK(back.epsilon_y == model.epsilon_y);
        CHECK(back.deviance == model.deviance);
        CHECK(back.dispersion == model.dispersion);
        CHECK(back.edf_total == model.edf_total);
        CHECK(back.n_obs == model.n_obs);
        REQUIRE(back.coef.size() == model.coef.size());
        CHECK((back.coef - model.coef).cwiseAbs().maxCoeff() == 0.0);
        CHECK((back.covariance - model.covariance).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(back.smooths.size() == 1);
        CHECK(back.smooths[0].lambda == model.smooths[0].lambda);
        CHECK(back.smooths[0].basis.knots == model.smooths[0].basis.knots);
        REQUIRE(back.factors.size() == 1);
        CHECK(back.factors[0].levels == model.factors[0].levels);
        CHECK((back.factors[0].coef - model.factors[0].coef).cwiseAbs().maxCoeff() == 0.0);
        auto p1 = predict(model, t);
        auto p2 = predict(back, t);
        for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);
    }
}

TEST_CASE("coefficient table flags a true log-scale shift of one") {
    std::mt19937 rng(1618);
    const int n = 400;
    std::vector<double> z(n), mu(n);
    for (int i = 0; i < n; ++i) {
        z[i] = i % 2;
        mu[i] = std::exp(1.0 + 1.0 * z[i]);
    }
    auto y = gamma_sample(rng, mu, 20.0);
    DataTable t;
    t.add_column("y", y);
    t.add_column("z", z);
    ModelSpec spec;
    spec.response = "y";
    spec.factors = {{"z"}};
    auto model = fit(spec, t);
    auto rows = coefficient_table(model);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].name.find("z") != std::string::npos);
    CHECK(rows[1].estimate == doctest::Approx(1.0).epsilon(0.1));
    CHECK(rows[1].p < 1e-6);
    CHECK(rows[1].z == doctest::Approx(rows[1].estimate / rows[1].std_error).epsilon(1e-12));
}

TEST_CASE("a null factor effect stays insignificant across seeds") {
    int calm = 0;
    for (int seed = 0; seed < 100; ++seed) {
        std::mt19937 rng(9000 + seed);
        const int n = 200;
        std::vector<double> z(n), mu(n, std::exp(1.0));
        for (int i = 0; i < n; ++i) z[i] = (rng() >> 4) % 2;
        auto y = gamma_sample(rng, mu, 20.0);
        DataTable t;
        t.add_column("y", y);
        t.add_column("z", z);
        ModelSpec spec;
        spec.response = "y";
        spec.factors = {{"z"}};
        auto model = fit(spec, t);
        auto rows = coefficient_table(model);
        if (std::abs(rows[1].z) < 3.5) ++calm;
    }
    CHECK(calm >= 99);
}

TEST_CASE("collinear parametric terms are named in the error") {
    DataTable t;
    std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    t.add_column("y", {1.0, 2.0, 1.5, 2.5, 1.2, 2.2});
    t.add_column("lin_a", x);
    t.add_column("lin_b", x);
    ModelSpec spec;
    spec.response = "y";
    spec.linears = {"lin_a", "lin_b"};
    try {
        fit(spec, t);
        FAIL("expected ModelError");
    } catch (const ModelError& e) {
        std::string msg = e.what();
        CHECK(msg.find("collinear") != std::string::npos);
        CHECK(msg.find("lin_") != std::string::npos);
    }
}

TEST_CASE("fit validates the response for the gamma family") {
    DataTable t;
    t.add_column("y", {1.0, -2.0, 3.0});
    ModelSpec spec;
    spec.response = "y";
    CHECK_THROWS_AS(fit(spec, t), ModelError);
    DataTable empty;
    empty.add_column("y", {});
    CHECK_THROWS_AS(fit(spec, empty), ValidationError);
}

TEST_CASE("table append concatenates rows and rejects mismatched schemas") {
    DataTable a;
    a.add_column("y", {1.0, 2.0});
    a.add_column("x", {0.1, 0.2});
    DataTable b;
    b.add_column("y", {3.0});
    b.add_column("x", {0.3});
    a.append(b);
    CHECK(a.rows() == 3);
    CHECK(a.column("y") == std::vector<double>{1.0, 2.0, 3.0});

    DataTable c;
    c.add_column("y", {1.0});
    CHECK_THROWS_AS(a.append(c), ValidationError);
    DataTable d;
    d.add_column("x", {0.4});
    d.add_column("y", {4.0});
    CHECK_THROWS_AS(a.append(d), ValidationError);
}
