#include "mobent/arima.hpp"
#include "mobent/entropy.hpp"
#include "mobent/error.hpp"

#include "json.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numeric>

namespace mobent {

using json = nlohmann::json;

std::vector<double> difference(const std::vector<double>& series, int d) {
    if (d < 0) throw ValidationError("difference: d must be non-negative");
    if (static_cast<int>(series.size()) <= d)
        throw ModelError("difference: series of length " + std::to_string(series.size()) +
                         " is too short for d = " + std::to_string(d));
    std::vector<double> out = series;
    for (int r = 0; r < d; ++r) {
        for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
        out.pop_back();
    }
    return out;
}

std::vector<double> difference_initials(const std::vector<double>& series, int d) {
    if (static_cast<int>(series.size()) <= d)
        throw ModelError("difference_initials: series too short");
    std::vector<double> initials;
    initials.reserve(static_cast<std::size_t>(d));
    std::vector<double> level = series;
    for (int r = 0; r < d; ++r) {
        initials.push_back(level.front());
        for (std::size_t i = 0; i + 1 < level.size(); ++i) level[i] = level[i + 1] - level[i];
        level.pop_back();
    }
    return initials;
}

std::vector<double> integrate(const std::vector<double>& diffed,
                              const std::vector<double>& initials) {
    std::vector<double> current = diffed;
    for (std::size_t level = initials.size(); level-- > 0;) {
        std::vector<double> rebuilt;
        rebuilt.reserve(current.size() + 1);
        rebuilt.push_back(initials[level]);
        for (double v : current) rebuilt.push_back(rebuilt.back() + v);
        current = std::move(rebuilt);
    }
    return current;
}

// ----------------------------------------------------------------- internals

namespace arima_detail {

double css(const std::vector<double>& w, double mu, const std::vector<double>& phi,
           const std::vector<double>& theta, std::size_t condition_from) {
    const std::size_t n = w.size();
    const std::size_t p = phi.size();
    const std::size_t q = theta.size();
    std::vector<double> e(n, 0.0);
    double total = 0.0;
    for (std::size_t t = condition_from; t < n; ++t) {
        double value = w[t] - mu;
        for (std::size_t i = 1; i <= p && i <= t; ++i) value -= phi[i - 1] * (w[t - i] - mu);
        for (std::size_t j = 1; j <= q && j <= t; ++j) value += theta[j - 1] * e[t - j];
        e[t] = value;
        total += value * value;
    }
    return total;
}

std::vector<double> reflect_roots(const std::vector<double>& coef) {
    // polynomial 1 − Σ c_i z^i as ascending coefficients a_0..a_k
    std::size_t degree = coef.size();
    while (degree > 0 && std::abs(coef[degree - 1]) < 1e-12) --degree;
    if (degree == 0) return std::vector<double>(coef.size(), 0.0);

    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(degree),
                                                      static_cast<Eigen::Index>(degree));
    double lead = -coef[degree - 1];
    for (std::size_t i = 0; i < degree; ++i) {
        double a_i = i == 0 ? 1.0 : -coef[i - 1];
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(degree - 1)) =
            -a_i / lead;
        if (i > 0)
            companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    if (solver.info() != Eigen::Success)
        throw ModelError("root reflection: eigenvalue computation failed");

    std::vector<std::complex<double>> roots;
    bool changed = false;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        std::complex<double> r = solver.eigenvalues()(i);
        double mag = std::abs(r);
        if (mag < 1e-8)
            throw ModelError("root reflection: near-zero root, polynomial degenerate");
        if (mag < 1.0) {
            r = 1.0 / std::conj(r);
            mag = std::abs(r);
            changed = true;
        }
        constexpr double floor_radius = 1.000001;
        if (mag < floor_radius) {
            r *= floor_radius / mag;
            changed = true;
        }
        roots.push_back(r);
    }
    if (!changed) return coef;

    // rebuild 1 − Σ c'_i z^i = Π (1 − z / r_i)
    std::vector<std::complex<double>> poly{1.0};
    for (const auto& r : roots) {
        std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            next[i] += poly[i];
            next[i + 1] -= poly[i] / r;
        }
        poly = std::move(next);
    }
    std::vector<double> out(coef.size(), 0.0);
    for (std::size_t i = 1; i < poly.size(); ++i) out[i - 1] = -poly[i].real();
    return out;
}

} // namespace arima_detail

namespace {

// ------------------------------------------------------- Nelder–Mead search

struct SimplexOptions {
    int max_iterations = 0;  // 0: derived from dimension
    double f_tolerance = 1e-9;
};

std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> start, const SimplexOptions& options) {
    const std::size_t dim = start.size();
    if (dim == 0) return start;
    const int max_iter =
        options.max_iterations > 0 ? options.max_iterations : 400 * static_cast<int>(dim);

    struct Vertex {
        std::vector<double> x;
        double value;
    };
    std::vector<Vertex> simplex;
    simplex.push_back({start, f(start)});
    for (std::size_t i = 0; i < dim; ++i) {
        std::vector<double> x = start;
        x[i] += x[i] != 0.0 ? 0.05 * std::abs(x[i]) : 0.1;
        simplex.push_back({x, f(x)});
    }
    auto by_value = [](const Vertex& a, const Vertex& b) { return a.value < b.value; };

    for (int it = 0; it < max_iter; ++it) {
        std::stable_sort(simplex.begin(), simplex.end(), by_value);
        double best = simplex.front().value;
        double worst = simplex.back().value;
        if (std::abs(worst - best) <= options.f_tolerance * (std::abs(best) + 1e-12)) break;

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t v = 0; v < dim; ++v)
            for (std::size_t i = 0; i < dim; ++i) centroid[i] += simplex[v].x[i] / dim;

        auto along = [&centroid, &simplex, dim](double t) {
            std::vector<double> x(dim);
            for (std::size_t i = 0; i < dim; ++i)
                x[i] = centroid[i] + t * (simplex[dim].x[i] - centroid[i]);
            return x;
        };

        std::vector<double> reflected = along(-1.0);
        double fr = f(reflected);
        if (fr < simplex[0].value) {
            std::vector<double> expanded = along(-2.0);
            double fe = f(expanded);
            simplex[dim] = fe < fr ? Vertex{expanded, fe} : Vertex{reflected, fr};
            continue;
        }
        if (fr < simplex[dim - 1].value) {
            simplex[dim] = {reflected, fr};
            continue;
        }
        bool outside = fr < simplex[dim].value;
        std::vector<double> contracted = along(outside ? -0.5 : 0.5);
        double fc = f(contracted);
        if (fc < std::min(fr, simplex[dim].value)) {
            simplex[dim] = {contracted, fc};
            continue;
        }
        for (std::size_t v = 1; v <= dim; ++v) {  // shrink toward the best vertex
            for (std::size_t i = 0; i < dim; ++i)
                simplex[v].x[i] = simplex[0].x[i] + 0.5 * (simplex[v].x[i] - simplex[0].x[i]);
            simplex[v].value = f(simplex[v].x);
        }
    }
    std::stable_sort(simplex.begin(), simplex.end(), by_value);
    return simplex.front().x;
}

// --------------------------------------------------------------- CSS fitting

struct PackedParams {
    double mu = 0.0;
    std::vector<double> phi;
    std::vector<double> theta;
};

PackedParams unpack(const std::vector<double>& x, int p, int q) {
    PackedParams params;
    params.mu = x[0];
    params.phi.assign(x.begin() + 1, x.begin() + 1 + p);
    params.theta.assign(x.begin() + 1 + p, x.begin() + 1 + p + q);
    params.phi = arima_detail::reflect_roots(params.phi);
    params.theta = arima_detail::reflect_roots(params.theta);
    return params;
}

// Hannan–Rissanen-style start: residuals of a long OLS autoregression, then
// one OLS pass of w on its own lags and the residual lags.
PackedParams starting_point(const std::vector<double>& w, int p, int q,
                            std::size_t condition_from) {
    const std::size_t n = w.size();
    double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(n);
    PackedParams start;
    start.mu = mean;
    start.phi.assign(static_cast<std::size_t>(p), 0.0);
    start.theta.assign(static_cast<std::size_t>(q), 0.0);
    if (p + q == 0) return start;

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = w[i] - mean;

    std::size_t L = static_cast<std::size_t>(std::max(p, q)) + 2;
    std::vector<double> resid(n, 0.0);
    bool have_resid = false;
    if (q > 0 && n > L && n - L >= L + 2) {
        Eigen::Index rows = static_cast<Eigen::Index>(n - L);
        Eigen::MatrixXd A(rows, static_cast<Eigen::Index>(L));
        Eigen::VectorXd b(rows);
        for (Eigen::Index r = 0; r < rows; ++r) {
            std::size_t t = static_cast<std::size_t>(r) + L;
            b(r) = x[t];
            for (std::size_t i = 1; i <= L; ++i)
                A(r, static_cast<Eigen::Index>(i - 1)) = x[t - i];
        }
        Eigen::VectorXd a = A.colPivHouseholderQr().solve(b);
        for (std::size_t t = L; t < n; ++t) {
            double fit = 0.0;
            for (std::size_t i = 1; i <= L; ++i) fit += a(static_cast<Eigen::Index>(i - 1)) * x[t - i];
            resid[t] = x[t] - fit;
        }
        have_resid = true;
    }

    // regression of x_t on p own lags and q residual lags
    std::size_t lead = std::max(static_cast<std::size_t>(std::max(p, q)),
                                have_resid ? L + static_cast<std::size_t>(q) : 0);
    if (n > lead && n - lead >= static_cast<std::size_t>(p + q) + 2) {
        Eigen::Index rows = static_cast<Eigen::Index>(n - lead);
        Eigen::MatrixXd A(rows, p + q);
        Eigen::VectorXd b(rows);
        for (Eigen::Index r = 0; r < rows; ++r) {
            std::size_t t = static_cast<std::size_t>(r) + lead;
            b(r) = x[t];
            for (int i = 1; i <= p; ++i) A(r, i - 1) = x[t - static_cast<std::size_t>(i)];
            for (int j = 1; j <= q; ++j)
                A(r, p + j - 1) = have_resid ? resid[t - static_cast<std::size_t>(j)] : 0.0;
        }
        if (!have_resid && q > 0) {
            // cannot form MA regressors; keep theta at zero, fit AR only
            if (p > 0) {
                Eigen::VectorXd c =
                    A.leftCols(p).colPivHouseholderQr().solve(b);
                for (int i = 0; i < p; ++i) start.phi[static_cast<std::size_t>(i)] = c(i);
            }
        } else {
            Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
            for (int i = 0; i < p; ++i) start.phi[static_cast<std::size_t>(i)] = c(i);
            for (int j = 0; j < q; ++j)
                start.theta[static_cast<std::size_t>(j)] = -c(p + j);
        }
    }
    start.phi = arima_detail::reflect_roots(start.phi);
    start.theta = arima_detail::reflect_roots(start.theta);
    (void)condition_from;
    return start;
}

struct CssFit {
    PackedParams params;
    double css = 0.0;
    std::size_t n_eff = 0;
    double aicc = 0.0;
};

CssFit minimize_css(const std::vector<double>& w, int p, int q, std::size_t condition_from) {
    const std::size_t n = w.size();
    if (n <= condition_from)
        throw ModelError("fit: differenced series shorter than the conditioning window");

    PackedParams start = starting_point(w, p, q, condition_from);
    std::vector<double> x0;
    x0.push_back(start.mu);
    x0.insert(x0.end(), start.phi.begin(), start.phi.end());
    x0.insert(x0.end(), start.theta.begin(), start.theta.end());

    auto objective = [&w, p, q, condition_from](const std::vector<double>& x) {
        PackedParams params = unpack(x, p, q);
        return arima_detail::css(w, params.mu, params.phi, params.theta, condition_from);
    };

    std::vector<double> best = nelder_mead(objective, x0, SimplexOptions{});
    best = nelder_mead(objective, best, SimplexOptions{});  // re-seeded polish

    CssFit fit;
    fit.params = unpack(best, p, q);
    fit.css = arima_detail::css(w, fit.params.mu, fit.params.phi, fit.params.theta,
                                condition_from);
    double start_css = arima_detail::css(w, start.mu, start.phi, start.theta, condition_from);
    if (fit.css > start_css) {  // the start is itself a candidate; never do worse
        fit.params = start;
        fit.css = start_css;
    }
    fit.n_eff = n - condition_from;
    double sigma2 = std::max(fit.css / static_cast<double>(fit.n_eff), 1e-12);
    double k = static_cast<double>(p + q + 1);
    double denom = static_cast<double>(fit.n_eff) - k - 1.0;
    fit.aicc = denom > 0.0
                   ? static_cast<double>(fit.n_eff) * std::log(sigma2) +
                         2.0 * k * static_cast<double>(fit.n_eff) / denom
                   : std::numeric_limits<double>::infinity();
    return fit;
}

std::vector<double> innovations(const std::vector<double>& w, const PackedParams& params,
                                std::size_t condition_from) {
    const std::size_t n = w.size();
    const std::size_t p = params.phi.size();
    const std::size_t q = params.theta.size();
    std::vector<double> e(n, 0.0);
    for (std::size_t t = condition_from; t < n; ++t) {
        double value = w[t] - params.mu;
        for (std::size_t i = 1; i <= p && i <= t; ++i)
            value -= params.phi[i - 1] * (w[t - i] - params.mu);
        for (std::size_t j = 1; j <= q && j <= t; ++j) value += params.theta[j - 1] * e[t - j];
        e[t] = value;
    }
    return e;
}

} // namespace

// ------------------------------------------------------------------ fitting

ArimaModel fit_css(const std::vector<double>& series, const ArimaOrder& order) {
    if (order.p < 0 || order.d < 0 || order.q < 0)
        throw ValidationError("fit: negative order");
    for (double v : series)
        if (!std::isfinite(v)) throw ValidationError("fit: series contains non-finite values");
    std::size_t required = static_cast<std::size_t>(order.p + order.q + order.d + 2);
    if (series.size() < required)
        throw ModelError("fit: series of length " + std::to_string(series.size()) +
                         " is shorter than the required " + std::to_string(required) +
                         " for order (" + std::to_string(order.p) + "," +
                         std::to_string(order.d) + "," + std::to_string(order.q) + ")");

    std::vector<double> w = difference(series, order.d);
    std::size_t condition_from = static_cast<std::size_t>(std::max(order.p, order.q));
    CssFit fit = minimize_css(w, order.p, order.q, condition_from);

    ArimaModel model;
    model.order = order;
    model.mu = fit.params.mu;
    model.phi = fit.params.phi;
    model.theta = fit.params.theta;
    model.sigma2 = std::max(fit.css / static_cast<double>(fit.n_eff), 1e-12);
    model.n_train = w.size();
    model.aicc = fit.aicc;

    model.w_tail.assign(w.end() - order.p, w.end());
    std::vector<double> e = innovations(w, fit.params, condition_from);
    model.e_tail.assign(e.end() - order.q, e.end());
    std::vector<double> level = series;
    for (int r = 0; r < order.d; ++r) {
        model.integrate_tail.push_back(level.back());
        for (std::size_t i = 0; i + 1 < level.size(); ++i) level[i] = level[i + 1] - level[i];
        level.pop_back();
    }
    return model;
}

ArimaModel auto_select(const std::vector<double>& series, const ArimaOrder& caps) {
    if (caps.p < 0 || caps.d < 0 || caps.q < 0)
        throw ValidationError("auto_select: negative caps");
    std::size_t required = static_cast<std::size_t>(caps.p + caps.q + caps.d + 2);
    if (series.size() < required)
        throw ModelError("auto_select: series too short for the order caps");

    // one common evaluation sample: same differenced length, same
    // conditioning count, for every candidate
    std::size_t condition_from = static_cast<std::size_t>(std::max(caps.p, caps.q));
    std::vector<std::vector<double>> trimmed(static_cast<std::size_t>(caps.d) + 1);
    for (int d = 0; d <= caps.d; ++d) {
        std::vector<double> w = difference(series, d);
        trimmed[static_cast<std::size_t>(d)] =
            std::vector<double>(w.begin() + (caps.d - d), w.end());
    }

    struct Candidate {
        ArimaOrder order;
        double aicc = std::numeric_limits<double>::infinity();
    };
    std::vector<Candidate> candidates;
    std::string failures;

    for (int d = 0; d <= caps.d; ++d)
        for (int p = 0; p <= caps.p; ++p)
            for (int q = 0; q <= caps.q; ++q) {
                try {
                    CssFit fit =
                        minimize_css(trimmed[static_cast<std::size_t>(d)], p, q, condition_from);
                    candidates.push_back({ArimaOrder{p, d, q}, fit.aicc});
                } catch (const Error& e) {
                    if (!failures.empty()) failures += "; ";
                    failures += "(" + std::to_string(p) + "," + std::to_string(d) + "," +
                                std::to_string(q) + "): " + e.what();
                }
            }
    if (candidates.empty())
        throw ModelError("auto_select: every candidate failed — " + failures);

    // AICc gaps below this margin are treated as ties. With ~48 nested orders
    // competing on one sample, the best spurious candidate beats the true
    // model by up to ~12-16 AICc units just from fitting noise (a plain
    // argmin hands pure white noise a fake AR or MA term ~60% of the time),
    // while genuine structure is worth hundreds of units at these lengths.
    // Within the band the most parsimonious order wins: fewest p+q, then
    // fewest q, then the earliest in scan order (lowest d).
    constexpr double aicc_margin = 16.0;
    double min_aicc = std::numeric_limits<double>::infinity();
    for (const auto& cand : candidates) min_aicc = std::min(min_aicc, cand.aicc);
    const Candidate* best = nullptr;
    for (const auto& cand : candidates) {
        if (cand.aicc > min_aicc + aicc_margin) continue;
        if (best == nullptr) {
            best = &cand;
            continue;
        }
        int cand_pq = cand.order.p + cand.order.q;
        int best_pq = best->order.p + best->order.q;
        if (cand_pq < best_pq || (cand_pq == best_pq && cand.order.q < best->order.q))
            best = &cand;
    }
    return fit_css(series, best->order);
}

std::vector<double> forecast(const ArimaModel& model, int h) {
    if (h < 1) throw ValidationError("forecast: horizon must be at least 1");
    const std::size_t p = model.phi.size();
    const std::size_t q = model.theta.size();

    std::vector<double> w_hist = model.w_tail;  // oldest first
    std::vector<double> e_hist = model.e_tail;
    std::vector<double> w_future(static_cast<std::size_t>(h));
    for (int step = 0; step < h; ++step) {
        double value = model.mu;
        for (std::size_t i = 1; i <= p; ++i)
            value += model.phi[i - 1] * (w_hist[w_hist.size() - i] - model.mu);
        for (std::size_t j = 1; j <= q; ++j)
            value -= model.theta[j - 1] * e_hist[e_hist.size() - j];
        w_future[static_cast<std::size_t>(step)] = value;
        if (p > 0) w_hist.push_back(value);
        if (q > 0) e_hist.push_back(0.0);  // future innovations at their expectation
    }

    // integrate back: level i forecast = cumulative sum seeded by the last
    // observed value of level i
    std::vector<double> current = std::move(w_future);
    for (std::size_t level = model.integrate_tail.size(); level-- > 0;) {
        double last = model.integrate_tail[level];
        for (double& v : current) {
            v += last;
            last = v;
        }
    }
    for (double& v : current) v = std::clamp(v, 0.0, 100.0);
    return current;
}

PreparedSeries prepare_series(const EntropySequence& sequence, int max_gap) {
    struct Observed {
        int k;
        double value;
    };
    std::vector<Observed> observed;
    for (const auto& sample : sequence.samples)
        if (!is_missing(sample.value)) observed.push_back({sample.k, sample.value});
    if (observed.empty())
        throw ModelError("prepare_series: user '" + sequence.user_id +
                         "' has no observed entropy");

    // maximal stretches whose interior gaps are all small enough
    struct Stretch {
        std::size_t first;  // indices into `observed`
        std::size_t last;
    };
    std::vector<Stretch> stretches;
    std::size_t begin = 0;
    for (std::size_t i = 1; i < observed.size(); ++i) {
        if (observed[i].k - observed[i - 1].k - 1 > max_gap) {
            stretches.push_back({begin, i - 1});
            begin = i;
        }
    }
    stretches.push_back({begin, observed.size() - 1});

    const Stretch* chosen = &stretches.front();
    for (const auto& stretch : stretches) {
        int span = observed[stretch.last].k - observed[stretch.first].k;
        int best_span = observed[chosen->last].k - observed[chosen->first].k;
        if (span >= best_span) chosen = &stretch;  // later stretch wins ties
    }

    PreparedSeries prepared;
    prepared.first_window = observed[chosen->first].k;
    prepared.last_window = observed[chosen->last].k;
    prepared.values.assign(
        static_cast<std::size_t>(prepared.last_window - prepared.first_window) + 1, 0.0);
    for (std::size_t i = chosen->first; i <= chosen->last; ++i) {
        prepared.values[static_cast<std::size_t>(observed[i].k - prepared.first_window)] =
            observed[i].value;
        if (i > chosen->first && observed[i].k - observed[i - 1].k > 1) {
            // linear fill across the gap
            double left = observed[i - 1].value;
            double right = observed[i].value;
            int width = observed[i].k - observed[i - 1].k;
            for (int step = 1; step < width; ++step) {
                double t = static_cast<double>(step) / width;
                prepared.values[static_cast<std::size_t>(observed[i - 1].k - prepared.first_window +
                                                         step)] = left * (1.0 - t) + right * t;
            }
        }
    }
    return prepared;
}

// -------------------------------------------------------------------- JSON

std::string arima_to_json(const ArimaModel& model) {
    json j;
    j["format"] = "mobent.arima";
    j["version"] = 1;
    j["order"] = {{"p", model.order.p}, {"d", model.order.d}, {"q", model.order.q}};
    j["mu"] = model.mu;
    j["phi"] = model.phi;
    j["theta"] = model.theta;
    j["sigma2"] = model.sigma2;
    j["n_train"] = model.n_train;
    j["aicc"] = model.aicc;
    j["w_tail"] = model.w_tail;
    j["e_tail"] = model.e_tail;
    j["integrate_tail"] = model.integrate_tail;
    return j.dump();
}

ArimaModel arima_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ModelError("model blob: invalid JSON");
    if (!j.is_object() || j.value("format", "") != "mobent.arima")
        throw ModelError("model blob: unrecognized format");
    if (j.value("version", 0) != 1) throw ModelError("model blob: unsupported version");

    ArimaModel model;
    model.order.p = j.at("order").at("p").get<int>();
    model.order.d = j.at("order").at("d").get<int>();
    model.order.q = j.at("order").at("q").get<int>();
    model.mu = j.at("mu").get<double>();
    model.phi = j.at("phi").get<std::vector<double>>();
    model.theta = j.at("theta").get<std::vector<double>>();
    model.sigma2 = j.at("sigma2").get<double>();
    model.n_train = j.at("n_train").get<std::size_t>();
    model.aicc = j.at("aicc").get<double>();
    model.w_tail = j.at("w_tail").get<std::vector<double>>();
    model.e_tail = j.at("e_tail").get<std::vector<double>>();
    model.integrate_tail = j.at("integrate_tail").get<std::vector<double>>();
    return model;
}

} // namespace mobent
