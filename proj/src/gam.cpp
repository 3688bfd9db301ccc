#include "mobent/gam.hpp"
#include "mobent/csv.hpp"
#include "mobent/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace mobent {

using json = nlohmann::json;

// ---------------------------------------------------------------- DataTable

void DataTable::add_column(std::string name, std::vector<double> values) {
    if (has_column(name))
        throw ValidationError("duplicate column '" + name + "'");
    if (!cols_.empty() && values.size() != rows_)
        throw ValidationError("column '" + name + "' has " + std::to_string(values.size()) +
                              " rows, table has " + std::to_string(rows_));
    rows_ = values.size();
    cols_.emplace_back(std::move(name), std::move(values));
}

bool DataTable::has_column(const std::string& name) const {
    for (const auto& [n, v] : cols_)
        if (n == name) return true;
    return false;
}

const std::vector<double>& DataTable::column(const std::string& name) const {
    for (const auto& [n, v] : cols_)
        if (n == name) return v;
    throw ValidationError("no column '" + name + "'");
}

void DataTable::append(const DataTable& other) {
    if (cols_.empty()) {
        *this = other;
        return;
    }
    if (other.cols_.size() != cols_.size())
        throw ValidationError("appending tables with different column sets");
    for (std::size_t c = 0; c < cols_.size(); ++c) {
        if (other.cols_[c].first != cols_[c].first)
            throw ValidationError("appending tables with different column sets");
        cols_[c].second.insert(cols_[c].second.end(), other.cols_[c].second.begin(),
                               other.cols_[c].second.end());
    }
    rows_ += other.rows_;
}

// ------------------------------------------------------------------ helpers

namespace {

constexpr int lambda_grid_size = 17;

double lambda_at(int i) { return std::pow(10.0, -4.0 + 0.5 * i); }

constexpr double eta_cap = 30.0;

Eigen::VectorXd mu_of_eta(Family family, const Eigen::VectorXd& eta) {
    if (family == Family::gaussian_identity) return eta;
    return eta.array().min(eta_cap).max(-eta_cap).exp();
}

int round_code(double x, const std::string& what) {
    double r = std::round(x);
    if (std::isnan(x) || std::abs(x - r) > 1e-9)
        throw ValidationError("factor '" + what + "': non-integer code " + std::to_string(x));
    return static_cast<int>(r);
}

std::vector<double> eig_to_vec(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vec_to_eig(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

// ----------------------------------------------------------------- assemble

namespace gam_detail {

Assembled assemble(const ModelSpec& spec, const DataTable& table) {
    Assembled a;
    const std::size_t n = table.rows();
    if (n == 0) throw ValidationError("fit: empty table");

    const auto& raw_y = table.column(spec.response);
    a.y = vec_to_eig(raw_y);
    for (double v : raw_y)
        if (!std::isfinite(v))
            throw ValidationError("fit: non-finite response");
    if (spec.family == Family::gamma_log) {
        bool any_zero = false;
        for (double v : raw_y) {
            if (v < 0.0) throw ModelError("fit: negative response under the Gamma family");
            if (v == 0.0) any_zero = true;
        }
        a.epsilon_y = any_zero ? 0.01 : 0.0;
        a.y.array() += a.epsilon_y;
    }

    // duplicate-covariate guard across the three term lists
    std::vector<std::string> used;
    auto claim = [&used](const std::string& name) {
        if (std::find(used.begin(), used.end(), name) != used.end())
            throw ValidationError("covariate '" + name + "' appears in two term lists");
        used.push_back(name);
    };

    struct PendingSmooth {
        SmoothDesign design;
        Eigen::MatrixXd roughness;  // (k−1)×(k−1)
    };
    std::vector<PendingSmooth> pending;

    int cols = 1;  // intercept
    for (const auto& f : spec.factors) claim(f.name);
    for (const auto& l : spec.linears) claim(l);
    for (const auto& s : spec.smooths) claim(s.name);

    // factors: discover levels, reference = lowest code
    for (const auto& fspec : spec.factors) {
        const auto& col = table.column(fspec.name);
        std::vector<int> levels;
        for (double v : col) {
            int code = round_code(v, fspec.name);
            if (std::find(levels.begin(), levels.end(), code) == levels.end())
                levels.push_back(code);
        }
        std::sort(levels.begin(), levels.end());
        if (levels.size() < 2)
            throw ModelError("factor '" + fspec.name +
                             "' has a single level in the training data; drop it");
        FittedFactor ff;
        ff.name = fspec.name;
        ff.levels = levels;
        ff.col_offset = cols;
        cols += static_cast<int>(levels.size()) - 1;
        a.factors.push_back(std::move(ff));
    }

    for (const auto& name : spec.linears) {
        const auto& col = table.column(name);
        for (double v : col)
            if (!std::isfinite(v))
                throw ValidationError("fit: non-finite value in linear term '" + name + "'");
        FittedLinear fl;
        fl.name = name;
        fl.col_offset = cols;
        cols += 1;
        a.linears.push_back(fl);
    }
    a.parametric_cols = cols;

    for (const auto& sspec : spec.smooths) {
        const auto& col = table.column(sspec.name);
        for (double v : col)
            if (!std::isfinite(v))
                throw ValidationError("fit: non-finite value in smooth term '" + sspec.name + "'");
        PendingSmooth ps;
        ps.design = bspline_design(col, sspec.k, sspec.cyclic, sspec.name);
        Eigen::MatrixXd full = difference_penalty(sspec.k, sspec.penalty_order, sspec.cyclic);
        ps.roughness = full.topLeftCorner(sspec.k - 1, sspec.k - 1);

        FittedSmooth fs;
        fs.spec = sspec;
        fs.basis = ps.design.basis;
        fs.col_means = ps.design.col_means;
        fs.col_offset = cols;
        cols += sspec.k - 1;
        a.smooths.push_back(std::move(fs));
        pending.push_back(std::move(ps));
    }

    // stacked design
    a.X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), cols);
    a.X.col(0).setOnes();
    a.column_names.assign(static_cast<std::size_t>(cols), {});
    a.column_names[0] = "(Intercept)";

    for (const auto& ff : a.factors) {
        const auto& col = table.column(ff.name);
        for (std::size_t lvl = 1; lvl < ff.levels.size(); ++lvl) {
            int c = ff.col_offset + static_cast<int>(lvl) - 1;
            a.column_names[static_cast<std::size_t>(c)] =
                ff.name + "=" + std::to_string(ff.levels[lvl]);
            for (std::size_t i = 0; i < n; ++i)
                if (round_code(col[i], ff.name) == ff.levels[lvl])
                    a.X(static_cast<Eigen::Index>(i), c) = 1.0;
        }
    }
    for (const auto& fl : a.linears) {
        const auto& col = table.column(fl.name);
        a.column_names[static_cast<std::size_t>(fl.col_offset)] = fl.name;
        for (std::size_t i = 0; i < n; ++i)
            a.X(static_cast<Eigen::Index>(i), fl.col_offset) = col[i];
    }
    for (std::size_t s = 0; s < a.smooths.size(); ++s) {
        const auto& fs = a.smooths[s];
        int width = fs.spec.k - 1;
        a.X.block(0, fs.col_offset, static_cast<Eigen::Index>(n), width) =
            pending[s].design.block.leftCols(width);
        for (int j = 0; j < width; ++j)
            a.column_names[static_cast<std::size_t>(fs.col_offset + j)] =
                "s(" + fs.spec.name + ")." + std::to_string(j + 1);
        Eigen::MatrixXd embedded = Eigen::MatrixXd::Zero(cols, cols);
        embedded.block(fs.col_offset, fs.col_offset, width, width) = pending[s].roughness;
        a.penalties.push_back(std::move(embedded));
    }

    a.XtX = a.X.transpose() * a.X;

    // parametric identifiability: factors and linears must not alias each
    // other or the intercept
    if (a.parametric_cols > 1) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.X.leftCols(a.parametric_cols));
        int rank = static_cast<int>(qr.rank());
        if (rank < a.parametric_cols) {
            auto perm = qr.colsPermutation().indices();
            std::string names;
            for (int i = rank; i < a.parametric_cols; ++i) {
                if (!names.empty()) names += ", ";
                names += a.column_names[static_cast<std::size_t>(perm(i))];
            }
            throw ModelError("parametric terms are collinear: " + names);
        }
    }
    return a;
}

double deviance(Family family, const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
    if (family == Family::gaussian_identity) return (y - mu).squaredNorm();
    double d = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        d += 2.0 * ((y(i) - mu(i)) / mu(i) - std::log(y(i) / mu(i)));
    return d;
}

double penalized_deviance(const Assembled& a, Family family,
                          const std::vector<double>& lambdas, const Eigen::VectorXd& beta) {
    Eigen::VectorXd mu = mu_of_eta(family, a.X * beta);
    double p = deviance(family, a.y, mu);
    for (std::size_t s = 0; s < a.penalties.size(); ++s)
        p += lambdas[s] * beta.dot(a.penalties[s] * beta);
    return p;
}

Eigen::VectorXd penalized_gradient(const Assembled& a, Family family,
                                   const std::vector<double>& lambdas,
                                   const Eigen::VectorXd& beta) {
    Eigen::VectorXd mu = mu_of_eta(family, a.X * beta);
    Eigen::VectorXd residual = family == Family::gaussian_identity
                                   ? Eigen::VectorXd(a.y - mu)
                                   : Eigen::VectorXd(((a.y - mu).array() / mu.array()).matrix());
    Eigen::VectorXd g = -2.0 * (a.X.transpose() * residual);
    for (std::size_t s = 0; s < a.penalties.size(); ++s)
        g += 2.0 * lambdas[s] * (a.penalties[s] * beta);
    return g;
}

} // namespace gam_detail

// --------------------------------------------------------------------- IRLS

namespace {

using gam_detail::Assembled;

Eigen::MatrixXd weighted_penalty(const Assembled& a, const std::vector<double>& lambdas) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(a.X.cols(), a.X.cols());
    for (std::size_t s = 0; s < a.penalties.size(); ++s) S += lambdas[s] * a.penalties[s];
    return S;
}

std::string format_trace(const std::vector<double>& trace) {
    std::ostringstream out;
    std::size_t from = trace.size() > 8 ? trace.size() - 8 : 0;
    for (std::size_t i = from; i < trace.size(); ++i) {
        if (i > from) out << " -> ";
        out << trace[i];
    }
    return out.str();
}

struct IrlsFit {
    Eigen::VectorXd beta;
    std::vector<double> trace;       // penalized deviance per step
    Eigen::LDLT<Eigen::MatrixXd> solver;  // of XᵀX + S
};

IrlsFit run_irls(const Assembled& a, Family family, const std::vector<double>& lambdas) {
    IrlsFit fit;
    fit.solver.compute(a.XtX + weighted_penalty(a, lambdas));
    if (fit.solver.info() != Eigen::Success)
        throw ModelError("fit: normal-equations factorization failed");

    if (family == Family::gaussian_identity) {
        fit.beta = fit.solver.solve(a.X.transpose() * a.y);
        fit.trace.push_back(gam_detail::penalized_deviance(a, family, lambdas, fit.beta));
        return fit;
    }

    // start from the penalized log-linear fit: with mu = y the working
    // response is exactly log y
    Eigen::VectorXd log_y = a.y.array().log();
    fit.beta = fit.solver.solve(a.X.transpose() * log_y);
    double current = gam_detail::penalized_deviance(a, family, lambdas, fit.beta);
    fit.trace.push_back(current);

    bool converged = false;
    for (int it = 0; it < 200 && !converged; ++it) {
        Eigen::VectorXd eta = (a.X * fit.beta).array().min(eta_cap).max(-eta_cap);
        Eigen::VectorXd mu = eta.array().exp();
        Eigen::VectorXd z = eta + ((a.y - mu).array() / mu.array()).matrix();
        Eigen::VectorXd target = fit.solver.solve(a.X.transpose() * z);

        // step-halve towards the previous iterate until the penalized
        // deviance stops increasing
        Eigen::VectorXd candidate;
        double next = std::numeric_limits<double>::infinity();
        double step = 1.0;
        for (int h = 0; h < 40; ++h) {
            candidate = fit.beta + step * (target - fit.beta);
            next = gam_detail::penalized_deviance(a, family, lambdas, candidate);
            if (next <= current * (1.0 + 1e-10) + 1e-12) break;
            step *= 0.5;
        }
        if (next > current * (1.0 + 1e-10) + 1e-12) {
            if (std::abs(next - current) <= 1e-8 * (std::abs(current) + 1e-6)) {
                converged = true;  // flat to within tolerance; keep the previous iterate
                continue;
            }
            throw ModelError("fit: IRLS could not decrease the penalized deviance; trace: " +
                             format_trace(fit.trace));
        }
        fit.beta = candidate;
        fit.trace.push_back(next);
        if (std::abs(current - next) <= 1e-8 * (std::abs(current) + 1e-6)) converged = true;
        current = next;
    }
    if (!converged)
        throw ModelError("fit: IRLS did not converge within 200 iterations; trace: " +
                         format_trace(fit.trace));
    return fit;
}

struct EdfReport {
    double total = 0.0;
    std::vector<double> per_smooth;
};

EdfReport effective_dof(const Assembled& a, const IrlsFit& fit) {
    Eigen::MatrixXd influence = fit.solver.solve(a.XtX);
    EdfReport report;
    report.total = influence.trace();
    for (const auto& fs : a.smooths) {
        double sum = 0.0;
        for (int j = 0; j < fs.spec.k - 1; ++j) sum += influence(fs.col_offset + j, fs.col_offset + j);
        report.per_smooth.push_back(sum);
    }
    return report;
}

double gcv_score(const Assembled& a, Family family, const IrlsFit& fit, double edf_total) {
    double n = static_cast<double>(a.y.size());
    if (edf_total >= n - 1e-6) return std::numeric_limits<double>::infinity();
    Eigen::VectorXd mu = mu_of_eta(family, a.X * fit.beta);
    double dev = gam_detail::deviance(family, a.y, mu);
    double denom = n - edf_total;
    return n * dev / (denom * denom);
}

std::vector<double> select_lambdas(const Assembled& a, Family family) {
    std::size_t count = a.penalties.size();
    if (count == 0) return {};

    auto evaluate = [&a, family](const std::vector<double>& lambdas) {
        IrlsFit fit = run_irls(a, family, lambdas);
        return gcv_score(a, family, fit, effective_dof(a, fit).total);
    };

    if (count == 1) {
        double best = std::numeric_limits<double>::infinity();
        int best_i = 0;
        for (int i = 0; i < lambda_grid_size; ++i) {
            double score = evaluate({lambda_at(i)});
            if (score < best) {
                best = score;
                best_i = i;
            }
        }
        return {lambda_at(best_i)};
    }
    if (count == 2) {
        double best = std::numeric_limits<double>::infinity();
        int best_i = 0;
        int best_j = 0;
        for (int i = 0; i < lambda_grid_size; ++i)
            for (int j = 0; j < lambda_grid_size; ++j) {
                double score = evaluate({lambda_at(i), lambda_at(j)});
                if (score < best) {
                    best = score;
                    best_i = i;
                    best_j = j;
                }
            }
        return {lambda_at(best_i), lambda_at(best_j)};
    }

    // three or more smooths: cyclic coordinate descent on the same grid
    std::vector<int> index(count, 8);  // 10^0
    auto lambdas_of = [&index, count]() {
        std::vector<double> l(count);
        for (std::size_t s = 0; s < count; ++s) l[s] = lambda_at(index[s]);
        return l;
    };
    for (int sweep = 0; sweep < 10; ++sweep) {
        bool changed = false;
        for (std::size_t s = 0; s < count; ++s) {
            double best = std::numeric_limits<double>::infinity();
            int best_i = index[s];
            for (int i = 0; i < lambda_grid_size; ++i) {
                std::vector<int> trial = index;
                trial[s] = i;
                std::vector<double> l(count);
                for (std::size_t t = 0; t < count; ++t) l[t] = lambda_at(trial[t]);
                double score = evaluate(l);
                if (score < best) {
                    best = score;
                    best_i = i;
                }
            }
            if (best_i != index[s]) {
                index[s] = best_i;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return lambdas_of();
}

double inv_link(Family family, double eta, double epsilon_y) {
    if (family == Family::gaussian_identity) return eta;
    return std::max(std::exp(std::min(eta, eta_cap)) - epsilon_y, 0.0);
}

// Linear predictor for one observation, shared by training `fitted`,
// predict() and curve export so they agree to the last bit.
double eta_for_row(const FittedAdditiveModel& model,
                   const std::vector<const std::vector<double>*>& factor_cols,
                   const std::vector<const std::vector<double>*>& linear_cols,
                   const std::vector<const std::vector<double>*>& smooth_cols, std::size_t i) {
    double eta = model.intercept;
    for (std::size_t f = 0; f < model.factors.size(); ++f) {
        const auto& ff = model.factors[f];
        double raw = (*factor_cols[f])[i];
        int code = round_code(raw, ff.name);
        auto it = std::lower_bound(ff.levels.begin(), ff.levels.end(), code);
        if (it == ff.levels.end() || *it != code)
            throw ModelError("factor '" + ff.name + "': unseen level " + std::to_string(code));
        std::size_t pos = static_cast<std::size_t>(it - ff.levels.begin());
        if (pos > 0) eta += ff.coef(static_cast<Eigen::Index>(pos) - 1);
    }
    for (std::size_t l = 0; l < model.linears.size(); ++l) {
        double x = (*linear_cols[l])[i];
        if (!std::isfinite(x))
            throw ValidationError("predict: non-finite value in linear term '" +
                                  model.linears[l].name + "'");
        eta += model.linears[l].coef * x;
    }
    for (std::size_t s = 0; s < model.smooths.size(); ++s) {
        const auto& fs = model.smooths[s];
        double x = (*smooth_cols[s])[i];
        if (!std::isfinite(x))
            throw ValidationError("predict: non-finite value in smooth term '" + fs.spec.name +
                                  "'");
        Eigen::RowVectorXd row = fs.basis.row(x) - fs.col_means;
        eta += row.head(fs.spec.k - 1).dot(fs.coef);
    }
    return eta;
}

std::vector<double> response_scale_predictions(const FittedAdditiveModel& model,
                                               const DataTable& table) {
    std::vector<const std::vector<double>*> factor_cols;
    std::vector<const std::vector<double>*> linear_cols;
    std::vector<const std::vector<double>*> smooth_cols;
    for (const auto& ff : model.factors) factor_cols.push_back(&table.column(ff.name));
    for (const auto& fl : model.linears) linear_cols.push_back(&table.column(fl.name));
    for (const auto& fs : model.smooths) smooth_cols.push_back(&table.column(fs.spec.name));

    std::vector<double> out(table.rows());
    for (std::size_t i = 0; i < table.rows(); ++i)
        out[i] = inv_link(model.spec.family,
                          eta_for_row(model, factor_cols, linear_cols, smooth_cols, i),
                          model.epsilon_y);
    return out;
}

} // namespace

// ----------------------------------------------------------------- fit API

FittedAdditiveModel fit(const ModelSpec& spec, const DataTable& table) {
    Assembled a = gam_detail::assemble(spec, table);
    std::vector<double> lambdas = select_lambdas(a, spec.family);
    IrlsFit best = run_irls(a, spec.family, lambdas);

    FittedAdditiveModel model;
    model.spec = spec;
    model.intercept = best.beta(0);
    model.factors = a.factors;
    model.linears = a.linears;
    model.smooths = a.smooths;
    model.epsilon_y = a.epsilon_y;
    model.n_obs = static_cast<std::size_t>(a.y.size());
    model.coef = best.beta;
    model.trace = best.trace;

    for (auto& ff : model.factors)
        ff.coef = best.beta.segment(ff.col_offset, static_cast<Eigen::Index>(ff.levels.size()) - 1);
    for (auto& fl : model.linears) fl.coef = best.beta(fl.col_offset);
    EdfReport edf = effective_dof(a, best);
    model.edf_total = edf.total;
    for (std::size_t s = 0; s < model.smooths.size(); ++s) {
        auto& fs = model.smooths[s];
        fs.coef = best.beta.segment(fs.col_offset, fs.spec.k - 1);
        fs.lambda = lambdas[s];
        fs.edf = edf.per_smooth[s];
    }

    Eigen::VectorXd mu = mu_of_eta(spec.family, a.X * best.beta);
    model.deviance = gam_detail::deviance(spec.family, a.y, mu);
    double pearson = 0.0;
    for (Eigen::Index i = 0; i < a.y.size(); ++i) {
        double r = spec.family == Family::gaussian_identity
                       ? a.y(i) - mu(i)
                       : (a.y(i) - mu(i)) / mu(i);
        pearson += r * r;
    }
    double dof = std::max(static_cast<double>(a.y.size()) - edf.total, 1e-8);
    model.dispersion = pearson / dof;
    model.covariance =
        model.dispersion *
        best.solver.solve(Eigen::MatrixXd::Identity(a.X.cols(), a.X.cols()));
    model.fitted = response_scale_predictions(model, table);
    return model;
}

std::vector<double> predict(const FittedAdditiveModel& model, const DataTable& table) {
    return response_scale_predictions(model, table);
}

std::vector<CurvePoint> smooth_curve(const FittedAdditiveModel& model, const std::string& term,
                                     int grid_points) {
    const FittedSmooth* fs = nullptr;
    for (const auto& s : model.smooths)
        if (s.spec.name == term) fs = &s;
    if (fs == nullptr) throw ModelError("smooth_curve: unknown term '" + term + "'");
    if (grid_points < 2) throw ModelError("smooth_curve: need at least 2 grid points");

    int width = fs->spec.k - 1;
    Eigen::MatrixXd C(grid_points, width);
    std::vector<double> xs(static_cast<std::size_t>(grid_points));
    for (int g = 0; g < grid_points; ++g) {
        double x = fs->basis.a +
                   (fs->basis.b - fs->basis.a) * static_cast<double>(g) / (grid_points - 1);
        xs[static_cast<std::size_t>(g)] = x;
        C.row(g) = (fs->basis.row(x) - fs->col_means).head(width);
    }
    Eigen::RowVectorXd grid_mean = C.colwise().mean();
    C.rowwise() -= grid_mean;  // report the curve centered over this grid

    Eigen::MatrixXd cov = model.covariance.block(fs->col_offset, fs->col_offset, width, width);
    Eigen::VectorXd fit_vals = C * fs->coef;

    std::vector<CurvePoint> curve(static_cast<std::size_t>(grid_points));
    for (int g = 0; g < grid_points; ++g) {
        double var = C.row(g) * cov * C.row(g).transpose();
        curve[static_cast<std::size_t>(g)] =
            CurvePoint{xs[static_cast<std::size_t>(g)], fit_vals(g),
                       std::sqrt(std::max(var, 0.0))};
    }
    return curve;
}

std::vector<CoefficientRow> coefficient_table(const FittedAdditiveModel& model) {
    std::vector<CoefficientRow> rows;
    auto push = [&rows, &model](const std::string& name, double est, int col) {
        CoefficientRow row;
        row.name = name;
        row.estimate = est;
        row.std_error = std::sqrt(std::max(model.covariance(col, col), 0.0));
        row.z = row.std_error > 0.0 ? est / row.std_error : 0.0;
        row.p = row.std_error > 0.0 ? std::erfc(std::abs(row.z) / std::numbers::sqrt2) : 1.0;
        rows.push_back(std::move(row));
    };
    push("(Intercept)", model.intercept, 0);
    for (const auto& ff : model.factors)
        for (std::size_t lvl = 1; lvl < ff.levels.size(); ++lvl)
            push(ff.name + "=" + std::to_string(ff.levels[lvl]),
                 ff.coef(static_cast<Eigen::Index>(lvl) - 1),
                 ff.col_offset + static_cast<int>(lvl) - 1);
    for (const auto& fl : model.linears) push(fl.name, fl.coef, fl.col_offset);
    return rows;
}

// ------------------------------------------------------------- JSON blob

namespace {

json smooth_to_json(const FittedSmooth& fs) {
    return json{{"name", fs.spec.name},
                {"k", fs.spec.k},
                {"penalty_order", fs.spec.penalty_order},
                {"cyclic", fs.spec.cyclic},
                {"basis",
                 json{{"cyclic", fs.basis.cyclic},
                      {"k", fs.basis.k},
                      {"a", fs.basis.a},
                      {"b", fs.basis.b},
                      {"knots", fs.basis.knots}}},
                {"col_means", std::vector<double>(fs.col_means.data(),
                                                  fs.col_means.data() + fs.col_means.size())},
                {"coef", eig_to_vec(fs.coef)},
                {"lambda", fs.lambda},
                {"edf", fs.edf},
                {"col_offset", fs.col_offset}};
}

FittedSmooth smooth_from_json(const json& j) {
    FittedSmooth fs;
    fs.spec.name = j.at("name").get<std::string>();
    fs.spec.k = j.at("k").get<int>();
    fs.spec.penalty_order = j.at("penalty_order").get<int>();
    fs.spec.cyclic = j.at("cyclic").get<bool>();
    const json& b = j.at("basis");
    fs.basis.cyclic = b.at("cyclic").get<bool>();
    fs.basis.k = b.at("k").get<int>();
    fs.basis.a = b.at("a").get<double>();
    fs.basis.b = b.at("b").get<double>();
    fs.basis.knots = b.at("knots").get<std::vector<double>>();
    auto means = j.at("col_means").get<std::vector<double>>();
    fs.col_means = Eigen::Map<const Eigen::RowVectorXd>(means.data(),
                                                        static_cast<Eigen::Index>(means.size()));
    fs.coef = vec_to_eig(j.at("coef").get<std::vector<double>>());
    fs.lambda = j.at("lambda").get<double>();
    fs.edf = j.at("edf").get<double>();
    fs.col_offset = j.at("col_offset").get<int>();
    return fs;
}

} // namespace

std::string model_to_json(const FittedAdditiveModel& model) {
    json j;
    j["format"] = "mobent.gam";
    j["version"] = 1;
    j["spec"] = {
        {"response", model.spec.response},
        {"family",
         model.spec.family == Family::gamma_log ? "gamma_log" : "gaussian_identity"},
    };
    j["intercept"] = model.intercept;
    j["epsilon_y"] = model.epsilon_y;
    j["deviance"] = model.deviance;
    j["dispersion"] = model.dispersion;
    j["edf_total"] = model.edf_total;
    j["n_obs"] = model.n_obs;

    json factors = json::array();
    for (const auto& ff : model.factors)
        factors.push_back(json{{"name", ff.name},
                               {"levels", ff.levels},
                               {"coef", eig_to_vec(ff.coef)},
                               {"col_offset", ff.col_offset}});
    j["factors"] = factors;

    json linears = json::array();
    for (const auto& fl : model.linears)
        linears.push_back(
            json{{"name", fl.name}, {"coef", fl.coef}, {"col_offset", fl.col_offset}});
    j["linears"] = linears;

    json smooths = json::array();
    for (const auto& fs : model.smooths) smooths.push_back(smooth_to_json(fs));
    j["smooths"] = smooths;

    j["coef"] = eig_to_vec(model.coef);
    json cov = json::array();
    for (Eigen::Index r = 0; r < model.covariance.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < model.covariance.cols(); ++c)
            row.push_back(model.covariance(r, c));
        cov.push_back(std::move(row));
    }
    j["covariance"] = cov;
    j["fitted"] = model.fitted;
    j["trace"] = model.trace;
    return j.dump();
}

FittedAdditiveModel model_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ModelError("model blob: invalid JSON");
    if (!j.is_object() || j.value("format", "") != "mobent.gam")
        throw ModelError("model blob: unrecognized format");
    if (j.value("version", 0) != 1)
        throw ModelError("model blob: unsupported version");

    FittedAdditiveModel model;
    model.spec.response = j.at("spec").at("response").get<std::string>();
    std::string family = j.at("spec").at("family").get<std::string>();
    if (family == "gamma_log")
        model.spec.family = Family::gamma_log;
    else if (family == "gaussian_identity")
        model.spec.family = Family::gaussian_identity;
    else
        throw ModelError("model blob: unknown family '" + family + "'");

    model.intercept = j.at("intercept").get<double>();
    model.epsilon_y = j.at("epsilon_y").get<double>();
    model.deviance = j.at("deviance").get<double>();
    model.dispersion = j.at("dispersion").get<double>();
    model.edf_total = j.at("edf_total").get<double>();
    model.n_obs = j.at("n_obs").get<std::size_t>();

    for (const auto& f : j.at("factors")) {
        FittedFactor ff;
        ff.name = f.at("name").get<std::string>();
        ff.levels = f.at("levels").get<std::vector<int>>();
        ff.coef = vec_to_eig(f.at("coef").get<std::vector<double>>());
        ff.col_offset = f.at("col_offset").get<int>();
        model.factors.push_back(std::move(ff));
        model.spec.factors.push_back(FactorTermSpec{model.factors.back().name});
    }
    for (const auto& l : j.at("linears")) {
        FittedLinear fl;
        fl.name = l.at("name").get<std::string>();
        fl.coef = l.at("coef").get<double>();
        fl.col_offset = l.at("col_offset").get<int>();
        model.linears.push_back(fl);
        model.spec.linears.push_back(fl.name);
    }
    for (const auto& s : j.at("smooths")) {
        model.smooths.push_back(smooth_from_json(s));
        model.spec.smooths.push_back(model.smooths.back().spec);
    }

    model.coef = vec_to_eig(j.at("coef").get<std::vector<double>>());
    const auto& cov = j.at("covariance");
    Eigen::Index p = static_cast<Eigen::Index>(cov.size());
    model.covariance.resize(p, p);
    for (Eigen::Index r = 0; r < p; ++r) {
        const auto& row = cov[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != p)
            throw ModelError("model blob: covariance is not square");
        for (Eigen::Index c = 0; c < p; ++c) model.covariance(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    model.fitted = j.at("fitted").get<std::vector<double>>();
    model.trace = j.at("trace").get<std::vector<double>>();
    return model;
}

void write_curves(std::ostream& out, const FittedAdditiveModel& model, int grid_points) {
    out << "term,x,fit,se\n";
    for (const auto& fs : model.smooths) {
        auto curve = smooth_curve(model, fs.spec.name, grid_points);
        for (const auto& point : curve)
            out << fs.spec.name << ',' << csv::fixed(point.x, 6) << ','
                << csv::fixed(point.fit, 6) << ',' << csv::fixed(point.se, 6) << '\n';
    }
}

} // namespace mobent
