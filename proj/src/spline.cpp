#include "mobent/spline.hpp"
#include "mobent/error.hpp"

#include <algorithm>
#include <cmath>

namespace mobent {

namespace {

constexpr int degree = 3;

std::string term_prefix(const std::string& name) {
    return name.empty() ? std::string("smooth basis: ") : "smooth '" + name + "': ";
}

// Type-7 quantile (linear interpolation) of a sorted sample.
double quantile(const std::vector<double>& sorted, double p) {
    double pos = p * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

// Cardinal cubic B-spline on uniform knots, supported on [0, 4).
double cardinal_cubic(double t) {
    if (t <= 0.0 || t >= 4.0) return 0.0;
    double acc = 0.0;
    double sign = 1.0;
    static const double binom[5] = {1.0, 4.0, 6.0, 4.0, 1.0};
    for (int i = 0; i <= 4; ++i) {
        double u = t - i;
        if (u > 0.0) acc += sign * binom[i] * u * u * u;
        sign = -sign;
    }
    return acc / 6.0;
}

} // namespace

Eigen::RowVectorXd BSplineBasis::row(double x) const {
    x = std::clamp(x, a, b);
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(k);

    if (cyclic) {
        double u = (x - a) / (b - a) * static_cast<double>(k);
        u = std::fmod(u, static_cast<double>(k));  // x = b is the seam, same as x = a
        for (int j = 0; j < k; ++j) {
            double t = std::fmod(u - static_cast<double>(j), static_cast<double>(k));
            if (t < 0.0) t += static_cast<double>(k);
            out(j) = cardinal_cubic(t);
        }
        return out;
    }

    // locate the knot span [knots[s], knots[s+1]) containing x
    int s = static_cast<int>(std::upper_bound(knots.begin(), knots.end(), x) -
                             knots.begin()) - 1;
    s = std::clamp(s, degree, k - 1);

    // triangular recurrence over the degree+1 active functions
    double left[degree + 1];
    double right[degree + 1];
    double vals[degree + 1];
    vals[0] = 1.0;
    for (int d = 1; d <= degree; ++d) {
        left[d] = x - knots[static_cast<std::size_t>(s + 1 - d)];
        right[d] = knots[static_cast<std::size_t>(s + d)] - x;
        double saved = 0.0;
        for (int r = 0; r < d; ++r) {
            double denom = right[r + 1] + left[d - r];
            double term = denom != 0.0 ? vals[r] / denom : 0.0;
            vals[r] = saved + right[r + 1] * term;
            saved = left[d - r] * term;
        }
        vals[d] = saved;
    }
    for (int r = 0; r <= degree; ++r) out(s - degree + r) = vals[r];
    return out;
}

BSplineBasis make_bspline_basis(std::span<const double> values, int k, bool cyclic,
                                const std::string& name) {
    if (k < 4)
        throw ModelError(term_prefix(name) + "cubic basis needs k >= 4, got k = " +
                         std::to_string(k));
    if (values.empty())
        throw ModelError(term_prefix(name) + "no values");

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::size_t distinct = 1;
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i] != sorted[i - 1]) ++distinct;
    if (distinct < static_cast<std::size_t>(k))
        throw ModelError(term_prefix(name) + "k = " + std::to_string(k) + " exceeds the " +
                         std::to_string(distinct) +
                         " distinct covariate values; use a smaller k");

    BSplineBasis basis;
    basis.cyclic = cyclic;
    basis.k = k;
    basis.a = sorted.front();
    basis.b = sorted.back();
    if (cyclic) return basis;  // uniform wrapped knots are implicit

    int interior = k - degree - 1;
    basis.knots.reserve(static_cast<std::size_t>(k + degree + 1));
    for (int i = 0; i <= degree; ++i) basis.knots.push_back(basis.a);
    double prev = basis.a;
    for (int i = 1; i <= interior; ++i) {
        double q = quantile(sorted, static_cast<double>(i) / (interior + 1));
        if (q <= prev || q >= basis.b)
            throw ModelError(term_prefix(name) +
                             "quantile knots collide for k = " + std::to_string(k) +
                             "; use a smaller k");
        basis.knots.push_back(q);
        prev = q;
    }
    for (int i = 0; i <= degree; ++i) basis.knots.push_back(basis.b);
    return basis;
}

SmoothDesign bspline_design(std::span<const double> values, int k, bool cyclic,
                            const std::string& name) {
    SmoothDesign design;
    design.basis = make_bspline_basis(values, k, cyclic, name);
    design.block.resize(static_cast<Eigen::Index>(values.size()), k);
    for (Eigen::Index i = 0; i < design.block.rows(); ++i)
        design.block.row(i) = design.basis.row(values[static_cast<std::size_t>(i)]);
    design.col_means = design.block.colwise().mean();
    design.block.rowwise() -= design.col_means;
    return design;
}

Eigen::MatrixXd difference_penalty(int k, int order, bool cyclic) {
    if (k < 1 || order < 1 || (!cyclic && order >= k))
        throw ModelError("difference penalty: need 1 <= order < k");

    Eigen::MatrixXd D = Eigen::MatrixXd::Identity(k, k);
    for (int r = 0; r < order; ++r) {
        if (cyclic) {
            Eigen::MatrixXd step = Eigen::MatrixXd::Zero(k, k);
            for (int j = 0; j < k; ++j) {
                step(j, j) = -1.0;
                step(j, (j + 1) % k) = 1.0;
            }
            D = step * D;
        } else {
            int rows = static_cast<int>(D.rows()) - 1;
            Eigen::MatrixXd next(rows, k);
            for (int j = 0; j < rows; ++j) next.row(j) = D.row(j + 1) - D.row(j);
            D = next;
        }
    }
    return D.transpose() * D;
}

} // namespace mobent
