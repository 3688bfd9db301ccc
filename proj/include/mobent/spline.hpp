#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace mobent {

/// Cubic B-spline basis over a training range.
///
/// Open (non-cyclic) bases use a clamped knot vector: boundary knots at the
/// data min/max repeated degree+1 times, interior knots at quantiles of the
/// training values. Cyclic bases use k uniform cardinal splines wrapped on
/// [a, b], identifying f(a) = f(b) up to second derivatives.
///
/// Evaluation clamps x to [a, b], which realizes the constant extension
/// beyond the training range used for prediction.
struct BSplineBasis {
    bool cyclic = false;
    int k = 0;          // number of basis functions
    double a = 0.0;     // training min
    double b = 0.0;     // training max
    std::vector<double> knots;  // full clamped knot vector; empty when cyclic

    /// All k basis values at x (clamped). Rows sum to 1 exactly up to
    /// rounding — partition of unity.
    Eigen::RowVectorXd row(double x) const;
};

/// Builds the basis from training values. Throws ModelError (mentioning the
/// term when `name` is non-empty) if k < 4, if the values have fewer than k
/// distinct entries, or if quantile knots collide — all cases where a
/// smaller k is the fix.
BSplineBasis make_bspline_basis(std::span<const double> values, int k, bool cyclic,
                                const std::string& name = {});

/// n×k design block for the training values, plus the column means that
/// were subtracted to drop the constant direction shared with the intercept.
struct SmoothDesign {
    BSplineBasis basis;
    Eigen::MatrixXd block;         // centered
    Eigen::RowVectorXd col_means;  // subtract from raw rows at predict time
};
SmoothDesign bspline_design(std::span<const double> values, int k, bool cyclic,
                            const std::string& name = {});

/// k×k coefficient roughness matrix DᵀD for the difference penalty of the
/// given order (wrapped differences when cyclic).
Eigen::MatrixXd difference_penalty(int k, int order, bool cyclic);

} // namespace mobent
