#pragma once

#include "mobent/spline.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace mobent {

/// Column-oriented numeric table keyed by column name. Factor codes are
/// stored as exact small doubles.
class DataTable {
public:
    void add_column(std::string name, std::vector<double> values);
    void append(const DataTable& other);  // row-wise; column sets must match
    bool has_column(const std::string& name) const;
    const std::vector<double>& column(const std::string& name) const;
    std::size_t rows() const { return rows_; }
    const std::vector<std::pair<std::string, std::vector<double>>>& columns() const {
        return cols_;
    }

private:
    std::vector<std::pair<std::string, std::vector<double>>> cols_;
    std::size_t rows_ = 0;
};

enum class Family {
    gamma_log,          // positive response, log link
    gaussian_identity,  // degenerate mode: penalized least squares
};

struct SmoothTermSpec {
    std::string name;
    int k = 10;             // basis dimension
    int penalty_order = 2;  // difference-penalty order on coefficients
    bool cyclic = false;    // wrap the covariate range
};

struct FactorTermSpec {
    std::string name;  // levels discovered from training data; lowest = reference
};

struct ModelSpec {
    std::string response = "entropy";
    Family family = Family::gamma_log;
    std::vector<SmoothTermSpec> smooths;
    std::vector<FactorTermSpec> factors;
    std::vector<std::string> linears;
};

/// One fitted smooth. The design block is the centered basis with its last
/// column removed: centering zeroes the block's row sums, which makes the
/// all-ones coefficient direction invisible to both fit and penalty, so one
/// coefficient is pinned at zero to keep the system nonsingular. coef thus
/// has k−1 entries.
struct FittedSmooth {
    SmoothTermSpec spec;
    BSplineBasis basis;
    Eigen::RowVectorXd col_means;  // length k, subtracted from raw basis rows
    Eigen::VectorXd coef;          // length k−1
    double lambda = 1.0;
    double edf = 0.0;
    int col_offset = 0;  // first column in the stacked design
};

struct FittedFactor {
    std::string name;
    std::vector<int> levels;  // ascending codes seen in training; [0] is reference
    Eigen::VectorXd coef;     // one per non-reference level
    int col_offset = 0;
};

struct FittedLinear {
    std::string name;
    double coef = 0.0;
    int col_offset = 0;
};

struct FittedAdditiveModel {
    ModelSpec spec;
    double intercept = 0.0;
    std::vector<FittedFactor> factors;
    std::vector<FittedLinear> linears;
    std::vector<FittedSmooth> smooths;
    double epsilon_y = 0.0;   // response shift applied when zeros are present
    double deviance = 0.0;    // unpenalized, at convergence
    double dispersion = 1.0;  // Pearson estimate
    double edf_total = 0.0;
    std::size_t n_obs = 0;
    Eigen::VectorXd coef;        // stacked: intercept, factors, linears, smooths
    Eigen::MatrixXd covariance;  // dispersion · (XᵀX + S)⁻¹
    std::vector<double> fitted;  // training predictions, response scale
    std::vector<double> trace;   // penalized deviance per IRLS step, final fit
};

/// Penalized IRLS fit with per-smooth penalty weights chosen by GCV over a
/// 17-point logarithmic grid (10⁻⁴ … 10⁴). Throws ModelError on
/// non-convergence, rank-deficient parametric terms, or invalid responses.
FittedAdditiveModel fit(const ModelSpec& spec, const DataTable& table);

/// Response-scale predictions. Smooth covariates are clamped to the
/// training range; unseen factor codes raise ModelError.
std::vector<double> predict(const FittedAdditiveModel& model, const DataTable& table);

struct CurvePoint {
    double x = 0.0;
    double fit = 0.0;
    double se = 0.0;
};

/// Centered smooth contribution on an even grid over the training range;
/// the curve is shifted to mean zero over the grid and its standard errors
/// come from the penalized covariance of exactly that shifted functional.
std::vector<CurvePoint> smooth_curve(const FittedAdditiveModel& model,
                                     const std::string& term, int grid_points = 100);

struct CoefficientRow {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    double z = 0.0;
    double p = 1.0;
};

/// Parametric coefficients (intercept, factor contrasts, linear slopes)
/// with normal-approximation two-sided p-values.
std::vector<CoefficientRow> coefficient_table(const FittedAdditiveModel& model);

/// Versioned JSON blob; from(to(m)) reproduces every stored number exactly.
std::string model_to_json(const FittedAdditiveModel& model);
FittedAdditiveModel model_from_json(const std::string& text);

/// CSV `term,x,fit,se` for every smooth in spec order.
void write_curves(std::ostream& out, const FittedAdditiveModel& model, int grid_points = 100);

/// Internals exposed so tests can verify the optimizer against the raw
/// objective (finite differences, direct solves) without refitting logic.
namespace gam_detail {

struct Assembled {
    Eigen::MatrixXd X;   // n × p stacked design, parametric columns first
    Eigen::MatrixXd XtX;
    Eigen::VectorXd y;   // response after the zero shift
    double epsilon_y = 0.0;
    int parametric_cols = 0;
    std::vector<Eigen::MatrixXd> penalties;  // per smooth: p × p, unit weight
    std::vector<std::string> column_names;   // per design column, for diagnostics
    std::vector<FittedFactor> factors;       // coef left empty
    std::vector<FittedLinear> linears;
    std::vector<FittedSmooth> smooths;
};

Assembled assemble(const ModelSpec& spec, const DataTable& table);

double deviance(Family family, const Eigen::VectorXd& y, const Eigen::VectorXd& mu);

double penalized_deviance(const Assembled& problem, Family family,
                          const std::vector<double>& lambdas, const Eigen::VectorXd& beta);

Eigen::VectorXd penalized_gradient(const Assembled& problem, Family family,
                                   const std::vector<double>& lambdas,
                                   const Eigen::VectorXd& beta);

} // namespace gam_detail

} // namespace mobent
