#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mobent {

struct EntropySequence;

struct ArimaOrder {
    int p = 0;
    int d = 0;
    int q = 0;
};

/// ARIMA(p,d,q) on the d-times differenced series w, in mean form with the
/// minus-theta convention:
///
///   e_t = (w_t − mu) − Σ φ_i (w_{t−i} − mu) + Σ θ_j e_{t−j},   e_t = 0 for
///   the first max(p,q) positions.
///
/// mu is the process mean of the differenced series, so long-horizon
/// forecasts of a stationary model converge to mu. The tails keep what
/// forecasting needs: recent differenced values, recent innovations, and
/// the last value of every intermediate differencing level.
struct ArimaModel {
    ArimaOrder order;
    double mu = 0.0;
    std::vector<double> phi;
    std::vector<double> theta;
    double sigma2 = 0.0;
    std::size_t n_train = 0;  // length of the differenced training series
    double aicc = 0.0;
    std::vector<double> w_tail;          // last p differenced values, oldest first
    std::vector<double> e_tail;          // last q innovations, oldest first
    std::vector<double> integrate_tail;  // last value of level-i series, i = 0..d−1
};

/// d-fold first differences; output length shrinks by d.
std::vector<double> difference(const std::vector<double>& series, int d);

/// First element of each differencing level 0..d−1 — what integrate() needs
/// to invert difference() exactly.
std::vector<double> difference_initials(const std::vector<double>& series, int d);

/// Inverse of difference: rebuilds the original series from the d-times
/// differenced one and the retained level heads.
std::vector<double> integrate(const std::vector<double>& diffed,
                              const std::vector<double>& initials);

/// Conditional-sum-of-squares fit: deterministic Nelder–Mead over
/// (mu, phi, theta) from a Hannan–Rissanen start, with AR and MA roots
/// reflected outside the unit circle inside the objective. sigma2 =
/// CSS/n_eff; AICc uses k = p+q+1 parameters.
ArimaModel fit_css(const std::vector<double>& series, const ArimaOrder& order);

/// Exhaustive order search up to the caps. Candidates are made comparable
/// by trimming every differenced series to a common length (drop cap_d − d
/// leading values) and conditioning every CSS on the same max(cap_p, cap_q)
/// leading positions; AICc ties break toward smaller p+q, then smaller q.
/// The winning order is refit on the full series.
ArimaModel auto_select(const std::vector<double>& series, const ArimaOrder& caps = {3, 2, 3});

/// h-step forecasts: one-step expectations on the differenced scale with
/// future innovations zero, integrated back through the stored tails, then
/// clamped to [0, 100].
std::vector<double> forecast(const ArimaModel& model, int h);

/// Equispaced fitting series from an entropy sequence: leading/trailing
/// missing windows are trimmed, interior gaps of at most `max_gap` windows
/// are linearly interpolated, and a longer gap splits the sequence — the
/// longest resulting stretch wins, the later one on ties.
struct PreparedSeries {
    std::vector<double> values;
    int first_window = 1;  // window index of values.front()
    int last_window = 1;   // window index of values.back()
};
PreparedSeries prepare_series(const EntropySequence& sequence, int max_gap = 6);

/// Versioned JSON blob; round-trips every stored number exactly.
std::string arima_to_json(const ArimaModel& model);
ArimaModel arima_from_json(const std::string& text);

/// Internals exposed for direct verification of the objective.
namespace arima_detail {

/// CSS of the recursion above with innovations zeroed for t < condition_from
/// and summed for t ≥ condition_from.
double css(const std::vector<double>& w, double mu, const std::vector<double>& phi,
           const std::vector<double>& theta, std::size_t condition_from);

/// Reflects roots of 1 − Σ c_i z^i inside the unit circle to their
/// reciprocals so the polynomial becomes stationary/invertible; near-unit
/// roots are pushed slightly outside.
std::vector<double> reflect_roots(const std::vector<double>& coef);

} // namespace arima_detail

} // namespace mobent
