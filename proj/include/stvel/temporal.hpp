#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace stvel {

/// Basis layout for the log-linear temporal trend. Column order is:
/// intercept (if any), day-of-week indicators, cos(k w t) for k = 1..K,
/// sin(k w t) for k = 1..K, then t^p for p = 1..P.
///
/// Day-of-week and a separate intercept are mutually exclusive: the seven
/// indicators already span the constant.
struct TemporalBasisSpec {
  bool day_of_week = false;
  int day0_weekday = 0;  ///< weekday of t = 0 (0 = Sunday .. 6 = Saturday)
  int fourier_order = 0;
  double omega = 0.0;
  int poly_degree = 0;
  bool include_intercept = true;

  int basis_count() const;
  void validate() const;
};

std::vector<double> design_row(const TemporalBasisSpec& spec, double t);
std::vector<std::string> design_names(const TemporalBasisSpec& spec);

struct TemporalFit {
  TemporalBasisSpec spec;
  Eigen::VectorXd coefficients;  ///< on the original time scale
  Eigen::VectorXd std_errors;
  double deviance = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  double time_scale = 1.0;  ///< internal polynomial rescale that was undone
};

/// Poisson regression of counts on the basis (log link), solved by Newton
/// steps with step halving until the gradient norm falls below 1e-8 (or 100
/// iterations, then ConvergenceError). Polynomial columns are rescaled to
/// [0,1] internally for conditioning; reported coefficients are on the
/// original scale. Rank-deficient designs raise CollinearityError naming the
/// offending columns.
TemporalFit fit_temporal(std::span<const double> times,
                         std::span<const double> counts,
                         const TemporalBasisSpec& spec);

/// Fitted trend exp(design_row . coefficients); always positive.
double eval_mu(const TemporalFit& fit, double t);

}  // namespace stvel
