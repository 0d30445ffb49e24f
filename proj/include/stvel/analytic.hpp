#pragma once

#include <Eigen/Dense>
#include <array>
#include <utility>

#include "stvel/grid.hpp"

namespace stvel {

/// Three-bump benchmark intensity on the unit cube:
///   lambda(x,y,t) = lambda0 * exp{ beta0 + (1-t) beta1 f1 + t(1-t) beta2 f2
///                                  + t^2 beta3 f3 }
/// with f_k bivariate normal densities. Closed-form partials make it the
/// ground truth for every finite-difference approximation in the pipeline.
struct SimIntensityParams {
  double lambda0 = 100.0;
  double beta0 = -1.5, beta1 = 8.0, beta2 = 2.0, beta3 = 2.0;
  std::array<Eigen::Vector2d, 3> mu{Eigen::Vector2d(0.4, 0.2),
                                    Eigen::Vector2d(0.8, 0.5),
                                    Eigen::Vector2d(0.2, 0.8)};
  std::array<Eigen::Matrix2d, 3> sigma;

  SimIntensityParams();

  /// The standard benchmark parameter set (the defaults above).
  static SimIntensityParams benchmark() { return {}; }
};

/// Velocity at a point: missing magnitude means undefined (zero gradient).
struct VelocityValue {
  double magnitude = 0.0;
  double vx = 0.0, vy = 0.0;
  bool defined() const { return !is_missing(magnitude); }
};

class SimIntensity {
 public:
  explicit SimIntensity(SimIntensityParams params);

  const SimIntensityParams& params() const { return params_; }

  double lambda(double x, double y, double t) const;
  std::pair<double, double> grad_xy(double x, double y, double t) const;
  double dlambda_dt(double x, double y, double t) const;

  /// Minimal velocity |dlambda/dt| / |grad lambda| and its direction
  /// sign(dlambda/dt) * grad / |grad|. The lambda factors cancel
  /// analytically, so the result is exactly invariant under any rescaling of
  /// lambda0. Zero-gradient points yield a missing magnitude, not an error.
  VelocityValue true_velocity(double x, double y, double t) const;

  /// Midpoint-rule integral of lambda over window x tspan.
  double integral(const Window& w, const TimeSpan& ts, int n_cells_per_axis) const;

  /// Rigorous dominating bound for thinning: bounds each bump by its global
  /// peak, maximizes the resulting exponent envelope over the time span with
  /// a Lipschitz-corrected grid search. Never below the true supremum.
  double upper_bound(const TimeSpan& ts) const;

 private:
  double density(int k, double x, double y) const;
  // time weights (1-t) beta1, t(1-t) beta2, t^2 beta3
  double weight(int k, double t) const;

  SimIntensityParams params_;
  std::array<Eigen::Matrix2d, 3> sigma_inv_;
  std::array<double, 3> norm_const_;  // 1 / (2 pi sqrt(det Sigma_k))
};

/// lambda0 that makes the benchmark intensity integrate to target_total over
/// the unit cube (midpoint quadrature at the given resolution).
double calibrated_lambda0(const SimIntensityParams& base, double target_total,
                          int n_cells_per_axis = 64);

}  // namespace stvel
