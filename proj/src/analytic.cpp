#include "stvel/analytic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stvel {

SimIntensityParams::SimIntensityParams() {
  sigma[0] << 0.065, -0.030, -0.030, 0.065;
  sigma[1] << 0.065, 0.000, 0.000, 0.065;
  sigma[2] << 0.065, 0.030, 0.030, 0.065;
}

SimIntensity::SimIntensity(SimIntensityParams params) : params_(std::move(params)) {
  if (!(params_.lambda0 > 0.0))
    throw std::invalid_argument("lambda0 must be positive");
  for (int k = 0; k < 3; ++k) {
    const Eigen::Matrix2d& s = params_.sigma[k];
    const double det = s.determinant();
    if (s(0, 1) != s(1, 0) || !(s(0, 0) > 0.0) || !(det > 0.0))
      throw std::invalid_argument("each Sigma_k must be symmetric positive definite");
    sigma_inv_[k] = s.inverse();
    norm_const_[k] = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));
  }
}

double SimIntensity::density(int k, double x, double y) const {
  const Eigen::Vector2d d(x - params_.mu[k](0), y - params_.mu[k](1));
  return norm_const_[k] * std::exp(-0.5 * d.dot(sigma_inv_[k] * d));
}

double SimIntensity::weight(int k, double t) const {
  switch (k) {
    case 0: return (1.0 - t) * params_.beta1;
    case 1: return t * (1.0 - t) * params_.beta2;
    default: return t * t * params_.beta3;
  }
}

double SimIntensity::lambda(double x, double y, double t) const {
  double e = params_.beta0;
  for (int k = 0; k < 3; ++k) e += weight(k, t) * density(k, x, y);
  return params_.lambda0 * std::exp(e);
}

std::pair<double, double> SimIntensity::grad_xy(double x, double y, double t) const {
  double bx = 0.0, by = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double f = density(k, x, y);
    const double ddx = x - params_.mu[k](0);
    const double ddy = y - params_.mu[k](1);
    const double fx = f * (-ddx * sigma_inv_[k](0, 0) - ddy * sigma_inv_[k](0, 1));
    const double fy = f * (-ddx * sigma_inv_[k](0, 1) - ddy * sigma_inv_[k](1, 1));
    const double w = weight(k, t);
    bx += w * fx;
    by += w * fy;
  }
  const double l = lambda(x, y, t);
  return {l * bx, l * by};
}

double SimIntensity::dlambda_dt(double x, double y, double t) const {
  const double b = -params_.beta1 * density(0, x, y) +
                   (1.0 - 2.0 * t) * params_.beta2 * density(1, x, y) +
                   2.0 * t * params_.beta3 * density(2, x, y);
  return lambda(x, y, t) * b;
}

VelocityValue SimIntensity::true_velocity(double x, double y, double t) const {
  // Work with the bracket terms only: the common lambda factor cancels in
  // the ratio, which keeps the result invariant under lambda0 rescaling to
  // the last bit.
  double bx = 0.0, by = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double f = density(k, x, y);
    const double ddx = x - params_.mu[k](0);
    const double ddy = y - params_.mu[k](1);
    const double w = weight(k, t);
    bx += w * f * (-ddx * sigma_inv_[k](0, 0) - ddy * sigma_inv_[k](0, 1));
    by += w * f * (-ddx * sigma_inv_[k](0, 1) - ddy * sigma_inv_[k](1, 1));
  }
  const double bt = -params_.beta1 * density(0, x, y) +
                    (1.0 - 2.0 * t) * params_.beta2 * density(1, x, y) +
                    2.0 * t * params_.beta3 * density(2, x, y);
  const double gnorm = std::hypot(bx, by);

  VelocityValue v;
  if (gnorm == 0.0) {
    v.magnitude = missing();
    v.vx = missing();
    v.vy = missing();
    return v;
  }
  v.magnitude = std::fabs(bt) / gnorm;
  const double s = bt > 0.0 ? 1.0 : (bt < 0.0 ? -1.0 : 0.0);
  v.vx = s * bx / gnorm;
  v.vy = s * by / gnorm;
  return v;
}

double SimIntensity::integral(const Window& w, const TimeSpan& ts,
                              int n_cells_per_axis) const {
  const int n = n_cells_per_axis;
  if (n < 1) throw std::invalid_argument("quadrature resolution must be >= 1");
  const double hx = (w.xmax - w.xmin) / n;
  const double hy = (w.ymax - w.ymin) / n;
  const double ht = (ts.tmax - ts.tmin) / n;
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        total += lambda(w.xmin + (i + 0.5) * hx, w.ymin + (j + 0.5) * hy,
                        ts.tmin + (k + 0.5) * ht);
  return total * hx * hy * ht;
}

double SimIntensity::upper_bound(const TimeSpan& ts) const {
  // per-bump peak densities; negative weights contribute at most zero
  const double f1 = norm_const_[0], f2 = norm_const_[1], f3 = norm_const_[2];
  const auto envelope = [&](double t) {
    return std::max(weight(0, t) * f1, 0.0) + std::max(weight(1, t) * f2, 0.0) +
           std::max(weight(2, t) * f3, 0.0);
  };
  const double t_abs = std::max({1.0, std::fabs(ts.tmin), std::fabs(ts.tmax)});
  const double lipschitz = std::fabs(params_.beta1) * f1 +
                           (1.0 + 2.0 * t_abs) * std::fabs(params_.beta2) * f2 +
                           2.0 * t_abs * std::fabs(params_.beta3) * f3;
  constexpr int kSteps = 100000;
  const double h = ts.length() / kSteps;
  double gmax = std::max(envelope(ts.tmin), envelope(ts.tmax));
  for (int k = 1; k < kSteps; ++k) gmax = std::max(gmax, envelope(ts.tmin + k * h));
  return params_.lambda0 * std::exp(params_.beta0 + gmax + 0.5 * lipschitz * h);
}

double calibrated_lambda0(const SimIntensityParams& base, double target_total,
                          int n_cells_per_axis) {
  if (!(target_total > 0.0))
    throw std::invalid_argument("target event count must be positive");
  SimIntensityParams unit = base;
  unit.lambda0 = 1.0;
  const double total1 =
      SimIntensity(unit).integral(Window{0, 1, 0, 1}, TimeSpan{0, 1}, n_cells_per_axis);
  return target_total / total1;
}

}  // namespace stvel
