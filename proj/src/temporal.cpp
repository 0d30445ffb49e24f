#include "stvel/temporal.hpp"

#include <cmath>
#include <stdexcept>

#include "stvel/errors.hpp"

namespace stvel {

int TemporalBasisSpec::basis_count() const {
  return (include_intercept ? 1 : 0) + (day_of_week ? 7 : 0) +
         2 * fourier_order + poly_degree;
}

void TemporalBasisSpec::validate() const {
  if (fourier_order < 0 || poly_degree < 0)
    throw std::invalid_argument("basis orders must be non-negative");
  if (fourier_order > 0 && !(omega > 0.0))
    throw std::invalid_argument("omega must be positive when fourier_order > 0");
  if (day_of_week && include_intercept)
    throw std::invalid_argument(
        "day-of-week indicators already span the constant; drop the intercept");
  if (day_of_week && (day0_weekday < 0 || day0_weekday > 6))
    throw std::invalid_argument("day0_weekday must be in 0..6");
  if (basis_count() < 1) throw std::invalid_argument("basis is empty");
}

namespace {

// row with polynomial terms (t/time_scale)^p; time_scale = 1 gives the
// public original-scale basis
std::vector<double> scaled_design_row(const TemporalBasisSpec& spec, double t,
                                      double time_scale) {
  std::vector<double> row;
  row.reserve(spec.basis_count());
  if (spec.include_intercept) row.push_back(1.0);
  if (spec.day_of_week) {
    const long day = static_cast<long>(std::floor(t));
    const int pos = static_cast<int>((((day + spec.day0_weekday) % 7) + 7) % 7);
    for (int d = 0; d < 7; ++d) row.push_back(d == pos ? 1.0 : 0.0);
  }
  for (int k = 1; k <= spec.fourier_order; ++k)
    row.push_back(std::cos(k * spec.omega * t));
  for (int k = 1; k <= spec.fourier_order; ++k)
    row.push_back(std::sin(k * spec.omega * t));
  double p = 1.0;
  const double ts = t / time_scale;
  for (int k = 1; k <= spec.poly_degree; ++k) {
    p *= ts;
    row.push_back(p);
  }
  return row;
}

double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) > 0.0) d += y(i) * std::log(y(i) / mu(i));
    d -= y(i) - mu(i);
  }
  return 2.0 * d;
}

}  // namespace

std::vector<double> design_row(const TemporalBasisSpec& spec, double t) {
  spec.validate();
  if (!std::isfinite(t)) throw std::invalid_argument("time must be finite");
  return scaled_design_row(spec, t, 1.0);
}

std::vector<std::string> design_names(const TemporalBasisSpec& spec) {
  std::vector<std::string> names;
  if (spec.include_intercept) names.push_back("intercept");
  if (spec.day_of_week) {
    static const char* kDays[7] = {"sun", "mon", "tue", "wed", "thu", "fri", "sat"};
    for (int d = 0; d < 7; ++d) names.push_back(std::string("dow_") + kDays[d]);
  }
  for (int k = 1; k <= spec.fourier_order; ++k)
    names.push_back("cos" + std::to_string(k));
  for (int k = 1; k <= spec.fourier_order; ++k)
    names.push_back("sin" + std::to_string(k));
  for (int k = 1; k <= spec.poly_degree; ++k)
    names.push_back("t^" + std::to_string(k));
  return names;
}

TemporalFit fit_temporal(std::span<const double> times,
                         std::span<const double> counts,
                         const TemporalBasisSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(times.size());
  const int q = spec.basis_count();
  if (counts.size() != times.size())
    throw std::invalid_argument("times and counts must have equal length");
  if (n < q) throw std::invalid_argument("need at least as many observations as basis functions");

  double time_scale = 1.0;
  for (double t : times) time_scale = std::max(time_scale, std::fabs(t));

  Eigen::MatrixXd x(n, q);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (counts[i] < 0.0 || counts[i] != std::floor(counts[i]))
      throw std::invalid_argument("counts must be non-negative integers");
    const auto row = scaled_design_row(spec, times[i], time_scale);
    for (int c = 0; c < q; ++c) x(i, c) = row[c];
    y(i) = counts[i];
  }

  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < q) {
      const auto names = design_names(spec);
      std::vector<std::string> bad;
      const auto perm = qr.colsPermutation().indices();
      for (Eigen::Index c = qr.rank(); c < q; ++c) bad.push_back(names[perm(c)]);
      throw CollinearityError("design matrix is rank deficient", bad);
    }
  }

  constexpr int kMaxIter = 100;
  constexpr double kTol = 1e-8;
  constexpr int kMaxHalvings = 30;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  // warm start on the mean count keeps the first exp() in range
  const double ybar = std::max(y.mean(), 1e-8);
  if (spec.include_intercept) beta(0) = std::log(ybar);
  else if (spec.day_of_week) beta.head(7).setConstant(std::log(ybar));

  const auto linpred = [&](const Eigen::VectorXd& b) {
    return (x * b).cwiseMin(40.0).cwiseMax(-40.0).array().exp().matrix().eval();
  };

  Eigen::VectorXd mu = linpred(beta);
  double dev = poisson_deviance(y, mu);
  double grad_norm = 0.0;
  int iter = 0;

  for (; iter < kMaxIter; ++iter) {
    const Eigen::VectorXd grad = x.transpose() * (y - mu);
    grad_norm = grad.norm();
    if (grad_norm <= kTol) break;

    const Eigen::MatrixXd h = x.transpose() * mu.asDiagonal() * x;
    const Eigen::VectorXd delta = h.ldlt().solve(grad);
    if (!delta.allFinite())
      throw ConditioningError("Newton system is singular", 0.0);

    double step = 1.0;
    bool accepted = false;
    for (int half = 0; half <= kMaxHalvings; ++half) {
      const Eigen::VectorXd cand = beta + step * delta;
      const Eigen::VectorXd mu_cand = linpred(cand);
      const double dev_cand = poisson_deviance(y, mu_cand);
      if (dev_cand <= dev + 1e-12) {
        beta = cand;
        mu = mu_cand;
        dev = dev_cand;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted)
      throw ConvergenceError("step halving failed to reduce the deviance", grad_norm);
  }
  if (grad_norm > kTol)
    throw ConvergenceError("Poisson fit did not converge", grad_norm);

  const Eigen::MatrixXd h = x.transpose() * mu.asDiagonal() * x;
  const Eigen::MatrixXd hinv =
      h.ldlt().solve(Eigen::MatrixXd::Identity(q, q));

  // undo the polynomial rescale: column p was (t/s)^p, so beta_p -> beta_p / s^p
  TemporalFit fit;
  fit.spec = spec;
  fit.coefficients = beta;
  fit.std_errors = hinv.diagonal().cwiseMax(0.0).cwiseSqrt();
  const int poly_start = q - spec.poly_degree;
  double s = 1.0;
  for (int p = 0; p < spec.poly_degree; ++p) {
    s *= time_scale;
    fit.coefficients(poly_start + p) /= s;
    fit.std_errors(poly_start + p) /= s;
  }
  fit.deviance = dev;
  fit.gradient_norm = grad_norm;
  fit.iterations = iter;
  fit.time_scale = time_scale;
  return fit;
}

double eval_mu(const TemporalFit& fit, double t) {
  const auto row = design_row(fit.spec, t);
  double eta = 0.0;
  for (std::size_t c = 0; c < row.size(); ++c) eta += row[c] * fit.coefficients(c);
  return std::exp(eta);
}

}  // namespace stvel
