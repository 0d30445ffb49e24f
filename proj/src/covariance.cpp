#include "stvel/covariance.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "stvel/errors.hpp"

namespace stvel {

CovarianceSpec::CovarianceSpec(double sigma2_, double kappa_, double nu_,
                               double a_, bool allow_small_nu)
    : sigma2(sigma2_), kappa(kappa_), nu(nu_), a(a_) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  if (!(std::fabs(a) < 1.0)) throw std::invalid_argument("|a| must be below 1");
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  if (nu < 1.5 && !allow_small_nu)
    throw std::invalid_argument(
        "nu below 3/2 breaks field differentiability; pass allow_small_nu to override");
}

namespace detail {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 10000;

// K_mu and K_{mu+1} for |mu| <= 1/2, 0 < x <= 2 (Temme's series).
void bessel_k_small(double mu, double x, double& kmu, double& kmu1) {
  const double x2 = 0.5 * x;
  const double pimu = std::numbers::pi * mu;
  const double fact = std::fabs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
  double d = -std::log(x2);
  double e = mu * d;
  const double fact2 = std::fabs(e) < kEps ? 1.0 : std::sinh(e) / e;

  const double gampl = 1.0 / std::tgamma(1.0 + mu);
  const double gammi = 1.0 / std::tgamma(1.0 - mu);
  // (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu), continuous at mu = 0 where it
  // equals -EulerGamma.
  const double gam1 = std::fabs(mu) < 1e-8
                          ? -std::numbers::egamma
                          : (gammi - gampl) / (2.0 * mu);
  const double gam2 = 0.5 * (gammi + gampl);

  double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
  double sum = ff;
  e = std::exp(e);
  double p = 0.5 * e / gampl;
  double q = 0.5 / (e * gammi);
  double c = 1.0;
  d = x2 * x2;
  double sum1 = p;
  for (int i = 1; i <= kMaxIter; ++i) {
    ff = (i * ff + p + q) / (i * i - mu * mu);
    c *= d / i;
    p /= (i - mu);
    q /= (i + mu);
    const double del = c * ff;
    sum += del;
    sum1 += c * (p - i * ff);
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  kmu = sum;
  kmu1 = sum1 * 2.0 / x;
}

// K_mu and K_{mu+1} for |mu| <= 1/2, x > 2 (Steed/Thompson-Barnett CF2).
void bessel_k_large(double mu, double x, double& kmu, double& kmu1) {
  const double mu2 = mu * mu;
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d, delh = d;
  double q1 = 0.0, q2 = 1.0;
  const double a1 = 0.25 - mu2;
  double q = a1, c = a1, a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= kMaxIter; ++i) {
    a -= 2.0 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::fabs(dels / s) < kEps) break;
  }
  h = a1 * h;
  kmu = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
  kmu1 = kmu * (mu + x + 0.5 - h) / x;
}

}  // namespace

double bessel_k(double nu, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("bessel_k requires x > 0");
  nu = std::fabs(nu);  // K_{-nu} = K_nu
  const int nl = static_cast<int>(nu + 0.5);
  const double mu = nu - nl;  // |mu| <= 1/2

  double kmu, kmu1;
  if (x <= 2.0)
    bessel_k_small(mu, x, kmu, kmu1);
  else
    bessel_k_large(mu, x, kmu, kmu1);

  double klo = kmu, khi = kmu1;
  for (int i = 0; i < nl; ++i) {
    const double knext = klo + 2.0 * (mu + i + 1.0) / x * khi;
    klo = khi;
    khi = knext;
  }
  return nl == 0 ? kmu : klo;
}

}  // namespace detail

double matern_rho1(double h1, double kappa, double nu) {
  if (h1 < 0.0) throw std::invalid_argument("spatial lag must be non-negative");
  if (h1 == 0.0) return 1.0;
  const double z = kappa * h1;
  // log-space scaling avoids overflow of Gamma and underflow of K for the
  // lags a lattice produces
  const double logc = (nu - 1.0) * std::numbers::ln2 + std::lgamma(nu);
  const double k = detail::bessel_k(nu, z);
  if (k == 0.0) return 0.0;
  return std::exp(nu * std::log(z) + std::log(k) - logc);
}

double ar1_rho2(double h2, double a) {
  if (h2 < 0.0) throw std::invalid_argument("temporal lag must be non-negative");
  return ar1_corr(h2, a) / (1.0 - a * a);
}

double ar1_corr(double h2, double a) {
  if (h2 < 0.0) throw std::invalid_argument("temporal lag must be non-negative");
  const bool integer_lag = h2 == std::floor(h2);
  if (a <= 0.0 && !integer_lag)
    throw std::invalid_argument("a^h2 with a <= 0 needs an integer lag");
  if (a == 0.0) return h2 == 0.0 ? 1.0 : 0.0;
  if (integer_lag && h2 < 1e9) {
    double r = 1.0;
    for (long k = 0; k < static_cast<long>(h2); ++k) r *= a;
    return r;
  }
  return std::exp(h2 * std::log(a));
}

double cov(const CovarianceSpec& spec, double h1, double h2) {
  return spec.sigma2 * matern_rho1(h1, spec.kappa, spec.nu) * ar1_rho2(h2, spec.a);
}

CovMatrices cov_matrices(const CovarianceSpec& spec,
                         const SpatioTemporalGrid& grid,
                         bool normalized_temporal) {
  const int nx = grid.nx(), ny = grid.ny(), nt = grid.nt();
  const auto ns = static_cast<Eigen::Index>(grid.n_spatial());

  CovMatrices out;
  out.spatial.resize(ns, ns);
  for (int i1 = 0; i1 < nx; ++i1)
    for (int j1 = 0; j1 < ny; ++j1) {
      const auto p = static_cast<Eigen::Index>(grid.spatial_index(i1, j1));
      for (int i2 = 0; i2 < nx; ++i2)
        for (int j2 = 0; j2 < ny; ++j2) {
          const auto q = static_cast<Eigen::Index>(grid.spatial_index(i2, j2));
          if (q > p) continue;
          const double hx = grid.center_x(i1) - grid.center_x(i2);
          const double hy = grid.center_y(j1) - grid.center_y(j2);
          const double h1 = std::hypot(hx, hy);
          const double v = spec.sigma2 * matern_rho1(h1, spec.kappa, spec.nu);
          out.spatial(p, q) = v;
          out.spatial(q, p) = v;
        }
    }

  out.temporal.resize(nt, nt);
  for (int n1 = 0; n1 < nt; ++n1)
    for (int n2 = 0; n2 <= n1; ++n2) {
      const double h2 = n1 - n2;
      const double v =
          normalized_temporal ? ar1_corr(h2, spec.a) : ar1_rho2(h2, spec.a);
      out.temporal(n1, n2) = v;
      out.temporal(n2, n1) = v;
    }
  return out;
}

JitteredCholesky chol_with_jitter(const Eigen::MatrixXd& m) {
  const double scale = m.diagonal().maxCoeff();
  for (double rel = 1e-10; rel <= 1e-6 * 1.0001; rel *= 10.0) {
    const double jitter = rel * scale;
    Eigen::MatrixXd trial = m;
    trial.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(trial);
    if (llt.info() == Eigen::Success)
      return {Eigen::MatrixXd(llt.matrixL()), jitter};
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  throw ConditioningError("matrix not positive definite at maximum jitter",
                          es.eigenvalues().minCoeff());
}

}  // namespace stvel
