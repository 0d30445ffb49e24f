#pragma once

#include <Eigen/Dense>

#include "stvel/grid.hpp"

namespace stvel {

/// Parameters of the separable space-time covariance
/// sigma2 * rho1(h1; kappa, nu) * rho2(h2; a).
struct CovarianceSpec {
  double sigma2;  ///< marginal scale, > 0
  double kappa;   ///< spatial inverse range, > 0
  double nu;      ///< Matern smoothness
  double a;       ///< temporal AR coefficient, |a| < 1

  /// nu >= 3/2 is enforced by default so the latent field stays
  /// differentiable; pass allow_small_nu to lift that check.
  CovarianceSpec(double sigma2, double kappa, double nu, double a,
                 bool allow_small_nu = false);
};

namespace detail {
/// Modified Bessel function of the second kind K_nu(x), x > 0, nu >= 0.
/// Temme series for x <= 2, continued fraction above, then upward recurrence.
double bessel_k(double nu, double x);
}  // namespace detail

/// Matern correlation (kappa*h)^nu K_nu(kappa*h) / (2^(nu-1) Gamma(nu)).
/// Equals 1 at h1 = 0 by the limiting value.
double matern_rho1(double h1, double kappa, double nu);

/// Temporal AR factor a^h2 / (1 - a^2), kept verbatim: rho2(0) != 1.
/// Non-integer lags require a > 0.
double ar1_rho2(double h2, double a);

/// Normalized variant rho2(h2)/rho2(0) = a^h2; unit value at lag zero.
double ar1_corr(double h2, double a);

/// Full covariance sigma2 * rho1(h1) * rho2(h2).
double cov(const CovarianceSpec& spec, double h1, double h2);

/// Lattice covariance factors. The Kronecker product temporal (x) spatial
/// reproduces cov(spec, h1, h2) over all cell pairs ordered time-major
/// (pair index p = n * nx*ny + (i*ny + j)).
///
/// spatial  : (nx*ny)^2, sigma2 * rho1 at Euclidean center distances
/// temporal : nt^2, verbatim rho2 at integer lags |n1-n2| by default,
///            or the normalized a^|n1-n2| when normalized_temporal is set
///            (the form the fitter uses so sigma2 stays the marginal
///            variance).
struct CovMatrices {
  Eigen::MatrixXd spatial;
  Eigen::MatrixXd temporal;
};
CovMatrices cov_matrices(const CovarianceSpec& spec,
                         const SpatioTemporalGrid& grid,
                         bool normalized_temporal = false);

/// Cholesky factor with escalating diagonal jitter: starts at 1e-10 of the
/// matrix's largest diagonal entry, escalates tenfold up to 1e-6, then fails
/// with ConditioningError reporting the smallest eigenvalue.
struct JitteredCholesky {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};
JitteredCholesky chol_with_jitter(const Eigen::MatrixXd& m);

}  // namespace stvel
