#pragma once

#include <optional>
#include <vector>

#include "stvel/covariance.hpp"
#include "stvel/grid.hpp"

namespace stvel {

struct FitConfig {
  CovarianceSpec spec;
  int max_iterations = 100;
  double tolerance = 1e-8;   ///< gradient-norm stopping rule
  double zeta_clamp = 30.0;  ///< |zeta| bound during iteration
};

/// Posterior mode and Laplace variances of the residual field.
/// zeta = beta + theta with theta ~ N(0, sigma2 * corr) on the active
/// (unmasked, positive-offset) cells; lambda_hat = offset * exp(zeta).
struct FitResult {
  SpatioTemporalGrid grid;
  CovarianceSpec spec;
  double beta = 0.0;
  std::vector<double> zeta;           ///< per cell, missing where inactive
  std::vector<double> zeta_variance;  ///< Var(beta + theta) per cell
  std::vector<double> offset;         ///< the offsets the fit used
  std::vector<double> loglik_trace;   ///< penalized objective per iteration
  double log_evidence = 0.0;          ///< Laplace-approximated marginal loglik
  double gradient_norm = 0.0;
  int iterations = 0;
  int clamp_hits = 0;
};

/// Maximize the penalized Poisson log-likelihood
///   sum_c [ y_c (log E_c + beta + theta_c) - E_c e^(beta + theta_c) ]
///   - theta' Q theta / 2,
/// Q the inverse of the normalized space-time correlation over sigma2, by
/// Newton's method with step halving. beta carries a flat prior and is
/// estimated jointly. Masked or missing-offset cells are excluded from both
/// the likelihood and the prior (the prior covariance is the submatrix over
/// active cells, i.e. the marginal field on the unmasked subgraph).
FitResult fit(const std::vector<std::int64_t>& counts, const ScalarField& offset,
              const FitConfig& config);

/// Discrete hyperparameter profiling: fits every candidate and returns the
/// one with the largest Laplace evidence (first listed wins ties).
struct ProfileResult {
  int best_index = 0;
  std::vector<double> evidence;               ///< NaN where a candidate failed
  std::vector<std::optional<FitResult>> fits; ///< nullopt for failed candidates
};
ProfileResult profile_hyperparameters(const std::vector<std::int64_t>& counts,
                                      const ScalarField& offset,
                                      const std::vector<CovarianceSpec>& candidates,
                                      const FitConfig& base);

/// lambda_hat = offset * exp(zeta_mode), or times exp(variance/2) extra for
/// the log-normal posterior mean.
ScalarField predict_intensity(const FitResult& result, bool lognormal_mean = false);

}  // namespace stvel
