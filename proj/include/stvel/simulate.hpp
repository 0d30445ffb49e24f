#pragma once

#include <functional>

#include "stvel/covariance.hpp"
#include "stvel/grid.hpp"
#include "stvel/rng.hpp"

namespace stvel {

using IntensityFn = std::function<double(double x, double y, double t)>;

/// Inhomogeneous Poisson sampling by thinning: Poisson(lambda_max * volume)
/// uniform candidates, each kept with probability lambda/lambda_max.
/// The caller guarantees lambda <= lambda_max; any evaluated violation raises
/// BoundViolationError, a negative intensity std::invalid_argument.
PointPattern sample_poisson(const IntensityFn& intensity, const Window& window,
                            const TimeSpan& tspan, double lambda_max, Seed seed);

/// Dominating-bound helper: grids the intensity at four times the given
/// per-axis resolution and inflates the observed maximum by 10%.
double suggest_lambda_max(const IntensityFn& intensity, const Window& window,
                          const TimeSpan& tspan, int n_cells_per_axis);

/// Draw of the latent Gaussian field with mean `beta` on the grid cells.
/// Sampling uses the Kronecker structure: spatial and temporal Cholesky
/// factors applied to one standard-normal matrix, which equals a draw from
/// the full temporal (x) spatial covariance. Desk-scale only: nx*ny <= 4096.
ScalarField sample_gaussian_field(const CovarianceSpec& spec,
                                  const SpatioTemporalGrid& grid, double beta,
                                  Seed seed);

/// LGCP draw: latent field zeta, then a Poisson pattern against the
/// piecewise-constant intensity eta * mu * exp(zeta) evaluated at cell
/// centers. Missing eta cells contribute zero intensity.
PointPattern sample_lgcp(const std::function<double(double, double)>& eta,
                         const std::function<double(double)>& mu,
                         const CovarianceSpec& spec,
                         const SpatioTemporalGrid& grid, double beta, Seed seed);

/// Overload taking a precomputed spatial offset field (time index 0 is used).
PointPattern sample_lgcp(const ScalarField& eta,
                         const std::function<double(double)>& mu,
                         const CovarianceSpec& spec,
                         const SpatioTemporalGrid& grid, double beta, Seed seed);

}  // namespace stvel
