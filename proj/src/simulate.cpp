#include "stvel/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "stvel/errors.hpp"

namespace stvel {

PointPattern sample_poisson(const IntensityFn& intensity, const Window& window,
                            const TimeSpan& tspan, double lambda_max, Seed seed) {
  if (lambda_max < 0.0 || !std::isfinite(lambda_max))
    throw std::invalid_argument("lambda_max must be finite and non-negative");
  const double volume = window.area() * tspan.length();
  if (volume <= 0.0) throw std::invalid_argument("empty sampling domain");

  CounterRng rng(seed, CounterRng::kThinningStream);
  std::vector<Event> kept;
  const std::int64_t n = rng.next_poisson(lambda_max * volume);
  kept.reserve(static_cast<std::size_t>(n / 2 + 1));
  for (std::int64_t k = 0; k < n; ++k) {
    const double x = window.xmin + rng.next_double() * (window.xmax - window.xmin);
    const double y = window.ymin + rng.next_double() * (window.ymax - window.ymin);
    const double t = tspan.tmin + rng.next_double() * (tspan.tmax - tspan.tmin);
    const double u = rng.next_double();
    const double lam = intensity(x, y, t);
    if (lam < 0.0 || !std::isfinite(lam))
      throw std::invalid_argument("intensity must be finite and non-negative");
    if (lam > lambda_max)
      throw BoundViolationError("intensity exceeds the dominating bound", lam,
                                lambda_max);
    if (u * lambda_max < lam) kept.push_back({x, y, t});
  }
  return PointPattern(std::move(kept), window, tspan);
}

double suggest_lambda_max(const IntensityFn& intensity, const Window& window,
                          const TimeSpan& tspan, int n_cells_per_axis) {
  const int n = 4 * n_cells_per_axis;
  const double hx = (window.xmax - window.xmin) / n;
  const double hy = (window.ymax - window.ymin) / n;
  const double ht = (tspan.tmax - tspan.tmin) / n;
  double best = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double v = intensity(window.xmin + (i + 0.5) * hx,
                                   window.ymin + (j + 0.5) * hy,
                                   tspan.tmin + (k + 0.5) * ht);
        if (v > best) best = v;
      }
  return 1.1 * best;
}

ScalarField sample_gaussian_field(const CovarianceSpec& spec,
                                  const SpatioTemporalGrid& grid, double beta,
                                  Seed seed) {
  if (grid.n_spatial() > 4096)
    throw std::invalid_argument("field sampling is desk-scale: nx*ny <= 4096");

  const CovMatrices cm = cov_matrices(spec, grid);
  const Eigen::MatrixXd ls = chol_with_jitter(cm.spatial).lower;
  const Eigen::MatrixXd lt = chol_with_jitter(cm.temporal).lower;

  const auto ns = static_cast<Eigen::Index>(grid.n_spatial());
  const Eigen::Index nt = grid.nt();

  // z drawn in time-major pair order (p = n*ns + s) to match the Kronecker
  // covariance layout; vec(ls * Z * lt^T) in that order has covariance
  // temporal (x) spatial.
  CounterRng rng(seed, CounterRng::kFieldStream);
  Eigen::MatrixXd z(ns, nt);
  for (Eigen::Index n = 0; n < nt; ++n)
    for (Eigen::Index s = 0; s < ns; ++s) z(s, n) = rng.next_normal();

  const Eigen::MatrixXd f = ls * z * lt.transpose();

  ScalarField out(grid, 0.0);
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j) {
      const auto s = static_cast<Eigen::Index>(grid.spatial_index(i, j));
      for (int n = 0; n < grid.nt(); ++n)
        out.set(i, j, n, beta + f(s, n));
    }
  return out;
}

namespace {

PointPattern sample_lgcp_impl(const std::function<double(int, int)>& eta_cell,
                              const std::function<double(double)>& mu,
                              const CovarianceSpec& spec,
                              const SpatioTemporalGrid& grid, double beta,
                              Seed seed) {
  const ScalarField zeta = sample_gaussian_field(spec, grid, beta, seed);

  ScalarField lam(grid, 0.0);
  double lam_max = 0.0;
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j) {
      const double e = eta_cell(i, j);
      if (is_missing(e)) continue;
      if (e < 0.0) throw std::invalid_argument("eta must be non-negative");
      for (int n = 0; n < grid.nt(); ++n) {
        const double m = mu(grid.center_t(n));
        if (m < 0.0) throw std::invalid_argument("mu must be non-negative");
        const double v = e * m * std::exp(zeta.at(i, j, n));
        if (!std::isfinite(v))
          throw std::invalid_argument("LGCP intensity overflowed; rescale the inputs");
        lam.set(i, j, n, v);
        if (v > lam_max) lam_max = v;
      }
    }

  const auto cell_intensity = [&](double x, double y, double t) {
    const auto c = grid.locate(x, y, t);
    return c ? lam.at(c->i, c->j, c->n) : 0.0;
  };
  return sample_poisson(cell_intensity, grid.window(), grid.tspan(), lam_max, seed);
}

}  // namespace

PointPattern sample_lgcp(const std::function<double(double, double)>& eta,
                         const std::function<double(double)>& mu,
                         const CovarianceSpec& spec,
                         const SpatioTemporalGrid& grid, double beta, Seed seed) {
  return sample_lgcp_impl(
      [&](int i, int j) { return eta(grid.center_x(i), grid.center_y(j)); }, mu,
      spec, grid, beta, seed);
}

PointPattern sample_lgcp(const ScalarField& eta,
                         const std::function<double(double)>& mu,
                         const CovarianceSpec& spec,
                         const SpatioTemporalGrid& grid, double beta, Seed seed) {
  return sample_lgcp_impl([&](int i, int j) { return eta.at(i, j, 0); }, mu, spec,
                          grid, beta, seed);
}

}  // namespace stvel
