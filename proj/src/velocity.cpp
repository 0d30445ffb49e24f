#include "stvel/velocity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stvel {

namespace {

double cell_value(const ScalarField& f, int i, int j, int n) {
  if (f.grid().masked(i, j)) return missing();
  return f.at(i, j, n);
}

// Forward/backward difference pair along one axis; missing components stay
// missing under Mask, fall back to the opposite side under OneSided.
void diff_pair(double lo, double mid, double hi, double step,
               BoundaryPolicy policy, double& dminus, double& dplus) {
  dplus = is_missing(hi) || is_missing(mid) ? missing() : (hi - mid) / step;
  dminus = is_missing(lo) || is_missing(mid) ? missing() : (mid - lo) / step;
  if (policy == BoundaryPolicy::OneSided) {
    if (is_missing(dplus) && !is_missing(dminus)) dplus = dminus;
    if (is_missing(dminus) && !is_missing(dplus)) dminus = dplus;
  }
}

struct CellDiffs {
  double dpx = 0, dmx = 0, dpy = 0, dmy = 0;
  bool ok = false;
};

CellDiffs spatial_diffs(const ScalarField& f, int i, int j, int n,
                        BoundaryPolicy policy) {
  CellDiffs d;
  const auto& g = f.grid();
  const double mid = cell_value(f, i, j, n);
  if (is_missing(mid)) return d;
  const double xl = i > 0 ? cell_value(f, i - 1, j, n) : missing();
  const double xh = i + 1 < g.nx() ? cell_value(f, i + 1, j, n) : missing();
  const double yl = j > 0 ? cell_value(f, i, j - 1, n) : missing();
  const double yh = j + 1 < g.ny() ? cell_value(f, i, j + 1, n) : missing();
  diff_pair(xl, mid, xh, g.dx(), policy, d.dmx, d.dpx);
  diff_pair(yl, mid, yh, g.dy(), policy, d.dmy, d.dpy);
  d.ok = !is_missing(d.dmx) && !is_missing(d.dpx) && !is_missing(d.dmy) &&
         !is_missing(d.dpy);
  return d;
}

double averaged_gradient_norm(const CellDiffs& d) {
  return 0.25 * (std::hypot(d.dpx, d.dpy) + std::hypot(d.dpx, d.dmy) +
                 std::hypot(d.dmx, d.dpy) + std::hypot(d.dmx, d.dmy));
}

double slice_time_derivative(const ScalarField& f, int i, int j, int n,
                             const VelocityOptions& opt) {
  const auto& g = f.grid();
  if (n >= 1 && n + 1 < g.nt()) {
    const double lo = cell_value(f, i, j, n - 1);
    const double hi = cell_value(f, i, j, n + 1);
    if (is_missing(lo) || is_missing(hi)) return missing();
    return (hi - lo) / (2.0 * g.dt());
  }
  if (n == g.nt() - 1 && opt.time_scheme == TimeScheme::SymmetricWithEndpoint) {
    const double lo = cell_value(f, i, j, n - 1);
    const double mid = cell_value(f, i, j, n);
    if (is_missing(lo) || is_missing(mid)) return missing();
    return (mid - lo) / g.dt();
  }
  return missing();
}

void check_time_index(const ScalarField& f, int n, const VelocityOptions& opt) {
  const int nt = f.grid().nt();
  const bool symmetric_ok = n >= 1 && n + 1 < nt;
  const bool endpoint_ok = opt.time_scheme == TimeScheme::SymmetricWithEndpoint &&
                           n == nt - 1;
  if (!symmetric_ok && !endpoint_ok)
    throw std::out_of_range("time index " + std::to_string(n) +
                            " unsupported by the chosen difference scheme");
}

// Largest non-missing |value| on unmasked cells; 0 for an all-missing field.
double field_scale(const ScalarField& f) {
  const auto& g = f.grid();
  double m = 0.0;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      if (g.masked(i, j)) continue;
      for (int n = 0; n < g.nt(); ++n) {
        const double v = f.at(i, j, n);
        if (!is_missing(v)) m = std::max(m, std::fabs(v));
      }
    }
  return m;
}

ScalarField normalized_copy(const ScalarField& f, double scale) {
  ScalarField out = f;
  if (scale > 0.0)
    for (double& v : out.values()) v /= scale;
  return out;
}

bool on_boundary(const SpatioTemporalGrid& g, int i, int j) {
  return i == 0 || j == 0 || i == g.nx() - 1 || j == g.ny() - 1;
}

}  // namespace

SpatialSlice time_derivative(const ScalarField& field, int n,
                             const VelocityOptions& options) {
  check_time_index(field, n, options);
  const auto& g = field.grid();
  SpatialSlice out = SpatialSlice::like(g, missing());
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j)
      out.set(i, j, slice_time_derivative(field, i, j, n, options));
  return out;
}

SpatialSlice gradient_norm(const ScalarField& field, int n,
                           const VelocityOptions& options) {
  const auto& g = field.grid();
  if (n < 0 || n >= g.nt()) throw std::out_of_range("time index out of range");
  SpatialSlice out = SpatialSlice::like(g, missing());
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      if (options.boundary == BoundaryPolicy::Mask && on_boundary(g, i, j)) continue;
      const CellDiffs d = spatial_diffs(field, i, j, n, options.boundary);
      if (d.ok) out.set(i, j, averaged_gradient_norm(d));
    }
  return out;
}

VectorField min_velocity(const ScalarField& field, const VelocityOptions& options) {
  const auto& g = field.grid();
  const double scale = field_scale(field);
  const ScalarField u = normalized_copy(field, scale);
  VectorField out(g);

  for (int n = 0; n < g.nt(); ++n) {
    // slice-level gradient floor: relative to the largest averaged norm
    double max_gn = 0.0;
    std::vector<double> gn(g.n_spatial(), missing());
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < g.ny(); ++j) {
        if (options.boundary == BoundaryPolicy::Mask && on_boundary(g, i, j)) continue;
        const CellDiffs d = spatial_diffs(u, i, j, n, options.boundary);
        if (!d.ok) continue;
        const double v = averaged_gradient_norm(d);
        gn[g.spatial_index(i, j)] = v;
        max_gn = std::max(max_gn, v);
      }

    const double floor = options.gradient_floor * max_gn;
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < g.ny(); ++j) {
        const double denom = gn[g.spatial_index(i, j)];
        if (is_missing(denom) || denom == 0.0 || denom < floor) continue;
        const double td = slice_time_derivative(u, i, j, n, options);
        if (is_missing(td)) continue;

        // direction needs the gradient vector itself: centered differences
        const CellDiffs d = spatial_diffs(u, i, j, n, options.boundary);
        const double cgx = 0.5 * (d.dpx + d.dmx);
        const double cgy = 0.5 * (d.dpy + d.dmy);
        const double cnorm = std::hypot(cgx, cgy);

        if (td == 0.0) {
          out.set(i, j, n, 0.0, 0.0, 0.0);
          continue;
        }
        if (cnorm == 0.0) continue;
        const double s = td > 0.0 ? 1.0 : -1.0;
        out.set(i, j, n, std::fabs(td) / denom, s * cgx / cnorm, s * cgy / cnorm);
      }
  }
  return out;
}

ScalarField directional_velocity(const ScalarField& field, double vx, double vy,
                                 const VelocityOptions& options) {
  const double norm = std::hypot(vx, vy);
  if (std::fabs(norm - 1.0) > 1e-9)
    throw std::invalid_argument("direction must be a unit vector");

  const auto& g = field.grid();
  const double scale = field_scale(field);
  const ScalarField u = normalized_copy(field, scale);
  ScalarField out(g, missing());

  for (int n = 0; n < g.nt(); ++n) {
    double max_denom = 0.0;
    std::vector<double> denom(g.n_spatial(), missing());
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < g.ny(); ++j) {
        if (options.boundary == BoundaryPolicy::Mask && on_boundary(g, i, j)) continue;
        const CellDiffs d = spatial_diffs(u, i, j, n, options.boundary);
        if (!d.ok) continue;
        const double cgx = 0.5 * (d.dpx + d.dmx);
        const double cgy = 0.5 * (d.dpy + d.dmy);
        const double v = std::fabs(vx * cgx + vy * cgy);
        denom[g.spatial_index(i, j)] = v;
        max_denom = std::max(max_denom, v);
      }

    const double floor = options.gradient_floor * max_denom;
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < g.ny(); ++j) {
        const double dv = denom[g.spatial_index(i, j)];
        if (is_missing(dv) || dv == 0.0 || dv < floor) continue;
        const double td = slice_time_derivative(u, i, j, n, options);
        if (is_missing(td)) continue;
        out.set(i, j, n, std::fabs(td) / dv);
      }
  }
  return out;
}

}  // namespace stvel
