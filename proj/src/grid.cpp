#include "stvel/grid.hpp"

#include <algorithm>
#include <stdexcept>

#include "stvel/errors.hpp"

namespace stvel {

SpatioTemporalGrid::SpatioTemporalGrid(double x0, double y0, double t0, int nx,
                                       int ny, int nt, double dx, double dy,
                                       double dt, std::vector<std::uint8_t> mask)
    : x0_(x0), y0_(y0), t0_(t0), nx_(nx), ny_(ny), nt_(nt), dx_(dx), dy_(dy),
      dt_(dt), mask_(std::move(mask)) {
  if (nx_ < 3 || ny_ < 3 || nt_ < 3)
    throw std::invalid_argument("grid needs nx, ny, nt >= 3 for finite differences");
  if (!(dx_ > 0.0) || !(dy_ > 0.0) || !(dt_ > 0.0))
    throw std::invalid_argument("grid steps dx, dy, dt must be positive");
  if (mask_.empty())
    mask_.assign(n_spatial(), 1);
  else if (mask_.size() != n_spatial())
    throw std::invalid_argument("mask must have exactly nx*ny entries");
}

namespace {

// Half-open binning consistent with direct interval membership: after the
// floor estimate, nudge until edge <= v < edge+step holds; the topmost cell
// keeps its upper edge.
int locate_axis(double v, double origin, double step, int count) {
  const double upper = origin + count * step;
  if (v < origin || v > upper) return -1;
  if (v == upper) return count - 1;
  int k = static_cast<int>(std::floor((v - origin) / step));
  k = std::clamp(k, 0, count - 1);
  while (k > 0 && v < origin + k * step) --k;
  while (k < count - 1 && v >= origin + (k + 1) * step) ++k;
  return k;
}

}  // namespace

std::optional<CellIndex> SpatioTemporalGrid::locate(double x, double y,
                                                    double t) const {
  const int i = locate_axis(x, x0_, dx_, nx_);
  const int j = locate_axis(y, y0_, dy_, ny_);
  const int n = locate_axis(t, t0_, dt_, nt_);
  if (i < 0 || j < 0 || n < 0) return std::nullopt;
  return CellIndex{i, j, n};
}

PointPattern::PointPattern(std::vector<Event> events, Window window,
                           TimeSpan tspan)
    : events_(std::move(events)), window_(window), tspan_(tspan) {
  if (!(window_.xmax > window_.xmin) || !(window_.ymax > window_.ymin))
    throw std::invalid_argument("point pattern window is empty");
  if (!(tspan_.tmax > tspan_.tmin))
    throw std::invalid_argument("point pattern time span is empty");
  for (const Event& e : events_) {
    if (!window_.contains(e.x, e.y) || !tspan_.contains(e.t))
      throw std::invalid_argument("event outside the observation window/time span");
  }
}

ScalarField::ScalarField(SpatioTemporalGrid grid, double fill)
    : grid_(std::move(grid)), values_(grid_.n_cells(), fill) {}

ScalarField::ScalarField(SpatioTemporalGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.n_cells())
    throw std::invalid_argument("field values must have exactly nx*ny*nt entries");
}

void ScalarField::check_finite() const {
  for (double v : values_) {
    if (!is_missing(v) && !std::isfinite(v))
      throw std::invalid_argument("field holds a non-finite, non-missing value");
  }
}

SpatialSlice SpatialSlice::like(const SpatioTemporalGrid& g, double fill) {
  SpatialSlice s;
  s.nx = g.nx();
  s.ny = g.ny();
  s.x0 = g.x0();
  s.y0 = g.y0();
  s.dx = g.dx();
  s.dy = g.dy();
  s.values.assign(g.n_spatial(), fill);
  return s;
}

VectorField::VectorField(SpatioTemporalGrid grid)
    : grid_(std::move(grid)),
      mag_(grid_.n_cells(), missing()),
      vx_(grid_.n_cells(), missing()),
      vy_(grid_.n_cells(), missing()) {}

void VectorField::set(int i, int j, int n, double mag, double dirx, double diry) {
  const std::size_t k = grid_.index(i, j, n);
  mag_[k] = mag;
  vx_[k] = dirx;
  vy_[k] = diry;
}

void VectorField::set_missing(int i, int j, int n) {
  const std::size_t k = grid_.index(i, j, n);
  mag_[k] = missing();
  vx_[k] = missing();
  vy_[k] = missing();
}

std::vector<std::int64_t> bin_counts(const PointPattern& pattern,
                                     const SpatioTemporalGrid& grid) {
  const Window& w = pattern.window();
  const TimeSpan& ts = pattern.tspan();
  const bool overlap = grid.x0() < w.xmax && grid.x_max() > w.xmin &&
                       grid.y0() < w.ymax && grid.y_max() > w.ymin &&
                       grid.t0() < ts.tmax && grid.t_max() > ts.tmin;
  if (!overlap)
    throw DomainMismatchError("grid extent does not intersect the pattern window");

  std::vector<std::int64_t> counts(grid.n_cells(), 0);
  for (const Event& e : pattern.events()) {
    if (auto c = grid.locate(e.x, e.y, e.t)) ++counts[grid.index(c->i, c->j, c->n)];
  }
  return counts;
}

std::vector<Event> cell_centers(const SpatioTemporalGrid& grid) {
  std::vector<Event> out;
  out.reserve(grid.n_cells());
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j)
      for (int n = 0; n < grid.nt(); ++n)
        out.push_back({grid.center_x(i), grid.center_y(j), grid.center_t(n)});
  return out;
}

}  // namespace stvel
