#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace stvel {

/// Sentinel for masked or undefined cells. Any NaN counts as missing.
inline double missing() { return std::numeric_limits<double>::quiet_NaN(); }
inline bool is_missing(double v) { return std::isnan(v); }

struct Point2 {
  double x = 0.0, y = 0.0;
};

struct Window {
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  double area() const { return (xmax - xmin) * (ymax - ymin); }
  bool contains(double x, double y) const {
    return x >= xmin && x <= xmax && y >= ymin && y <= ymax;
  }
};

struct TimeSpan {
  double tmin = 0.0, tmax = 1.0;
  double length() const { return tmax - tmin; }
  bool contains(double t) const { return t >= tmin && t <= tmax; }
};

struct CellIndex {
  int i = 0, j = 0, n = 0;
};

/// Regular lattice over a rectangular window times a time interval.
///
/// Cell (i, j, n) covers [x0+i*dx, x0+(i+1)*dx) x [y0+j*dy, y0+(j+1)*dy) x
/// [t0+n*dt, t0+(n+1)*dt); the outermost upper edges are closed so boundary
/// points are never dropped. Flattened storage order is row-major in
/// (i, j, n): index = (i*ny + j)*nt + n. This order is part of the public
/// contract for every exported field.
class SpatioTemporalGrid {
 public:
  SpatioTemporalGrid(double x0, double y0, double t0, int nx, int ny, int nt,
                     double dx, double dy, double dt,
                     std::vector<std::uint8_t> mask = {});

  double x0() const { return x0_; }
  double y0() const { return y0_; }
  double t0() const { return t0_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nt() const { return nt_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  double dt() const { return dt_; }

  double x_max() const { return x0_ + nx_ * dx_; }
  double y_max() const { return y0_ + ny_ * dy_; }
  double t_max() const { return t0_ + nt_ * dt_; }

  std::size_t n_spatial() const { return static_cast<std::size_t>(nx_) * ny_; }
  std::size_t n_cells() const { return n_spatial() * nt_; }
  double cell_area() const { return dx_ * dy_; }
  double cell_volume() const { return dx_ * dy_ * dt_; }

  std::size_t spatial_index(int i, int j) const {
    return static_cast<std::size_t>(i) * ny_ + j;
  }
  std::size_t index(int i, int j, int n) const {
    return spatial_index(i, j) * nt_ + n;
  }

  double center_x(int i) const { return x0_ + (i + 0.5) * dx_; }
  double center_y(int j) const { return y0_ + (j + 0.5) * dy_; }
  double center_t(int n) const { return t0_ + (n + 0.5) * dt_; }

  bool masked(int i, int j) const { return mask_[spatial_index(i, j)] == 0; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  Window window() const { return {x0_, x_max(), y0_, y_max()}; }
  TimeSpan tspan() const { return {t0_, t_max()}; }

  /// Cell containing (x, y, t) under the half-open rule, or nullopt when the
  /// point lies outside the grid extent.
  std::optional<CellIndex> locate(double x, double y, double t) const;

 private:
  double x0_, y0_, t0_;
  int nx_, ny_, nt_;
  double dx_, dy_, dt_;
  std::vector<std::uint8_t> mask_;
};

struct Event {
  double x = 0.0, y = 0.0, t = 0.0;
};

/// Observed events with their observation window and time range.
/// Every event must lie inside window x tspan; an empty pattern is valid.
class PointPattern {
 public:
  PointPattern(std::vector<Event> events, Window window, TimeSpan tspan);

  const std::vector<Event>& events() const { return events_; }
  const Window& window() const { return window_; }
  const TimeSpan& tspan() const { return tspan_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

 private:
  std::vector<Event> events_;
  Window window_;
  TimeSpan tspan_;
};

/// One real value per grid cell, missing on masked/undefined cells.
class ScalarField {
 public:
  /// All cells initialized to `fill` (may be missing()).
  explicit ScalarField(SpatioTemporalGrid grid, double fill = 0.0);
  ScalarField(SpatioTemporalGrid grid, std::vector<double> values);

  const SpatioTemporalGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double at(int i, int j, int n) const { return values_[grid_.index(i, j, n)]; }
  void set(int i, int j, int n, double v) { values_[grid_.index(i, j, n)] = v; }

  /// Throws if any non-missing value is not finite.
  void check_finite() const;

 private:
  SpatioTemporalGrid grid_;
  std::vector<double> values_;
};

/// A single spatial layer (one time slice): values indexed i*ny + j.
struct SpatialSlice {
  int nx = 0, ny = 0;
  double x0 = 0.0, y0 = 0.0, dx = 1.0, dy = 1.0;
  std::vector<double> values;

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * ny + j]; }
  void set(int i, int j, double v) { values[static_cast<std::size_t>(i) * ny + j] = v; }

  static SpatialSlice like(const SpatioTemporalGrid& g, double fill);
};

/// Per-cell velocity: non-negative magnitude plus unit direction.
/// Cells with undefined velocity carry missing magnitude; a defined cell with
/// zero time derivative has magnitude 0 and the zero direction vector.
class VectorField {
 public:
  explicit VectorField(SpatioTemporalGrid grid);

  const SpatioTemporalGrid& grid() const { return grid_; }

  double magnitude(int i, int j, int n) const { return mag_[grid_.index(i, j, n)]; }
  double vx(int i, int j, int n) const { return vx_[grid_.index(i, j, n)]; }
  double vy(int i, int j, int n) const { return vy_[grid_.index(i, j, n)]; }
  bool defined(int i, int j, int n) const { return !is_missing(magnitude(i, j, n)); }

  void set(int i, int j, int n, double mag, double dirx, double diry);
  void set_missing(int i, int j, int n);

  const std::vector<double>& magnitudes() const { return mag_; }
  const std::vector<double>& vxs() const { return vx_; }
  const std::vector<double>& vys() const { return vy_; }

 private:
  SpatioTemporalGrid grid_;
  std::vector<double> mag_, vx_, vy_;
};

/// Event counts per cell in storage order. Events outside the grid extent are
/// ignored; a grid that does not intersect the pattern window at all raises
/// DomainMismatchError.
std::vector<std::int64_t> bin_counts(const PointPattern& pattern,
                                     const SpatioTemporalGrid& grid);

/// Cell centers in storage order (i outer, then j, then n).
std::vector<Event> cell_centers(const SpatioTemporalGrid& grid);

}  // namespace stvel
