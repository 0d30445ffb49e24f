#include "stvel/spatial.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "stvel/errors.hpp"

namespace stvel {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

double gaussian2(double dx, double dy) {
  return std::exp(-0.5 * (dx * dx + dy * dy)) / (2.0 * std::numbers::pi);
}

}  // namespace

Raster read_esri_ascii(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open raster file");

  Raster r;
  bool saw_ncols = false, saw_nrows = false, saw_xll = false, saw_yll = false,
       saw_cell = false;
  long line_no = 0;
  std::string line;

  // header: key/value lines until the first purely numeric row
  std::streampos row_start = in.tellg();
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) {  // blank line
      row_start = in.tellg();
      continue;
    }
    const std::string k = lower(key);
    double value;
    if (k == "ncols" || k == "nrows" || k == "xllcorner" || k == "yllcorner" ||
        k == "cellsize" || k == "nodata_value") {
      if (!(ls >> value)) throw ParseError(path, line_no, "bad header value for " + key);
      if (k == "ncols") { r.ncols = static_cast<int>(value); saw_ncols = true; }
      else if (k == "nrows") { r.nrows = static_cast<int>(value); saw_nrows = true; }
      else if (k == "xllcorner") { r.xll = value; saw_xll = true; }
      else if (k == "yllcorner") { r.yll = value; saw_yll = true; }
      else if (k == "cellsize") { r.cellsize = value; saw_cell = true; }
      else { r.nodata = value; r.has_nodata = true; }
      row_start = in.tellg();
    } else {
      break;  // first data row
    }
  }
  if (!saw_ncols || !saw_nrows || !saw_xll || !saw_yll || !saw_cell)
    throw ParseError(path, line_no, "incomplete ESRI ASCII header");
  if (r.ncols < 1 || r.nrows < 1 || !(r.cellsize > 0.0))
    throw ParseError(path, line_no, "invalid raster dimensions");

  in.clear();
  in.seekg(row_start);
  line_no -= 1;

  r.data.reserve(static_cast<std::size_t>(r.ncols) * r.nrows);
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0')
        throw ParseError(path, line_no, "non-numeric raster value '" + tok + "'");
      r.data.push_back(v);
    }
  }
  const auto expected = static_cast<std::size_t>(r.ncols) * r.nrows;
  if (r.data.size() != expected)
    throw ParseError(path, line_no,
                     "expected " + std::to_string(expected) + " values, got " +
                         std::to_string(r.data.size()));
  for (double v : r.data)
    if (!r.is_nodata(v) && v < 0.0)
      throw ParseError(path, line_no, "negative raster value");
  return r;
}

double kernel_density(std::span<const Point2> points, double h, Point2 query) {
  if (points.empty()) throw std::invalid_argument("kernel density needs at least one point");
  if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  double sum = 0.0;
  for (const Point2& p : points)
    sum += gaussian2((query.x - p.x) / h, (query.y - p.y) / h) / (h * h);
  return sum / static_cast<double>(points.size());
}

double adaptive_kernel_density(std::span<const Point2> points,
                               std::span<const double> h, Point2 query) {
  if (points.empty()) throw std::invalid_argument("kernel density needs at least one point");
  if (h.size() != points.size())
    throw std::invalid_argument("one bandwidth per point required");
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(h[i] > 0.0)) throw std::invalid_argument("bandwidths must be positive");
    sum += gaussian2((query.x - points[i].x) / h[i], (query.y - points[i].y) / h[i]) /
           (h[i] * h[i]);
  }
  return sum / static_cast<double>(points.size());
}

namespace {

// Raster centres use the lower-cell tie rule: a centre exactly on an
// interior edge belongs to the cell below it, so intervals are (lo, hi]
// with the first cell closed on both ends.
int locate_lower_wins(double v, double origin, double step, int count) {
  if (v < origin || v > origin + count * step) return -1;
  if (v == origin) return 0;
  int k = static_cast<int>(std::ceil((v - origin) / step)) - 1;
  k = std::clamp(k, 0, count - 1);
  while (k > 0 && v <= origin + k * step) --k;
  while (k < count - 1 && v > origin + (k + 1) * step) ++k;
  return k;
}

}  // namespace

RasterOffset raster_offset(const Raster& raster, const SpatioTemporalGrid& grid) {
  std::vector<double> sum(grid.n_spatial(), 0.0);
  std::vector<long> count(grid.n_spatial(), 0);
  long nodata_cells = 0;
  bool any = false;

  // assign each raster cell to the grid cell containing its center
  const SpatioTemporalGrid& g = grid;
  for (int row = 0; row < raster.nrows; ++row) {
    const double y = raster.center_y(row);
    const int j = locate_lower_wins(y, g.y0(), g.dy(), g.ny());
    if (j < 0) continue;
    for (int col = 0; col < raster.ncols; ++col) {
      const double x = raster.center_x(col);
      const int i = locate_lower_wins(x, g.x0(), g.dx(), g.nx());
      if (i < 0) continue;
      any = true;
      double v = raster.value(col, row);
      if (raster.is_nodata(v)) {
        v = 0.0;
        ++nodata_cells;
      }
      const std::size_t s = g.spatial_index(i, j);
      sum[s] += v;
      ++count[s];
    }
  }
  if (!any) throw CoverageError("raster does not overlap the grid extent");

  ScalarField offset(grid, missing());
  const double area = grid.cell_area();
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j) {
      const std::size_t s = grid.spatial_index(i, j);
      if (grid.masked(i, j) || count[s] == 0) continue;
      const double v = area * sum[s] / static_cast<double>(count[s]);
      for (int n = 0; n < grid.nt(); ++n) offset.set(i, j, n, v);
    }
  return {std::move(offset), nodata_cells};
}

}  // namespace stvel
