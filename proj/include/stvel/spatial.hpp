#pragma once

#include <span>
#include <string>
#include <vector>

#include "stvel/grid.hpp"

namespace stvel {

/// Population raster in ESRI ASCII layout. File rows run north to south;
/// value(col, row) addresses rows from the south edge like the grid does.
struct Raster {
  int ncols = 0, nrows = 0;
  double xll = 0.0, yll = 0.0, cellsize = 0.0;
  double nodata = -9999.0;
  bool has_nodata = false;
  std::vector<double> data;  ///< file order: first row is the top row

  double value(int col, int row) const {
    return data[static_cast<std::size_t>(nrows - 1 - row) * ncols + col];
  }
  bool is_nodata(double v) const { return has_nodata && v == nodata; }
  double center_x(int col) const { return xll + (col + 0.5) * cellsize; }
  double center_y(int row) const { return yll + (row + 0.5) * cellsize; }
};

/// Plain-text ESRI ASCII grid reader (ncols/nrows/xllcorner/yllcorner/
/// cellsize/NODATA_value header, then nrows x ncols values, scientific
/// notation accepted). Malformed input raises ParseError with the line.
Raster read_esri_ascii(const std::string& path);

/// Gaussian kernel density (1/n) sum (1/h^2) phi((u - u_i)/h) with
/// phi(u) = exp(-|u|^2/2) / (2 pi). No edge correction is applied, so values
/// near the window boundary are biased low.
double kernel_density(std::span<const Point2> points, double h, Point2 query);

/// Per-point bandwidths h_i; reduces to kernel_density when all equal.
double adaptive_kernel_density(std::span<const Point2> points,
                               std::span<const double> h, Point2 query);

/// Expected-count offset per grid cell: cell area times the mean of the
/// raster values whose centers fall inside the cell (half-open edges, lower
/// cell wins ties), replicated over time. Nodata cells count as zero and are
/// tallied; cells no raster center reaches are missing; zero overlap overall
/// raises CoverageError.
struct RasterOffset {
  ScalarField offset;
  long nodata_cells = 0;
};
RasterOffset raster_offset(const Raster& raster, const SpatioTemporalGrid& grid);

}  // namespace stvel
