#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "stvel/errors.hpp"
#include "stvel/rng.hpp"
#include "stvel/spatial.hpp"

using namespace stvel;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << text;
  return path.string();
}

double integrate_kd(const std::vector<Point2>& pts, double h) {
  const double lo = -8.0 * h, hi = 1.0 + 8.0 * h;
  const int n = 300;
  const double step = (hi - lo) / n;
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      total += kernel_density(pts, h, {lo + (i + 0.5) * step, lo + (j + 0.5) * step});
  return total * step * step;
}

}  // namespace

TEST_CASE("single-point density peaks at 1/(2 pi h^2)") {
  const std::vector<Point2> pts = {{0.3, 0.7}};
  CHECK(kernel_density(pts, 1.0, {0.3, 0.7}) ==
        doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-14));
  CHECK(kernel_density(pts, 0.5, {0.3, 0.7}) ==
        doctest::Approx(1.0 / (2.0 * std::numbers::pi * 0.25)).epsilon(1e-14));
}

TEST_CASE("density integrates to one") {
  CounterRng rng(Seed{21}, 0);
  std::vector<Point2> pts(20);
  for (auto& p : pts) p = {rng.next_double(), rng.next_double()};
  CHECK(integrate_kd(pts, 0.2) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("translation equivariance") {
  CounterRng rng(Seed{22}, 0);
  std::vector<Point2> pts(15), shifted(15);
  const double sx = 3.25, sy = -1.5;
  for (int i = 0; i < 15; ++i) {
    pts[i] = {rng.next_double(), rng.next_double()};
    shifted[i] = {pts[i].x + sx, pts[i].y + sy};
  }
  const Point2 q{0.4, 0.6};
  CHECK(kernel_density(pts, 0.3, q) ==
        doctest::Approx(kernel_density(shifted, 0.3, {q.x + sx, q.y + sy}))
            .epsilon(1e-12));
}

TEST_CASE("kernel input validation") {
  CHECK_THROWS_AS(kernel_density({}, 1.0, {0, 0}), std::invalid_argument);
  const std::vector<Point2> pts = {{0, 0}};
  CHECK_THROWS_AS(kernel_density(pts, 0.0, {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(adaptive_kernel_density(pts, std::vector<double>{-1.0}, {0, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(adaptive_kernel_density(pts, std::vector<double>{1.0, 2.0}, {0, 0}),
                  std::invalid_argument);
}

TEST_CASE("adaptive bandwidths reduce to the fixed form when equal") {
  CounterRng rng(Seed{23}, 0);
  std::vector<Point2> pts(10);
  for (auto& p : pts) p = {rng.next_double(), rng.next_double()};
  const std::vector<double> h(10, 0.4);
  const Point2 q{0.5, 0.5};
  CHECK(adaptive_kernel_density(pts, h, q) ==
        doctest::Approx(kernel_density(pts, 0.4, q)).epsilon(1e-14));
}

TEST_CASE("two-point adaptive expansion by hand") {
  const std::vector<Point2> pts = {{0.0, 0.0}, {1.0, 0.0}};
  const std::vector<double> h = {1.0, 2.0};
  const double phi0 = 1.0 / (2.0 * std::numbers::pi);
  const double phi_half = std::exp(-0.5 * 0.25) / (2.0 * std::numbers::pi);
  const double want = 0.5 * (phi0 + 0.25 * phi_half);
  CHECK(adaptive_kernel_density(pts, h, {0.0, 0.0}) ==
        doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("adaptive density integrates to one") {
  CounterRng rng(Seed{24}, 0);
  std::vector<Point2> pts(8);
  std::vector<double> h(8);
  for (int i = 0; i < 8; ++i) {
    pts[i] = {rng.next_double(), rng.next_double()};
    h[i] = 0.1 + 0.3 * rng.next_double();
  }
  const double lo = -4.0, hi = 5.0;
  const int n = 400;
  const double step = (hi - lo) / n;
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      total += adaptive_kernel_density(
          pts, h, {lo + (i + 0.5) * step, lo + (j + 0.5) * step});
  CHECK(total * step * step == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("ESRI ASCII parsing, bit-exact header and scientific values") {
  const std::string text =
      "ncols 3\n"
      "nrows 2\n"
      "xllcorner 10.5\n"
      "yllcorner -2.25\n"
      "cellsize 0.5\n"
      "NODATA_value -9999\n"
      "1.0 2.5e-1 3\n"
      "-9999 5e2 6\n";
  const Raster r = read_esri_ascii(write_temp("stvel_ok.asc", text));
  CHECK(r.ncols == 3);
  CHECK(r.nrows == 2);
  CHECK(r.xll == 10.5);
  CHECK(r.yll == -2.25);
  CHECK(r.cellsize == 0.5);
  CHECK(r.has_nodata);
  // value(col, row) with row 0 at the south edge = last file row
  CHECK(r.value(0, 1) == 1.0);
  CHECK(r.value(1, 1) == 0.25);
  CHECK(r.value(1, 0) == 500.0);
  CHECK(r.is_nodata(r.value(0, 0)));
  CHECK(r.center_x(0) == doctest::Approx(10.75));
  CHECK(r.center_y(0) == doctest::Approx(-2.0));
}

TEST_CASE("malformed rasters raise ParseError with a line number") {
  const std::string bad_value =
      "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 abc\n";
  try {
    read_esri_ascii(write_temp("stvel_bad.asc", bad_value));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 6);
  }
  const std::string short_data =
      "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2\n";
  CHECK_THROWS_AS(read_esri_ascii(write_temp("stvel_short.asc", short_data)),
                  ParseError);
  const std::string no_header = "1 2 3\n4 5 6\n";
  CHECK_THROWS_AS(read_esri_ascii(write_temp("stvel_nohdr.asc", no_header)),
                  ParseError);
}

TEST_CASE("constant raster gives area times density everywhere") {
  Raster r;
  r.ncols = 20;
  r.nrows = 20;
  r.xll = 0.0;
  r.yll = 0.0;
  r.cellsize = 0.05;
  r.data.assign(400, 7.0);
  SpatioTemporalGrid g(0, 0, 0, 4, 4, 3, 0.25, 0.25, 1.0);
  const RasterOffset off = raster_offset(r, g);
  CHECK(off.nodata_cells == 0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int n = 0; n < 3; ++n)
        CHECK(off.offset.at(i, j, n) ==
              doctest::Approx(0.25 * 0.25 * 7.0).epsilon(1e-12));
}

TEST_CASE("raster centre exactly on a cell boundary goes to the lower cell") {
  Raster r;
  r.ncols = 1;
  r.nrows = 1;
  r.xll = 0.0;
  r.yll = 0.0;
  r.cellsize = 1.0;  // single centre at (0.5, 0.5)
  r.data = {4.0};
  // grid edges at -0.5, 0, 0.5, 1.0, 1.5: the centre sits exactly on the
  // edge between cells 1 and 2 along both axes; the lower cell wins
  SpatioTemporalGrid g(-0.5, -0.5, 0, 4, 4, 3, 0.5, 0.5, 1.0);
  const RasterOffset off = raster_offset(r, g);
  CHECK_FALSE(is_missing(off.offset.at(1, 1, 0)));
  CHECK(is_missing(off.offset.at(2, 2, 0)));
  CHECK(off.offset.at(1, 1, 0) == doctest::Approx(0.25 * 4.0));
}

TEST_CASE("random raster matches a brute-force aggregation") {
  CounterRng rng(Seed{25}, 0);
  Raster r;
  r.ncols = 30;
  r.nrows = 24;
  r.xll = -0.1;
  r.yll = 0.05;
  r.cellsize = 0.04;
  r.data.resize(30 * 24);
  for (auto& v : r.data) v = 10.0 * rng.next_double();
  SpatioTemporalGrid g(0, 0, 0, 5, 4, 3, 0.2, 0.25, 1.0);
  const RasterOffset off = raster_offset(r, g);

  // membership oracle under the lower-cell tie rule: (lo, hi], first cell
  // closed at its lower edge
  const auto inside = [](double v, double lo, double hi, bool first) {
    return (first ? v >= lo : v > lo) && v <= hi;
  };
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j) {
      double sum = 0.0;
      long cnt = 0;
      for (int row = 0; row < r.nrows; ++row)
        for (int col = 0; col < r.ncols; ++col) {
          const double x = r.center_x(col), y = r.center_y(row);
          if (inside(x, g.x0() + i * g.dx(), g.x0() + (i + 1) * g.dx(), i == 0) &&
              inside(y, g.y0() + j * g.dy(), g.y0() + (j + 1) * g.dy(), j == 0)) {
            sum += r.value(col, row);
            ++cnt;
          }
        }
      if (cnt == 0) {
        CHECK(is_missing(off.offset.at(i, j, 0)));
      } else {
        CHECK(off.offset.at(i, j, 0) ==
              doctest::Approx(g.cell_area() * sum / cnt).epsilon(1e-12));
      }
    }
}

TEST_CASE("masked cells and non-overlap are handled") {
  Raster r;
  r.ncols = 4;
  r.nrows = 4;
  r.xll = 100.0;
  r.yll = 100.0;
  r.cellsize = 1.0;
  r.data.assign(16, 1.0);
  SpatioTemporalGrid g(0, 0, 0, 3, 3, 3, 1, 1, 1);
  CHECK_THROWS_AS(raster_offset(r, g), CoverageError);

  r.xll = r.yll = 0.0;
  r.has_nodata = true;
  r.nodata = -1.0;
  r.data[2 * 4 + 1] = -1.0;  // centre (1.5, 1.5): inside the grid
  std::vector<std::uint8_t> mask(9, 1);
  mask[0] = 0;
  SpatioTemporalGrid gm(0, 0, 0, 3, 3, 3, 1, 1, 1, mask);
  const RasterOffset off = raster_offset(r, gm);
  CHECK(off.nodata_cells == 1);
  CHECK(is_missing(off.offset.at(0, 0, 0)));
  CHECK_FALSE(is_missing(off.offset.at(1, 1, 0)));
}
