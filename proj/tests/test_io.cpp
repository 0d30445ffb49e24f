#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "stvel/errors.hpp"
#include "stvel/io.hpp"
#include "stvel/rng.hpp"

using namespace stvel;

namespace {

std::string tmp(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("config hash is stable and hex formatted") {
  const auto h = config_hash("{\"seed\":1}");
  CHECK(h == config_hash("{\"seed\":1}"));
  CHECK(h != config_hash("{\"seed\":2}"));
  CHECK(hash_hex(h).size() == 16);
}

TEST_CASE("pattern round trip preserves events, window, and header") {
  PointPattern p({{0.25, 0.5, 0.125}, {1.0, 0.0, 0.75}}, Window{0, 1, 0, 1},
                 TimeSpan{0, 1});
  const auto path = tmp("stvel_pattern.csv");
  write_pattern_csv(path, p, {.schema = "stvel.pattern.v1", .config = "abc"});

  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first == "# schema=stvel.pattern.v1 config=abc");

  const PointPattern q = read_pattern_csv(path);
  REQUIRE(q.size() == 2);
  CHECK(q.events()[0].x == 0.25);
  CHECK(q.events()[1].t == 0.75);
  CHECK(q.window().xmax == 1.0);
}

TEST_CASE("field round trip keeps values and missing cells") {
  SpatioTemporalGrid g(0.5, -1.0, 2.0, 3, 4, 3, 0.25, 0.5, 1.5);
  ScalarField f(g, 0.0);
  CounterRng rng(Seed{5}, 0);
  for (double& v : f.values()) v = rng.next_double() * 1e6;
  f.set(1, 2, 0, missing());
  const auto path = tmp("stvel_field.csv");
  write_field_csv(path, f, {.schema = "stvel.grid.v1"});
  const ScalarField f2 = read_field_csv(path);
  CHECK(f2.grid().nx() == 3);
  CHECK(f2.grid().dy() == 0.5);
  CHECK(f2.grid().t0() == 2.0);
  for (std::size_t k = 0; k < f.values().size(); ++k) {
    if (is_missing(f.values()[k]))
      CHECK(is_missing(f2.values()[k]));
    else
      CHECK(f.values()[k] == f2.values()[k]);  // %.17g round-trips binary64
  }
}

TEST_CASE("malformed grid csv reports the offending line") {
  const auto path = tmp("stvel_badgrid.csv");
  {
    std::ofstream out(path);
    out << "# schema=stvel.grid.v1 config=x\n";
    out << "# grid x0=0 y0=0 t0=0 nx=3 ny=3 nt=3 dx=1 dy=1 dt=1\n";
    out << "x,y,t,value\n";
    out << "0.5,0.5,0.5,1.0\n";
    out << "0.5,0.5,1.5,not_a_number\n";
  }
  try {
    read_field_csv(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 5);
  }
}

TEST_CASE("counts and point readers skip headers and comments") {
  const auto cpath = tmp("stvel_counts.csv");
  {
    std::ofstream out(cpath);
    out << "# a comment\nt,count\n0,3\n1,5\n2,0\n";
  }
  const CountsSeries s = read_counts_csv(cpath);
  REQUIRE(s.times.size() == 3);
  CHECK(s.counts[1] == 5);

  const auto ppath = tmp("stvel_points.csv");
  {
    std::ofstream out(ppath);
    out << "x,y\n0.5,0.25\n1.5,2.5\n";
  }
  const auto pts = read_points_csv(ppath);
  REQUIRE(pts.size() == 2);
  CHECK(pts[1].y == 2.5);

  CHECK_THROWS_AS(read_counts_csv(tmp("missing_file.csv")), ParseError);
}

TEST_CASE("temporal fit json round trip") {
  TemporalFit fit;
  fit.spec.fourier_order = 2;
  fit.spec.omega = 0.017;
  fit.spec.poly_degree = 1;
  fit.coefficients = Eigen::VectorXd::LinSpaced(6, -1.0, 1.5);
  fit.std_errors = Eigen::VectorXd::Constant(6, 0.1);
  fit.deviance = 12.5;
  fit.gradient_norm = 1e-9;
  fit.iterations = 6;
  fit.time_scale = 80.0;
  const std::string text = temporal_fit_to_json(fit, {.schema = "x"});
  const TemporalFit back = temporal_fit_from_json(text);
  CHECK(back.spec.fourier_order == 2);
  CHECK(back.coefficients.isApprox(fit.coefficients));
  CHECK(back.time_scale == 80.0);
}

TEST_CASE("fit result json round trip with missing cells") {
  SpatioTemporalGrid g(0, 0, 0, 3, 3, 3, 1, 1, 1);
  FitResult r{.grid = g, .spec = CovarianceSpec(2.0, 1.5, 1.5, 0.25)};
  r.beta = 0.7;
  r.zeta.assign(g.n_cells(), 0.3);
  r.zeta[5] = missing();
  r.zeta_variance.assign(g.n_cells(), 0.05);
  r.offset.assign(g.n_cells(), 2.0);
  r.log_evidence = -100.25;
  const std::string text = fit_result_to_json(r, {.schema = "x", .config = "ff"});
  const FitResult back = fit_result_from_json(text);
  CHECK(back.spec.kappa == 1.5);
  CHECK(back.beta == 0.7);
  CHECK(is_missing(back.zeta[5]));
  CHECK(back.zeta[0] == 0.3);
  CHECK(back.grid.nx() == 3);
  CHECK(back.log_evidence == -100.25);
}

TEST_CASE("format_double survives a parse round trip") {
  CounterRng rng(Seed{77}, 0);
  for (int k = 0; k < 1000; ++k) {
    const double v = (rng.next_double() - 0.5) * std::pow(10.0, 30.0 * (rng.next_double() - 0.5));
    CHECK(std::stod(format_double(v)) == v);
  }
}
