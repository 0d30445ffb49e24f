#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "stvel/analytic.hpp"
#include "stvel/rng.hpp"
#include "stvel/velocity.hpp"

using namespace stvel;

namespace {

ScalarField affine_field(const SpatioTemporalGrid& g, double a, double b, double c,
                         double d) {
  ScalarField f(g, 0.0);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j)
      for (int n = 0; n < g.nt(); ++n)
        f.set(i, j, n, a + b * g.center_x(i) + c * g.center_y(j) + d * g.center_t(n));
  return f;
}

ScalarField oracle_field(const SimIntensity& oracle, const SpatioTemporalGrid& g) {
  ScalarField f(g, 0.0);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j)
      for (int n = 0; n < g.nt(); ++n)
        f.set(i, j, n, oracle.lambda(g.center_x(i), g.center_y(j), g.center_t(n)));
  return f;
}

// keep only the top `bits` mantissa bits so small integer scalings stay exact
double truncate_mantissa(double v, int bits) {
  if (v == 0.0) return 0.0;
  int e;
  const double m = std::frexp(v, &e);
  return std::ldexp(std::round(std::ldexp(m, bits)), e - bits);
}

bool same_bits(double a, double b) {
  std::uint64_t ua, ub;
  std::memcpy(&ua, &a, 8);
  std::memcpy(&ub, &b, 8);
  return ua == ub;
}

}  // namespace

TEST_CASE("time derivative is the centered quotient") {
  SpatioTemporalGrid g(0, 0, 0, 3, 3, 3, 1, 1, 0.5);
  ScalarField f(g, 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      f.set(i, j, 0, 1.0);
      f.set(i, j, 1, 7.0);  // centre value must not matter
      f.set(i, j, 2, 3.0);
    }
  const SpatialSlice td = time_derivative(f, 1);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(td.at(i, j) == doctest::Approx(2.0));
}

TEST_CASE("time-constant field has zero derivative") {
  SpatioTemporalGrid g(0, 0, 0, 4, 4, 4, 1, 1, 1);
  ScalarField f(g, 5.0);
  const SpatialSlice td = time_derivative(f, 2);
  for (double v : td.values) CHECK(v == 0.0);
}

TEST_CASE("time index bounds follow the scheme") {
  SpatioTemporalGrid g(0, 0, 0, 3, 3, 4, 1, 1, 1);
  ScalarField f(g, 1.0);
  CHECK_THROWS_AS(time_derivative(f, 0), std::out_of_range);
  CHECK_THROWS_AS(time_derivative(f, 3), std::out_of_range);
  VelocityOptions endpoint;
  endpoint.time_scheme = TimeScheme::SymmetricWithEndpoint;
  CHECK_NOTHROW(time_derivative(f, 3, endpoint));
  CHECK_THROWS_AS(time_derivative(f, 0, endpoint), std::out_of_range);
}

TEST_CASE("endpoint scheme uses the first-order divided difference") {
  SpatioTemporalGrid g(0, 0, 0, 3, 3, 3, 1, 1, 0.25);
  ScalarField f(g, 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int n = 0; n < 3; ++n) f.set(i, j, n, static_cast<double>(n));
  VelocityOptions opt;
  opt.time_scheme = TimeScheme::SymmetricWithEndpoint;
  const SpatialSlice td = time_derivative(f, 2, opt);
  CHECK(td.at(1, 1) == doctest::Approx(4.0));  // (2 - 1) / 0.25
}

TEST_CASE("gradient norm is exact for linear fields") {
  SpatioTemporalGrid g(0, 0, 0, 6, 6, 3, 0.5, 0.5, 1);
  const ScalarField f = affine_field(g, 0.0, 3.0, 0.0, 0.0);
  const SpatialSlice gn = gradient_norm(f, 1);
  for (int i = 1; i < 5; ++i)
    for (int j = 1; j < 5; ++j)
      CHECK(gn.at(i, j) == doctest::Approx(3.0).epsilon(1e-13));
  // boundary ring is masked by default
  CHECK(is_missing(gn.at(0, 2)));
  VelocityOptions one_sided;
  one_sided.boundary = BoundaryPolicy::OneSided;
  const SpatialSlice gn2 = gradient_norm(f, 1, one_sided);
  CHECK(gn2.at(0, 2) == doctest::Approx(3.0).epsilon(1e-13));
}

TEST_CASE("constant field has zero gradient norm") {
  SpatioTemporalGrid g(0, 0, 0, 5, 5, 3, 1, 1, 1);
  ScalarField f(g, 2.5);
  const SpatialSlice gn = gradient_norm(f, 0);
  for (int i = 1; i < 4; ++i)
    for (int j = 1; j < 4; ++j) CHECK(gn.at(i, j) == 0.0);
}

TEST_CASE("masked neighbours propagate missingness") {
  std::vector<std::uint8_t> mask(25, 1);
  SpatioTemporalGrid g(0, 0, 0, 5, 5, 3, 1, 1, 1, mask);
  mask[g.spatial_index(2, 2)] = 0;
  SpatioTemporalGrid gm(0, 0, 0, 5, 5, 3, 1, 1, 1, mask);
  const ScalarField f = affine_field(gm, 0, 1, 1, 0);
  const SpatialSlice gn = gradient_norm(f, 1);
  CHECK(is_missing(gn.at(2, 2)));
  CHECK(is_missing(gn.at(1, 2)));  // neighbour of the masked cell
  CHECK_FALSE(is_missing(gn.at(1, 1)));
}

TEST_CASE("minimal velocity of an affine ramp") {
  SpatioTemporalGrid g(0, 0, 0, 7, 7, 5, 0.2, 0.2, 0.1);
  const ScalarField f = affine_field(g, 0.0, 3.0, 0.0, 2.0);  // 2t + 3x
  const VectorField v = min_velocity(f);
  for (int i = 1; i < 6; ++i)
    for (int j = 1; j < 6; ++j)
      for (int n = 1; n < 4; ++n) {
        REQUIRE(v.defined(i, j, n));
        CHECK(v.magnitude(i, j, n) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(v.vx(i, j, n) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(v.vy(i, j, n) == doctest::Approx(0.0).scale(1.0));
      }
  // first and last slices lack a symmetric neighbour
  CHECK_FALSE(v.defined(2, 2, 0));
  CHECK_FALSE(v.defined(2, 2, 4));
}

TEST_CASE("scaling the field by 17 leaves the velocity bit-identical") {
  const SimIntensity oracle(SimIntensityParams::benchmark());
  SpatioTemporalGrid g(0, 0, 0, 12, 12, 5, 1.0 / 12, 1.0 / 12, 0.1);
  ScalarField f = oracle_field(oracle, g);
  for (double& v : f.values()) v = truncate_mantissa(v, 45);
  ScalarField f17 = f;
  for (double& v : f17.values()) v *= 17.0;  // exact: 45 + 5 bits < 53

  const VectorField a = min_velocity(f);
  const VectorField b = min_velocity(f17);
  for (std::size_t k = 0; k < a.magnitudes().size(); ++k) {
    CHECK(same_bits(a.magnitudes()[k], b.magnitudes()[k]));
    CHECK(same_bits(a.vxs()[k], b.vxs()[k]));
    CHECK(same_bits(a.vys()[k], b.vys()[k]));
  }
}

TEST_CASE("gradient floor marks flat regions missing") {
  SpatioTemporalGrid g(0, 0, 0, 10, 5, 4, 0.1, 0.2, 0.25);
  ScalarField f(g, 0.0);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 5; ++j)
      for (int n = 0; n < 4; ++n) {
        const double x = g.center_x(i);
        const double ramp = x > 0.5 ? 3.0 * (x - 0.5) : 0.0;
        f.set(i, j, n, 1.0 + ramp + g.center_t(n));
      }
  const VectorField v = min_velocity(f);
  CHECK_FALSE(v.defined(1, 2, 1));         // flat half: zero gradient
  REQUIRE(v.defined(8, 2, 1));             // steep half
  CHECK(v.magnitude(8, 2, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("velocity magnitude error shrinks at second order on the smooth field") {
  // The true minimal velocity has a pole where the spatial gradient
  // vanishes (next to the active bump), so convergence is measured over the
  // bounded-velocity band away from it.
  const SimIntensity oracle(SimIntensityParams::benchmark());
  const double tc = 0.425;
  const auto max_err = [&](int nx, double dt) {
    SpatioTemporalGrid g(0, 0, tc - 1.5 * dt, nx, nx, 3, 1.0 / nx, 1.0 / nx, dt);
    const ScalarField f = oracle_field(oracle, g);
    const VectorField v = min_velocity(f);  // slice 1 sits exactly at tc
    double worst = 0.0;
    for (int i = 1; i + 1 < nx; ++i)
      for (int j = 1; j + 1 < nx; ++j) {
        if (!v.defined(i, j, 1)) continue;
        const double x = g.center_x(i), y = g.center_y(j);
        if (x < 1.0 / 15 || x > 14.0 / 15 || y < 1.0 / 15 || y > 14.0 / 15)
          continue;  // common interior region across resolutions
        const VelocityValue truth = oracle.true_velocity(x, y, tc);
        if (!truth.defined() || truth.magnitude < 1e-3 || truth.magnitude > 2.0)
          continue;
        worst = std::max(worst, std::fabs(v.magnitude(i, j, 1) - truth.magnitude));
      }
    return worst;
  };
  const double coarse = max_err(15, 0.1);
  const double fine = max_err(30, 0.05);  // halves dx, dy, dt
  CHECK(coarse / fine >= 3.0);
}

TEST_CASE("directional velocity: alignment, orthogonality, minimality") {
  SpatioTemporalGrid g(0, 0, 0, 7, 7, 4, 0.2, 0.2, 0.1);
  const ScalarField ramp = affine_field(g, 0.0, 3.0, 0.0, 2.0);

  // aligned with the gradient: equals the minimal velocity
  const ScalarField sv = directional_velocity(ramp, 1.0, 0.0);
  const VectorField vmin = min_velocity(ramp);
  CHECK(sv.at(3, 3, 1) == doctest::Approx(vmin.magnitude(3, 3, 1)).epsilon(1e-12));

  // orthogonal direction on a pure x-ramp: undefined
  const ScalarField s_orth = directional_velocity(ramp, 0.0, 1.0);
  CHECK(is_missing(s_orth.at(3, 3, 1)));

  CHECK_THROWS_AS(directional_velocity(ramp, 0.5, 0.5), std::invalid_argument);

  // curved field: s_v >= s_min for random directions
  const SimIntensity oracle(SimIntensityParams::benchmark());
  SpatioTemporalGrid go(0, 0, 0.2, 10, 10, 4, 0.1, 0.1, 0.05);
  const ScalarField f = oracle_field(oracle, go);
  const VectorField vm = min_velocity(f);
  CounterRng rng(Seed{12}, 0);
  for (int d = 0; d < 100; ++d) {
    const double ang = 2.0 * std::numbers::pi * rng.next_double();
    const ScalarField s = directional_velocity(f, std::cos(ang), std::sin(ang));
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j)
        for (int n = 1; n < 3; ++n) {
          const double a = s.at(i, j, n);
          const double b = vm.magnitude(i, j, n);
          if (is_missing(a) || is_missing(b)) continue;
          CHECK(a >= b);
        }
  }
}

TEST_CASE("zero time derivative yields magnitude zero with the zero direction") {
  SpatioTemporalGrid g(0, 0, 0, 5, 5, 3, 0.25, 0.25, 1);
  const ScalarField f = affine_field(g, 1.0, 2.0, 0.0, 0.0);  // static ramp
  const VectorField v = min_velocity(f);
  REQUIRE(v.defined(2, 2, 1));
  CHECK(v.magnitude(2, 2, 1) == 0.0);
  CHECK(v.vx(2, 2, 1) == 0.0);
  CHECK(v.vy(2, 2, 1) == 0.0);
}
