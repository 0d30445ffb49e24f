#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stvel/errors.hpp"
#include "stvel/analytic.hpp"
#include "stvel/simulate.hpp"
#include "stvel/validation.hpp"

using namespace stvel;
using stvel::stats::gamma_q;

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

TEST_CASE("zero intensity yields an empty pattern") {
  const auto zero = [](double, double, double) { return 0.0; };
  const PointPattern p =
      sample_poisson(zero, Window{0, 1, 0, 1}, TimeSpan{0, 1}, 0.0, Seed{1});
  CHECK(p.empty());
}

TEST_CASE("identical seeds reproduce the pattern bit for bit") {
  const auto lam = [](double x, double, double) { return 40.0 * x; };
  const PointPattern a =
      sample_poisson(lam, Window{0, 1, 0, 1}, TimeSpan{0, 1}, 40.0, Seed{77});
  const PointPattern b =
      sample_poisson(lam, Window{0, 1, 0, 1}, TimeSpan{0, 1}, 40.0, Seed{77});
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a.events()[k].x == b.events()[k].x);
    CHECK(a.events()[k].y == b.events()[k].y);
    CHECK(a.events()[k].t == b.events()[k].t);
  }
  const PointPattern c =
      sample_poisson(lam, Window{0, 1, 0, 1}, TimeSpan{0, 1}, 40.0, Seed{78});
  CHECK(a.size() != c.size());
}

TEST_CASE("thinned counts track the intensity mass") {
  const auto lam = [](double, double, double) { return 50.0; };
  double mean = 0.0;
  constexpr int kSeeds = 100;
  for (int s = 0; s < kSeeds; ++s)
    mean += static_cast<double>(
        sample_poisson(lam, Window{0, 1, 0, 1}, TimeSpan{0, 1}, 50.0,
                       Seed{static_cast<std::uint64_t>(1000 + s)})
            .size());
  mean /= kSeeds;
  CHECK(mean == doctest::Approx(50.0).epsilon(0.06));
}

TEST_CASE("thinned counts pass a Poisson goodness-of-fit over 500 replicates") {
  constexpr double kRate = 50.0;
  constexpr int kReps = 500;
  const auto lam = [](double, double, double) { return kRate; };
  std::vector<double> counts(kReps);
  for (int s = 0; s < kReps; ++s)
    counts[s] = static_cast<double>(
        sample_poisson(lam, Window{0, 1, 0, 1}, TimeSpan{0, 1}, kRate,
                       Seed{static_cast<std::uint64_t>(90000 + s)})
            .size());
  const std::vector<double> edges = {40.5, 44.5, 48.5, 52.5, 56.5, 60.5};
  const int nbins = static_cast<int>(edges.size()) + 1;
  std::vector<double> expected(nbins, 0.0), observed(nbins, 0.0);
  double pmf = std::exp(-kRate);
  for (int k = 0; k <= 200; ++k) {
    if (k > 0) pmf *= kRate / k;
    int b = 0;
    while (b < nbins - 1 && k > edges[b]) ++b;
    expected[b] += pmf * kReps;
  }
  for (double c : counts) {
    int b = 0;
    while (b < nbins - 1 && c > edges[b]) ++b;
    observed[b] += 1.0;
  }
  double stat = 0.0;
  for (int b = 0; b < nbins; ++b)
    stat += (observed[b] - expected[b]) * (observed[b] - expected[b]) / expected[b];
  CHECK(gamma_q(0.5 * (nbins - 1), 0.5 * stat) >= 0.01);
}

TEST_CASE("mean count matches the quadrature integral of the bump intensity") {
  SimIntensityParams params = SimIntensityParams::benchmark();
  params.lambda0 = calibrated_lambda0(params, 300.0);
  const SimIntensity oracle(params);
  const auto lam = [&](double x, double y, double t) {
    return oracle.lambda(x, y, t);
  };
  const Window w{0, 1, 0, 1};
  const TimeSpan ts{0, 1};
  const double integral = oracle.integral(w, ts, 64);
  const double bound = oracle.upper_bound(ts);
  constexpr int kSeeds = 40;
  double mean = 0.0;
  for (int s = 0; s < kSeeds; ++s)
    mean += static_cast<double>(
        sample_poisson(lam, w, ts, bound, Seed{static_cast<std::uint64_t>(400 + s)})
            .size());
  mean /= kSeeds;
  CHECK(std::fabs(mean - integral) <= 3.0 * std::sqrt(integral / kSeeds));
}

TEST_CASE("bound violations and negative intensities are reported") {
  const auto lam = [](double, double, double) { return 2.0; };
  CHECK_THROWS_AS(
      sample_poisson(lam, Window{0, 1, 0, 1}, TimeSpan{0, 1}, 1.0, Seed{3}),
      BoundViolationError);
  const auto neg = [](double, double, double) { return -1.0; };
  CHECK_THROWS_AS(
      sample_poisson(neg, Window{0, 1, 0, 1}, TimeSpan{0, 1}, 1.0, Seed{3}),
      std::invalid_argument);
}

TEST_CASE("suggest_lambda_max inflates the gridded maximum") {
  const auto lam = [](double x, double y, double t) { return 1.0 + x + y + t; };
  const double bound =
      suggest_lambda_max(lam, Window{0, 1, 0, 1}, TimeSpan{0, 1}, 8);
  CHECK(bound > 3.9);
  CHECK(bound < 4.4 * 1.1);
}

TEST_CASE("degenerate variance returns the mean field") {
  const CovarianceSpec spec(1e-30, 1.0, 1.5, 0.0);
  SpatioTemporalGrid g(0, 0, 0, 4, 4, 3, 0.25, 0.25, 1);
  const ScalarField f = sample_gaussian_field(spec, g, 2.5, Seed{5});
  for (double v : f.values()) CHECK(v == doctest::Approx(2.5).epsilon(1e-10));
}

TEST_CASE("Kronecker sampling equals full-matrix Cholesky sampling") {
  const CovarianceSpec spec(0.7, 2.0, 1.5, 0.4);
  SpatioTemporalGrid g(0, 0, 0, 3, 3, 3, 0.3, 0.3, 1);
  const double beta = 1.2;
  const Seed seed{4242};
  const ScalarField f = sample_gaussian_field(spec, g, beta, seed);

  // same draws through the full T (x) S factor
  const CovMatrices cm = cov_matrices(spec, g);
  Eigen::MatrixXd full = kron(cm.temporal, cm.spatial);
  full.diagonal().array() +=
      chol_with_jitter(cm.temporal).jitter * chol_with_jitter(cm.spatial).jitter;
  const Eigen::MatrixXd l = chol_with_jitter(full).lower;
  CounterRng rng(seed, CounterRng::kFieldStream);
  Eigen::VectorXd z(27);
  for (int n = 0; n < 3; ++n)
    for (int s = 0; s < 9; ++s) z(n * 9 + s) = rng.next_normal();
  const Eigen::VectorXd x = l * z;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int n = 0; n < 3; ++n) {
        const auto p = n * 9 + static_cast<int>(g.spatial_index(i, j));
        CHECK(f.at(i, j, n) == doctest::Approx(beta + x(p)).epsilon(1e-8));
      }
}

TEST_CASE("field sampling refuses grids beyond desk scale") {
  const CovarianceSpec spec(1.0, 1.0, 1.5, 0.0);
  SpatioTemporalGrid g(0, 0, 0, 100, 100, 3, 0.01, 0.01, 1);
  CHECK_THROWS_AS(sample_gaussian_field(spec, g, 0.0, Seed{1}),
                  std::invalid_argument);
}

TEST_CASE("degenerate LGCP reduces to a homogeneous Poisson process") {
  const CovarianceSpec spec(1e-30, 1.0, 1.5, 0.0);
  SpatioTemporalGrid g(0, 0, 0, 4, 4, 4, 0.25, 0.25, 0.25);
  const auto eta = [](double, double) { return 1.0; };
  const auto mu = [](double) { return 30.0; };
  double mean = 0.0;
  constexpr int kSeeds = 60;
  for (int s = 0; s < kSeeds; ++s)
    mean += static_cast<double>(
        sample_lgcp(eta, mu, spec, g, 0.0, Seed{static_cast<std::uint64_t>(s)})
            .size());
  mean /= kSeeds;
  CHECK(mean == doctest::Approx(30.0).epsilon(0.12));
}

TEST_CASE("zero eta yields an empty pattern") {
  const CovarianceSpec spec(1.0, 1.0, 1.5, 0.0);
  SpatioTemporalGrid g(0, 0, 0, 3, 3, 3, 1.0 / 3, 1.0 / 3, 1.0 / 3);
  const PointPattern p = sample_lgcp([](double, double) { return 0.0; },
                                     [](double) { return 5.0; }, spec, g, 0.0,
                                     Seed{9});
  CHECK(p.empty());
}

TEST_CASE("cell counts conditional on the field are Poisson") {
  // freeze one piecewise-constant intensity, then replicate only the
  // thinning stage: per-cell counts must match Poisson(lambda * volume)
  SpatioTemporalGrid g(0, 0, 0, 3, 3, 3, 1.0 / 3, 1.0 / 3, 1.0 / 3);
  ScalarField lam(g, 0.0);
  for (std::size_t k = 0; k < lam.values().size(); ++k)
    lam.values()[k] = 10.0 + static_cast<double>(k);
  const auto lam_fn = [&](double x, double y, double t) {
    const auto c = g.locate(x, y, t);
    return c ? lam.at(c->i, c->j, c->n) : 0.0;
  };
  const double vol = g.cell_volume();
  constexpr int kSeeds = 400;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(27);
  for (int s = 0; s < kSeeds; ++s) {
    const PointPattern p = sample_poisson(lam_fn, g.window(), g.tspan(), 36.0 + 1,
                                          Seed{static_cast<std::uint64_t>(70 + s)});
    const auto counts = bin_counts(p, g);
    for (int k = 0; k < 27; ++k) sum(k) += static_cast<double>(counts[k]);
  }
  for (int k = 0; k < 27; ++k) {
    const double want = lam.values()[k] * vol;
    const double se = std::sqrt(want / kSeeds);
    CHECK(std::fabs(sum(k) / kSeeds - want) <= 5.0 * se);
  }
}
