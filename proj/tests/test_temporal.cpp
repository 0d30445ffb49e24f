#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stvel/errors.hpp"
#include "stvel/rng.hpp"
#include "stvel/temporal.hpp"

using namespace stvel;

TEST_CASE("basis validation") {
  TemporalBasisSpec bad;
  bad.fourier_order = 2;  // omega missing
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  TemporalBasisSpec both;
  both.day_of_week = true;  // intercept still on
  CHECK_THROWS_AS(both.validate(), std::invalid_argument);
  TemporalBasisSpec none;
  none.include_intercept = false;
  CHECK_THROWS_AS(none.validate(), std::invalid_argument);
}

TEST_CASE("design row for a cosine/sine/linear basis at t = 0") {
  TemporalBasisSpec spec;
  spec.include_intercept = false;
  spec.fourier_order = 1;
  spec.omega = 2.0;
  spec.poly_degree = 1;
  const auto row = design_row(spec, 0.0);
  REQUIRE(row.size() == 3);
  CHECK(row[0] == 1.0);  // cos 0
  CHECK(row[1] == 0.0);  // sin 0
  CHECK(row[2] == 0.0);  // t
}

TEST_CASE("day-of-week indicator respects the configured weekday of t = 0") {
  TemporalBasisSpec spec;
  spec.include_intercept = false;
  spec.day_of_week = true;
  spec.day0_weekday = 0;  // Sunday
  const auto row = design_row(spec, 8.5);
  REQUIRE(row.size() == 7);
  for (int d = 0; d < 7; ++d) CHECK(row[d] == (d == 1 ? 1.0 : 0.0));  // Monday
  // names follow the layout
  const auto names = design_names(spec);
  CHECK(names[1] == "dow_mon");
}

TEST_CASE("dot product against the published coefficient table") {
  // day-of-week + 3 Fourier pairs + cubic trend, annual frequency
  TemporalBasisSpec spec;
  spec.include_intercept = false;
  spec.day_of_week = true;
  spec.day0_weekday = 0;
  spec.fourier_order = 3;
  spec.omega = 2.0 * std::numbers::pi / 365.0;
  spec.poly_degree = 3;

  const double delta[7] = {-4.52, -4.58, -4.64, -4.60, -4.62, -4.70, -4.86};
  const double alpha[3] = {3.59, 0.63, 0.34};
  const double beta[3] = {-18.71, -2.46, -0.50};
  const double gamma[3] = {0.69, -0.004, 8.31e-06};

  std::vector<double> coef;
  coef.insert(coef.end(), delta, delta + 7);
  coef.insert(coef.end(), alpha, alpha + 3);
  coef.insert(coef.end(), beta, beta + 3);
  coef.insert(coef.end(), gamma, gamma + 3);

  const auto row = design_row(spec, 10.0);
  REQUIRE(row.size() == coef.size());
  double log_mu = 0.0;
  for (std::size_t c = 0; c < coef.size(); ++c) log_mu += row[c] * coef[c];
  // independent spreadsheet-style evaluation of the same model at t = 10
  CHECK(log_mu == doctest::Approx(2.051851649948246).epsilon(1e-12));
}

TEST_CASE("constant counts with an intercept recover log c exactly") {
  std::vector<double> t(40), y(40, 9.0);
  for (int i = 0; i < 40; ++i) t[i] = i;
  const TemporalFit f = fit_temporal(t, y, TemporalBasisSpec{});
  CHECK(std::fabs(f.coefficients(0) - std::log(9.0)) <= 1e-10);
  CHECK(eval_mu(f, 17.0) == doctest::Approx(9.0).epsilon(1e-9));
}

TEST_CASE("simulation recovery within three standard errors") {
  const double omega = 2.0 * std::numbers::pi / 365.0;
  TemporalBasisSpec spec;
  spec.fourier_order = 1;
  spec.omega = omega;
  CounterRng rng(Seed{2024}, 0);
  std::vector<double> t(365), y(365);
  for (int i = 0; i < 365; ++i) {
    t[i] = i;
    y[i] = static_cast<double>(
        rng.next_poisson(std::exp(1.0 + 0.5 * std::cos(omega * i))));
  }
  const TemporalFit f = fit_temporal(t, y, spec);
  const double truth[3] = {1.0, 0.5, 0.0};
  for (int c = 0; c < 3; ++c)
    CHECK(std::fabs(f.coefficients(c) - truth[c]) <= 3.0 * f.std_errors(c));
}

TEST_CASE("optimum beats nearby coefficient perturbations") {
  CounterRng rng(Seed{8}, 0);
  std::vector<double> t(120), y(120);
  for (int i = 0; i < 120; ++i) {
    t[i] = i;
    y[i] = static_cast<double>(rng.next_poisson(6.0 + 0.03 * i));
  }
  TemporalBasisSpec spec;
  spec.poly_degree = 1;
  const TemporalFit f = fit_temporal(t, y, spec);

  const auto loglik = [&](const Eigen::VectorXd& b) {
    double ll = 0.0;
    for (int i = 0; i < 120; ++i) {
      const auto row = design_row(spec, t[i]);
      double eta = 0.0;
      for (std::size_t c = 0; c < row.size(); ++c) eta += row[c] * b(c);
      ll += y[i] * eta - std::exp(eta);
    }
    return ll;
  };
  const double best = loglik(f.coefficients);
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd b = f.coefficients;
    for (Eigen::Index c = 0; c < b.size(); ++c)
      b(c) += (rng.next_double() - 0.5) * 2e-3;
    CHECK(loglik(b) <= best + 1e-9);
  }
}

TEST_CASE("collinear design names the offending column") {
  TemporalBasisSpec spec;
  spec.poly_degree = 1;
  std::vector<double> t(20, 5.0), y(20, 3.0);  // constant time: t^1 ~ intercept
  CHECK_THROWS_AS(fit_temporal(t, y, spec), CollinearityError);
}

TEST_CASE("negative or fractional counts are rejected") {
  std::vector<double> t = {0, 1, 2, 3}, y = {1, 2, -1, 0};
  CHECK_THROWS_AS(fit_temporal(t, y, TemporalBasisSpec{}), std::invalid_argument);
  y = {1, 2, 0.5, 0};
  CHECK_THROWS_AS(fit_temporal(t, y, TemporalBasisSpec{}), std::invalid_argument);
}

TEST_CASE("permuting the observations leaves the fit unchanged") {
  CounterRng rng(Seed{31}, 0);
  std::vector<double> t(200), y(200);
  for (int i = 0; i < 200; ++i) {
    t[i] = i;
    y[i] = static_cast<double>(rng.next_poisson(4.0 + 2.0 * std::sin(0.05 * i) + 2.0));
  }
  TemporalBasisSpec spec;
  spec.fourier_order = 1;
  spec.omega = 0.05;
  const TemporalFit a = fit_temporal(t, y, spec);

  std::vector<std::size_t> idx(200);
  for (std::size_t i = 0; i < 200; ++i) idx[i] = (i * 37) % 200;
  std::vector<double> tp(200), yp(200);
  for (std::size_t i = 0; i < 200; ++i) {
    tp[i] = t[idx[i]];
    yp[i] = y[idx[i]];
  }
  const TemporalFit b = fit_temporal(tp, yp, spec);
  for (Eigen::Index c = 0; c < a.coefficients.size(); ++c)
    CHECK(a.coefficients(c) == doctest::Approx(b.coefficients(c)).epsilon(1e-10));
}

TEST_CASE("eval_mu is positive and log-linear in the intercept") {
  std::vector<double> t(30), y(30, 4.0);
  for (int i = 0; i < 30; ++i) t[i] = i;
  TemporalFit f = fit_temporal(t, y, TemporalBasisSpec{});
  const double base = eval_mu(f, 3.0);
  f.coefficients(0) += 1.5;
  CHECK(eval_mu(f, 3.0) == doctest::Approx(base * std::exp(1.5)).epsilon(1e-12));
  CHECK(base > 0.0);
}

TEST_CASE("deviance decreases across accepted iterations") {
  // rising trend forces several Newton steps
  CounterRng rng(Seed{55}, 0);
  std::vector<double> t(150), y(150);
  for (int i = 0; i < 150; ++i) {
    t[i] = i;
    y[i] = static_cast<double>(rng.next_poisson(std::exp(0.5 + 0.02 * i)));
  }
  TemporalBasisSpec spec;
  spec.poly_degree = 1;
  const TemporalFit f = fit_temporal(t, y, spec);
  CHECK(f.gradient_norm <= 1e-8);
  CHECK(f.iterations < 100);
}
