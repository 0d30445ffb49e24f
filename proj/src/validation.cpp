#include "stvel/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>

#include "stvel/analytic.hpp"
#include "stvel/covariance.hpp"
#include "stvel/io.hpp"
#include "stvel/rng.hpp"
#include "stvel/simulate.hpp"
#include "stvel/spatial.hpp"
#include "stvel/stfit.hpp"
#include "stvel/temporal.hpp"
#include "stvel/velocity.hpp"

namespace stvel {

namespace stats {

namespace {

// series for P(a,x), x < a+1
double gamma_p_series(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// continued fraction for Q(a,x), x >= a+1
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q domain");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) return missing();
  std::sort(v.begin(), v.end());
  const double pos = p * (static_cast<double>(v.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

}  // namespace stats

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// C1: closed-form derivatives vs central differences at random points
CriterionResult crit_derivatives(const ValidationConfig& cfg) {
  const SimIntensity oracle(SimIntensityParams::benchmark());
  CounterRng rng(Seed{cfg.seed}, 100);
  constexpr double kStep = 1e-5;
  constexpr double kTol = 1e-5;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double x = 0.05 + 0.9 * rng.next_double();
    const double y = 0.05 + 0.9 * rng.next_double();
    const double t = 0.05 + 0.9 * rng.next_double();
    const auto [gx, gy] = oracle.grad_xy(x, y, t);
    const double gt = oracle.dlambda_dt(x, y, t);
    const double fx = (oracle.lambda(x + kStep, y, t) - oracle.lambda(x - kStep, y, t)) / (2 * kStep);
    const double fy = (oracle.lambda(x, y + kStep, t) - oracle.lambda(x, y - kStep, t)) / (2 * kStep);
    const double ft = (oracle.lambda(x, y, t + kStep) - oracle.lambda(x, y, t - kStep)) / (2 * kStep);
    worst = std::max(worst, std::fabs(gx - fx) / std::max(std::fabs(fx), 1e-300));
    worst = std::max(worst, std::fabs(gy - fy) / std::max(std::fabs(fy), 1e-300));
    worst = std::max(worst, std::fabs(gt - ft) / std::max(std::fabs(ft), 1e-300));
  }
  CriterionResult r{.id = "C1", .name = "oracle derivative agreement"};
  r.passed = worst <= kTol;
  r.detail = "max rel err " + fmt(worst) + " (tol " + fmt(kTol) + ", 100 points)";
  return r;
}

// Benchmark intensity gridded with the centre time slice at tc.
ScalarField gridded_intensity(const SimIntensity& oracle, int nx, int ny,
                              double tc, double dt, int nt) {
  SpatioTemporalGrid g(0.0, 0.0, tc - dt * (nt / 2) - 0.5 * dt, nx, ny, nt,
                       1.0 / nx, 1.0 / ny, dt);
  ScalarField f(g, 0.0);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int n = 0; n < nt; ++n)
        f.set(i, j, n, oracle.lambda(g.center_x(i), g.center_y(j), g.center_t(n)));
  return f;
}

struct SliceErrors {
  std::vector<double> rel;
  int cells = 0;
};

SliceErrors velocity_errors(const SimIntensity& oracle, const ScalarField& f,
                            int n_slice) {
  const VectorField v = min_velocity(f);
  const auto& g = f.grid();
  SliceErrors out;
  const double tc = g.center_t(n_slice);
  for (int i = 1; i + 1 < g.nx(); ++i)
    for (int j = 1; j + 1 < g.ny(); ++j) {
      if (!v.defined(i, j, n_slice)) continue;
      const VelocityValue truth =
          oracle.true_velocity(g.center_x(i), g.center_y(j), tc);
      if (!truth.defined() || truth.magnitude == 0.0) continue;
      out.rel.push_back(std::fabs(v.magnitude(i, j, n_slice) - truth.magnitude) /
                        truth.magnitude);
      ++out.cells;
    }
  return out;
}

// C2: benchmark velocity reproduction at the pinned coarse step sizes.
CriterionResult crit_sec4_velocity(const ValidationConfig& cfg) {
  const SimIntensity oracle(SimIntensityParams::benchmark());
  constexpr double kMedTol = 0.05, kP90Tol = 0.15;
  std::vector<double> pooled;
  std::string detail;
  const struct { double tc, dt; } setups[] = {{0.225, 0.2}, {0.575, 0.2}, {0.875, 0.1}};
  for (const auto& s : setups) {
    const ScalarField f = gridded_intensity(oracle, cfg.nx, cfg.ny, s.tc, s.dt, 3);
    SliceErrors e = velocity_errors(oracle, f, 1);
    const double med = stats::quantile(e.rel, 0.5);
    detail += "t=" + fmt(s.tc) + " med " + fmt(med) + " p90 " +
              fmt(stats::quantile(e.rel, 0.9)) + " (" + std::to_string(e.cells) +
              " cells); ";
    pooled.insert(pooled.end(), e.rel.begin(), e.rel.end());
  }
  const double med = stats::quantile(pooled, 0.5);
  const double p90 = stats::quantile(pooled, 0.9);
  CriterionResult r{.id = "C2", .name = "benchmark velocity reproduction"};
  r.passed = med <= kMedTol && p90 <= kP90Tol;
  r.detail = "pooled med " + fmt(med) + " (tol " + fmt(kMedTol) + "), p90 " +
             fmt(p90) + " (tol " + fmt(kP90Tol) + "); " + detail;
  return r;
}

// C3: s_v >= s_min for random unit directions wherever both are defined
CriterionResult crit_minimality(const ValidationConfig& cfg) {
  const SimIntensity oracle(SimIntensityParams::benchmark());
  CounterRng rng(Seed{cfg.seed}, 103);
  long violations = 0, comparisons = 0;
  const struct { double tc, dt; } setups[] = {{0.225, 0.2}, {0.575, 0.2}, {0.875, 0.1}};
  for (const auto& s : setups) {
    const ScalarField f = gridded_intensity(oracle, cfg.nx, cfg.ny, s.tc, s.dt, 3);
    const VectorField vmin = min_velocity(f);
    for (int d = 0; d < 100; ++d) {
      const double ang = 2.0 * std::numbers::pi * rng.next_double();
      const ScalarField sv = directional_velocity(f, std::cos(ang), std::sin(ang));
      const auto& g = f.grid();
      for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
          const double a = sv.at(i, j, 1);
          const double b = vmin.magnitude(i, j, 1);
          if (is_missing(a) || is_missing(b)) continue;
          ++comparisons;
          if (a < b) ++violations;
        }
    }
  }
  CriterionResult r{.id = "C3", .name = "directional speed minimality"};
  r.passed = violations == 0 && comparisons > 0;
  r.detail = std::to_string(violations) + " violations in " +
             std::to_string(comparisons) + " comparisons (100 directions)";
  return r;
}

// quantize to 5k * 2^e so that both *1000 and *0.1 are exact in binary64
double quantize_scalable(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  const int e = std::ilogb(v) - 39;
  const double base = std::ldexp(5.0, e);
  return std::round(v / base) * base;
}

bool same_bits(double a, double b) {
  std::uint64_t ua, ub;
  std::memcpy(&ua, &a, 8);
  std::memcpy(&ub, &b, 8);
  return ua == ub;
}

// C4: bitwise scale invariance of min_velocity
CriterionResult crit_scale_invariance(const ValidationConfig& cfg) {
  const SimIntensity oracle(SimIntensityParams::benchmark());
  ScalarField base = gridded_intensity(oracle, cfg.nx, cfg.ny, 0.225, 0.2, 3);
  for (double& v : base.values()) v = quantize_scalable(v);
  const VectorField ref = min_velocity(base);

  long mismatches = 0;
  for (const double c : {0.1, 1.0, 1000.0}) {
    ScalarField scaled = base;
    for (double& v : scaled.values()) v = c * v;
    const VectorField got = min_velocity(scaled);
    for (std::size_t k = 0; k < ref.magnitudes().size(); ++k) {
      if (!same_bits(ref.magnitudes()[k], got.magnitudes()[k])) ++mismatches;
      if (!same_bits(ref.vxs()[k], got.vxs()[k])) ++mismatches;
      if (!same_bits(ref.vys()[k], got.vys()[k])) ++mismatches;
    }
  }
  CriterionResult r{.id = "C4", .name = "bitwise scale invariance"};
  r.passed = mismatches == 0;
  r.detail = std::to_string(mismatches) + " component mismatches for c in {0.1,1,1000}";
  return r;
}

// C5: affine fields give exact magnitude and direction
CriterionResult crit_linear_exactness(const ValidationConfig& cfg) {
  CounterRng rng(Seed{cfg.seed}, 105);
  constexpr double kTol = 1e-12;
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto draw = [&](double lo, double hi) {
      return lo + (hi - lo) * rng.next_double();
    };
    const double a = draw(-1, 1);
    double b = draw(0.5, 2.0) * (rng.next_double() < 0.5 ? -1 : 1);
    double c = draw(0.5, 2.0) * (rng.next_double() < 0.5 ? -1 : 1);
    double d = draw(0.5, 2.0) * (rng.next_double() < 0.5 ? -1 : 1);
    SpatioTemporalGrid g(0, 0, 0, 8, 8, 5, 0.125, 0.125, 0.2);
    ScalarField f(g, 0.0);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        for (int n = 0; n < 5; ++n)
          f.set(i, j, n,
                a + b * g.center_x(i) + c * g.center_y(j) + d * g.center_t(n));
    const VectorField v = min_velocity(f);
    const double norm = std::hypot(b, c);
    const double mag = std::fabs(d) / norm;
    const double sgn = d > 0 ? 1.0 : -1.0;
    for (int i = 1; i < 7; ++i)
      for (int j = 1; j < 7; ++j)
        for (int n = 1; n < 4; ++n) {
          worst = std::max(worst, std::fabs(v.magnitude(i, j, n) - mag));
          worst = std::max(worst, std::fabs(v.vx(i, j, n) - sgn * b / norm));
          worst = std::max(worst, std::fabs(v.vy(i, j, n) - sgn * c / norm));
        }
  }
  CriterionResult r{.id = "C5", .name = "affine-field exactness"};
  r.passed = worst <= kTol;
  r.detail = "max abs err " + fmt(worst) + " (tol " + fmt(kTol) + ", 20 draws)";
  return r;
}

// C6: thinning of a constant intensity matches the Poisson law
CriterionResult crit_thinning(const ValidationConfig& cfg) {
  constexpr double kRate = 50.0;
  constexpr int kSeeds = 200;
  std::vector<double> counts(kSeeds);
  for (int s = 0; s < kSeeds; ++s) {
    const PointPattern p = sample_poisson(
        [](double, double, double) { return kRate; }, Window{0, 1, 0, 1},
        TimeSpan{0, 1}, kRate, Seed{cfg.seed + static_cast<std::uint64_t>(s)});
    counts[s] = static_cast<double>(p.size());
  }
  double mean = 0;
  for (double c : counts) mean += c;
  mean /= kSeeds;
  const double band = 3.0 * std::sqrt(kRate / kSeeds);

  // chi-square GOF against Poisson(50), bin edges wide enough for >= ~5
  // expected per bin
  const std::vector<double> edges = {40.5, 44.5, 48.5, 52.5, 56.5, 60.5};
  const int nbins = static_cast<int>(edges.size()) + 1;
  std::vector<double> expected(nbins, 0.0), observed(nbins, 0.0);
  // Poisson pmf accumulated into the bins
  double pmf = std::exp(-kRate);
  for (int k = 0; k <= 200; ++k) {
    if (k > 0) pmf *= kRate / k;
    int b = 0;
    while (b < nbins - 1 && k > edges[b]) ++b;
    expected[b] += pmf * kSeeds;
  }
  for (double c : counts) {
    int b = 0;
    while (b < nbins - 1 && c > edges[b]) ++b;
    observed[b] += 1.0;
  }
  double stat = 0.0;
  for (int b = 0; b < nbins; ++b)
    stat += (observed[b] - expected[b]) * (observed[b] - expected[b]) / expected[b];
  const double pvalue = stats::gamma_q(0.5 * (nbins - 1), 0.5 * stat);

  CriterionResult r{.id = "C6", .name = "thinning correctness"};
  r.passed = std::fabs(mean - kRate) <= band && pvalue >= 0.01;
  r.detail = "mean " + fmt(mean) + " in 50+-" + fmt(band) + "; GOF p " + fmt(pvalue) +
             " (alpha 0.01)";
  return r;
}

// C7: covariance matrices against brute force, and Monte Carlo field moments
CriterionResult crit_covariance(const ValidationConfig& cfg) {
  const CovarianceSpec spec(1.7, 2.0, 1.5, 0.6);
  SpatioTemporalGrid g3(0, 0, 0, 3, 3, 3, 0.4, 0.3, 1.0);
  const CovMatrices cm = cov_matrices(spec, g3);
  double worst = 0.0;
  const int ns = 9, nt = 3;
  for (int p = 0; p < ns * nt; ++p)
    for (int q = 0; q < ns * nt; ++q) {
      const int sp = p % ns, np = p / ns, sq = q % ns, nq = q / ns;
      const int ip = sp / 3, jp = sp % 3, iq = sq / 3, jq = sq % 3;
      const double h1 = std::hypot(g3.center_x(ip) - g3.center_x(iq),
                                   g3.center_y(jp) - g3.center_y(jq));
      const double want = cov(spec, h1, std::abs(np - nq));
      const double got = cm.temporal(np, nq) * cm.spatial(sp, sq);
      worst = std::max(worst, std::fabs(got - want));
    }

  // Monte Carlo: raw second moments of a zero-mean field on 4x4x3
  SpatioTemporalGrid g4(0, 0, 0, 4, 4, 3, 0.25, 0.25, 1.0);
  const CovarianceSpec spec4(0.8, 3.0, 1.5, 0.5);
  const CovMatrices cm4 = cov_matrices(spec4, g4);
  constexpr int kDraws = 2000;
  const int m = 48;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd v(m);
  for (int d = 0; d < kDraws; ++d) {
    const ScalarField f = sample_gaussian_field(
        spec4, g4, 0.0, Seed{cfg.seed + 1000 + static_cast<std::uint64_t>(d)});
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int n = 0; n < 3; ++n)
          v(n * 16 + i * 4 + j) = f.at(i, j, n);
    acc += v * v.transpose();
  }
  acc /= kDraws;
  double worst_se = 0.0;
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) {
      const int sp = p % 16, np = p / 16, sq = q % 16, nq = q / 16;
      const double truth = cm4.temporal(np, nq) * cm4.spatial(sp, sq);
      const double var_est =
          (cm4.temporal(np, np) * cm4.spatial(sp, sp) * cm4.temporal(nq, nq) *
               cm4.spatial(sq, sq) +
           truth * truth) /
          kDraws;
      worst_se = std::max(worst_se, std::fabs(acc(p, q) - truth) / std::sqrt(var_est));
    }

  CriterionResult r{.id = "C7", .name = "covariance correctness"};
  r.passed = worst <= 1e-12 && worst_se <= 5.0;
  r.detail = "brute-force max abs diff " + fmt(worst) + " (tol 1e-12); MC worst " +
             fmt(worst_se) + " SEs (tol 5)";
  return r;
}

// C8: kernel density integrates to one and hits the single-point value
CriterionResult crit_kernel(const ValidationConfig& cfg) {
  CounterRng rng(Seed{cfg.seed}, 108);
  std::vector<Point2> pts(50);
  for (auto& p : pts) p = {rng.next_double(), rng.next_double()};
  const double h = 0.15;
  const double lo = -8.0 * h, hi = 1.0 + 8.0 * h;
  const int n = 360;
  const double step = (hi - lo) / n;
  double integral = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      integral += kernel_density(pts, h, {lo + (i + 0.5) * step, lo + (j + 0.5) * step});
  integral *= step * step;

  const double h2 = 0.7;
  const std::vector<Point2> one = {{0.3, 0.4}};
  const double got = kernel_density(one, h2, {0.3, 0.4});
  const double want = 1.0 / (2.0 * std::numbers::pi * h2 * h2);

  CriterionResult r{.id = "C8", .name = "kernel normalization"};
  r.passed = std::fabs(integral - 1.0) <= 1e-3 &&
             std::fabs(got - want) <= 1e-12 * want;
  r.detail = "integral " + fmt(integral) + " (1 +- 1e-3); centre value off by " +
             fmt(std::fabs(got - want));
  return r;
}

// C9: latent-field recovery on a 6x6x5 lattice
CriterionResult crit_fit_recovery(const ValidationConfig& cfg) {
  constexpr int kReps = 20;
  constexpr double kOffset = 20.0;
  const CovarianceSpec fit_spec(1.0, 5.0, 1.5, 0.5);
  // verbatim sampler has marginal sigma2/(1-a^2); shrink so draws follow the
  // fitter's prior with marginal sigma2
  const CovarianceSpec sim_spec(1.0 * (1.0 - 0.25), 5.0, 1.5, 0.5);
  SpatioTemporalGrid g(0, 0, 0, 6, 6, 5, 1.0 / 6, 1.0 / 6, 1.0);

  double worst_grad = 0.0, sum_r = 0.0;
  long covered = 0, total = 0;
  for (int rep = 0; rep < kReps; ++rep) {
    const Seed seed{cfg.seed + 2000 + static_cast<std::uint64_t>(rep)};
    const ScalarField zeta = sample_gaussian_field(sim_spec, g, 0.0, seed);
    CounterRng rng(seed, 7);
    std::vector<std::int64_t> counts(g.n_cells(), 0);
    ScalarField offset(g, kOffset);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        for (int n = 0; n < 5; ++n)
          counts[g.index(i, j, n)] =
              rng.next_poisson(kOffset * std::exp(zeta.at(i, j, n)));

    const FitResult fit_res = fit(counts, offset, FitConfig{.spec = fit_spec});
    worst_grad = std::max(worst_grad, fit_res.gradient_norm);

    std::vector<double> truth, est;
    for (std::size_t c = 0; c < g.n_cells(); ++c) {
      truth.push_back(zeta.values()[c]);
      est.push_back(fit_res.zeta[c]);
      const double sd = std::sqrt(fit_res.zeta_variance[c]);
      if (std::fabs(fit_res.zeta[c] - zeta.values()[c]) <= 2.0 * sd) ++covered;
      ++total;
    }
    sum_r += stats::pearson(truth, est);
  }
  const double mean_r = sum_r / kReps;
  const double coverage = static_cast<double>(covered) / total;

  CriterionResult r{.id = "C9", .name = "field fit recovery"};
  r.passed = worst_grad <= 1e-6 && mean_r >= 0.7 && coverage >= 0.8;
  r.detail = "worst grad " + fmt(worst_grad) + " (tol 1e-6); mean r " + fmt(mean_r) +
             " (min 0.7); 2sd coverage " + fmt(coverage) + " (min 0.8)";
  return r;
}

// C10: temporal GLM simulation recovery plus the constant-count identity
CriterionResult crit_temporal_recovery(const ValidationConfig& cfg) {
  constexpr int kReps = 20;
  const double omega = 2.0 * std::numbers::pi / 365.0;
  TemporalBasisSpec spec;
  spec.fourier_order = 1;
  spec.omega = omega;

  int ok = 0;
  for (int rep = 0; rep < kReps; ++rep) {
    CounterRng rng(Seed{cfg.seed + 3000 + static_cast<std::uint64_t>(rep)}, 9);
    std::vector<double> times(365), counts(365);
    for (int t = 0; t < 365; ++t) {
      times[t] = t;
      counts[t] = static_cast<double>(
          rng.next_poisson(std::exp(1.0 + 0.5 * std::cos(omega * t))));
    }
    const TemporalFit f = fit_temporal(times, counts, spec);
    const double truth[3] = {1.0, 0.5, 0.0};  // intercept, cos1, sin1
    bool inside = true;
    for (int c = 0; c < 3; ++c)
      if (std::fabs(f.coefficients(c) - truth[c]) > 3.0 * f.std_errors(c))
        inside = false;
    if (inside) ++ok;
  }

  std::vector<double> t7(30), c7(30, 7.0);
  for (int i = 0; i < 30; ++i) t7[i] = i;
  TemporalBasisSpec intercept_only;
  const TemporalFit cf = fit_temporal(t7, c7, intercept_only);
  const double const_err = std::fabs(cf.coefficients(0) - std::log(7.0));

  CriterionResult r{.id = "C10", .name = "temporal GLM recovery"};
  r.passed = ok >= 18 && const_err <= 1e-10;
  r.detail = std::to_string(ok) + "/20 replicates within 3 SE (min 18); constant fixture err " +
             fmt(const_err) + " (tol 1e-10)";
  return r;
}

// C11: the demo pipeline writes byte-identical files on a rerun
CriterionResult crit_determinism(const ValidationConfig& cfg) {
  namespace fs = std::filesystem;
  CriterionResult r{.id = "C11", .name = "end-to-end determinism"};
  if (cfg.work_dir.empty()) {
    r.detail = "skipped: no work directory configured";
    return r;
  }
  const fs::path base(cfg.work_dir);
  const fs::path run1 = base / "run1", run2 = base / "run2";
  fs::create_directories(run1);
  fs::create_directories(run2);
  run_demo_pipeline(run1.string(), cfg);
  run_demo_pipeline(run2.string(), cfg);

  long files = 0, mismatched = 0;
  for (const auto& entry : fs::directory_iterator(run1)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto other = run2 / entry.path().filename();
    if (!fs::exists(other) ||
        read_text_file(entry.path().string()) != read_text_file(other.string()))
      ++mismatched;
  }
  r.passed = files > 0 && mismatched == 0;
  r.detail = std::to_string(files) + " files compared, " +
             std::to_string(mismatched) + " differ";
  return r;
}

// P1: centred time derivative against the closed form on the run grid.
// Sensitive to the configured dt: a corrupted step degrades the quotient.
CriterionResult crit_pipeline_td(const ValidationConfig& cfg) {
  const SimIntensity oracle(SimIntensityParams::benchmark());
  SpatioTemporalGrid g(0, 0, 0, cfg.nx, cfg.ny, cfg.nt, 1.0 / cfg.nx, 1.0 / cfg.ny,
                       cfg.dt);
  ScalarField f(g, 0.0);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j)
      for (int n = 0; n < g.nt(); ++n)
        f.set(i, j, n, oracle.lambda(g.center_x(i), g.center_y(j), g.center_t(n)));
  std::vector<double> rel;
  for (int n = 1; n + 1 < g.nt(); n += 4) {
    const SpatialSlice td = time_derivative(f, n);
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < g.ny(); ++j) {
        const double truth =
            oracle.dlambda_dt(g.center_x(i), g.center_y(j), g.center_t(n));
        if (std::fabs(truth) < 1e-12) continue;
        rel.push_back(std::fabs(td.at(i, j) - truth) / std::fabs(truth));
      }
  }
  const double med = stats::quantile(rel, 0.5);
  CriterionResult r{.id = "P1", .name = "pipeline time derivative on run grid"};
  r.passed = med <= 0.08;
  r.detail = "median rel err " + fmt(med) + " (tol 0.08) at dt " + fmt(cfg.dt);
  return r;
}

// P2: end-to-end intensity fit on a simulated pattern tracks the truth
CriterionResult crit_pipeline_fit(const ValidationConfig& cfg) {
  SimIntensityParams params = SimIntensityParams::benchmark();
  params.lambda0 = calibrated_lambda0(params, cfg.target_events);
  const SimIntensity oracle(params);

  const Window w{0, 1, 0, 1};
  const TimeSpan ts{0, 1};
  const double lam_max = oracle.upper_bound(ts);
  const PointPattern pattern = sample_poisson(
      [&](double x, double y, double t) { return oracle.lambda(x, y, t); }, w, ts,
      lam_max, Seed{cfg.seed});

  SpatioTemporalGrid g(0, 0, 0, cfg.fit_nx, cfg.fit_ny, cfg.fit_nt, 1.0 / cfg.fit_nx,
                       1.0 / cfg.fit_ny, 1.0 / cfg.fit_nt);
  const std::vector<std::int64_t> counts = bin_counts(pattern, g);
  ScalarField offset(g, g.cell_volume());  // flat offset; zeta absorbs the shape
  const CovarianceSpec spec(2.0, 4.0, 1.5, 0.5);
  const FitResult fit_res = fit(counts, offset, FitConfig{.spec = spec});
  const ScalarField lam_hat = predict_intensity(fit_res);

  std::vector<double> log_true, log_est;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j)
      for (int n = 0; n < g.nt(); ++n) {
        log_true.push_back(
            std::log(oracle.lambda(g.center_x(i), g.center_y(j), g.center_t(n))));
        log_est.push_back(std::log(lam_hat.at(i, j, n) / g.cell_volume()));
      }
  const double r_log = stats::pearson(log_true, log_est);

  CriterionResult r{.id = "P2", .name = "pipeline fit on simulated pattern"};
  r.passed = r_log >= 0.6 && fit_res.gradient_norm <= 1e-6;
  r.detail = "log-intensity correlation " + fmt(r_log) + " (min 0.6), " +
             std::to_string(pattern.size()) + " events, grad " +
             fmt(fit_res.gradient_norm);
  return r;
}

using CriterionFn = CriterionResult (*)(const ValidationConfig&);

const std::vector<std::pair<std::string, CriterionFn>>& registry() {
  static const std::vector<std::pair<std::string, CriterionFn>> reg = {
      {"C1", crit_derivatives},     {"C2", crit_sec4_velocity},
      {"C3", crit_minimality},      {"C4", crit_scale_invariance},
      {"C5", crit_linear_exactness},{"C6", crit_thinning},
      {"C7", crit_covariance},      {"C8", crit_kernel},
      {"C9", crit_fit_recovery},    {"C10", crit_temporal_recovery},
      {"C11", crit_determinism},    {"P1", crit_pipeline_td},
      {"P2", crit_pipeline_fit},
  };
  return reg;
}

}  // namespace

std::vector<std::string> criterion_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, fn] : registry()) ids.push_back(id);
  return ids;
}

CriterionResult run_criterion(const ValidationConfig& cfg, const std::string& id) {
  for (const auto& [cid, fn] : registry()) {
    if (cid != id) continue;
    const auto start = Clock::now();
    CriterionResult r = fn(cfg);
    r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    // wall-clock budgets are part of the contract for these checks
    const double limit = id == "C1" ? 1.0 : id == "C2" ? 5.0 : id == "C9" ? 60.0 : 0.0;
    if (limit > 0.0 && r.seconds > limit) {
      r.passed = false;
      r.detail += "; overtime: " + fmt(r.seconds) + "s > " + fmt(limit) + "s";
    }
    return r;
  }
  throw std::invalid_argument("unknown criterion id " + id);
}

std::vector<CriterionResult> run_acceptance(const ValidationConfig& cfg) {
  std::vector<CriterionResult> out;
  for (const auto& [id, fn] : registry()) out.push_back(run_criterion(cfg, id));
  return out;
}

void run_demo_pipeline(const std::string& out_dir, const ValidationConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const FileMeta meta{.schema = "stvel.pipeline.v1",
                      .config = hash_hex(config_hash(std::to_string(cfg.seed)))};

  SimIntensityParams params = SimIntensityParams::benchmark();
  params.lambda0 = calibrated_lambda0(params, cfg.target_events);
  const SimIntensity oracle(params);
  const auto lambda_fn = [&](double x, double y, double t) {
    return oracle.lambda(x, y, t);
  };

  const Window w{0, 1, 0, 1};
  const TimeSpan ts{0, 1};
  const PointPattern pattern =
      sample_poisson(lambda_fn, w, ts, oracle.upper_bound(ts), Seed{cfg.seed});
  write_pattern_csv((fs::path(out_dir) / "pattern.csv").string(), pattern,
                    {.schema = "stvel.pattern.v1", .config = meta.config});

  SpatioTemporalGrid g(0, 0, 0, cfg.nx, cfg.ny, cfg.nt, 1.0 / cfg.nx, 1.0 / cfg.ny,
                       cfg.dt);
  ScalarField intensity(g, 0.0);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j)
      for (int n = 0; n < g.nt(); ++n)
        intensity.set(i, j, n, oracle.lambda(g.center_x(i), g.center_y(j), g.center_t(n)));
  write_field_csv((fs::path(out_dir) / "intensity.csv").string(), intensity,
                  {.schema = "stvel.grid.v1", .config = meta.config});

  write_oracle_csv((fs::path(out_dir) / "golden_velocity.csv").string(), oracle, g,
                   {0.225, 0.575, 0.875},
                   {.schema = "stvel.oracle.v1", .config = meta.config});

  const VectorField vel = min_velocity(intensity);
  write_velocity_csv((fs::path(out_dir) / "velocity.csv").string(), vel,
                     {.schema = "stvel.velocity.v1", .config = meta.config});
}

std::string format_report(const std::vector<CriterionResult>& results,
                          bool with_timings) {
  std::ostringstream os;
  for (const auto& r : results) {
    os << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << ": "
       << r.detail;
    if (with_timings) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " [%.2fs]", r.seconds);
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace stvel
