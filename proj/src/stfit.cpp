#include "stvel/stfit.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "stvel/errors.hpp"

namespace stvel {

namespace {

struct ActiveCells {
  std::vector<std::size_t> cell_of;  // active index -> grid cell index
  std::vector<Eigen::Index> active_of;  // grid cell -> active index or -1
};

ActiveCells find_active(const ScalarField& offset) {
  const auto& g = offset.grid();
  ActiveCells a;
  a.active_of.assign(g.n_cells(), -1);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j)
      for (int n = 0; n < g.nt(); ++n) {
        const std::size_t c = g.index(i, j, n);
        const double e = offset.values()[c];
        if (g.masked(i, j) || is_missing(e)) continue;
        if (!(e > 0.0))
          throw std::invalid_argument("offsets must be positive on unmasked cells");
        a.active_of[c] = static_cast<Eigen::Index>(a.cell_of.size());
        a.cell_of.push_back(c);
      }
  if (a.cell_of.empty()) throw std::invalid_argument("no active cells to fit");
  return a;
}

// Correlation over the active cells in time-major pair order, then
// restricted; its inverse over sigma2 is the prior precision.
Eigen::MatrixXd active_correlation(const CovarianceSpec& spec,
                                   const SpatioTemporalGrid& g,
                                   const ActiveCells& act) {
  CovarianceSpec corr_spec = spec;
  corr_spec.sigma2 = 1.0;
  const CovMatrices cm = cov_matrices(corr_spec, g, /*normalized_temporal=*/true);

  const auto m = static_cast<Eigen::Index>(act.cell_of.size());
  const int nt = g.nt();
  Eigen::MatrixXd c(m, m);
  for (Eigen::Index p = 0; p < m; ++p) {
    const std::size_t cp = act.cell_of[p];
    const auto sp = static_cast<Eigen::Index>(cp / nt);
    const int np = static_cast<int>(cp % nt);
    for (Eigen::Index q = 0; q <= p; ++q) {
      const std::size_t cq = act.cell_of[q];
      const auto sq = static_cast<Eigen::Index>(cq / nt);
      const int nq = static_cast<int>(cq % nt);
      const double v = cm.spatial(sp, sq) * cm.temporal(np, nq);
      c(p, q) = v;
      c(q, p) = v;
    }
  }
  return c;
}

double logdet_from_lower(const Eigen::MatrixXd& l) {
  return 2.0 * l.diagonal().array().log().sum();
}

}  // namespace

FitResult fit(const std::vector<std::int64_t>& counts, const ScalarField& offset,
              const FitConfig& config) {
  const auto& g = offset.grid();
  if (counts.size() != g.n_cells())
    throw std::invalid_argument("counts must have one entry per grid cell");
  for (std::int64_t c : counts)
    if (c < 0) throw std::invalid_argument("counts must be non-negative");

  const ActiveCells act = find_active(offset);
  const auto m = static_cast<Eigen::Index>(act.cell_of.size());

  const Eigen::MatrixXd corr = active_correlation(config.spec, g, act);
  const JitteredCholesky corr_chol = chol_with_jitter(corr);
  Eigen::MatrixXd jittered = corr;
  jittered.diagonal().array() += corr_chol.jitter;
  Eigen::MatrixXd prec =
      Eigen::LLT<Eigen::MatrixXd>(jittered).solve(Eigen::MatrixXd::Identity(m, m));
  prec /= config.spec.sigma2;
  const double logdet_q =
      -(logdet_from_lower(corr_chol.lower) + m * std::log(config.spec.sigma2));

  Eigen::VectorXd y(m), log_e(m), e(m);
  for (Eigen::Index p = 0; p < m; ++p) {
    y(p) = static_cast<double>(counts[act.cell_of[p]]);
    e(p) = offset.values()[act.cell_of[p]];
    log_e(p) = std::log(e(p));
  }

  // x = (theta_1..theta_m, beta); flat prior on beta
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
  double beta = std::log((y.sum() + 0.5) / e.sum());
  int clamp_hits = 0;

  const auto clamp_state = [&]() {
    for (Eigen::Index p = 0; p < m; ++p) {
      const double z = beta + theta(p);
      if (z > config.zeta_clamp) {
        theta(p) = config.zeta_clamp - beta;
        ++clamp_hits;
      } else if (z < -config.zeta_clamp) {
        theta(p) = -config.zeta_clamp - beta;
        ++clamp_hits;
      }
    }
  };
  const auto objective = [&](const Eigen::VectorXd& th, double b) {
    const Eigen::VectorXd mu = (e.array() * (b + th.array()).exp()).matrix();
    const double lik = (y.array() * (log_e.array() + b + th.array())).sum() - mu.sum();
    return lik - 0.5 * th.dot(prec * th);
  };

  clamp_state();
  double obj = objective(theta, beta);
  std::vector<double> trace{obj};
  double grad_norm = 0.0;
  int iter = 0;
  Eigen::MatrixXd h(m + 1, m + 1);

  for (; iter < config.max_iterations; ++iter) {
    const Eigen::VectorXd mu = (e.array() * (beta + theta.array()).exp()).matrix();
    const Eigen::VectorXd qtheta = prec * theta;
    Eigen::VectorXd grad(m + 1);
    grad.head(m) = y - mu - qtheta;
    grad(m) = (y - mu).sum();
    grad_norm = grad.norm();
    if (grad_norm <= config.tolerance) break;

    h.topLeftCorner(m, m) = prec;
    h.topLeftCorner(m, m).diagonal() += mu;
    h.block(0, m, m, 1) = mu;
    h.block(m, 0, 1, m) = mu.transpose();
    h(m, m) = mu.sum();

    Eigen::LLT<Eigen::MatrixXd> llt(h);
    Eigen::VectorXd delta;
    if (llt.info() == Eigen::Success) {
      delta = llt.solve(grad);
    } else {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
      delta = ldlt.solve(grad);
      if (!delta.allFinite())
        throw ConditioningError("singular Hessian in the Newton step",
                                h.diagonal().minCoeff());
    }

    // the objective is evaluated to roughly 1e-15 relative accuracy, so the
    // line search tolerates that much apparent decrease; otherwise Newton
    // stalls within rounding noise of the mode
    const double slack = 1e-10 * (1.0 + std::fabs(obj));
    double step = 1.0;
    bool accepted = false;
    for (int half = 0; half <= 30; ++half) {
      const Eigen::VectorXd th_cand = theta + step * delta.head(m);
      const double b_cand = beta + step * delta(m);
      const double cand = objective(th_cand, b_cand);
      if (std::isfinite(cand) && cand >= obj - slack) {
        theta = th_cand;
        beta = b_cand;
        obj = cand;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted)
      throw OptimizationError(
          "Newton step failed to improve the penalized likelihood", trace);
    clamp_state();
    obj = objective(theta, beta);
    trace.push_back(obj);
  }
  if (grad_norm > config.tolerance)
    throw ConvergenceError("field fit did not converge", grad_norm);

  // Laplace pieces at the mode
  const Eigen::VectorXd mu = (e.array() * (beta + theta.array()).exp()).matrix();
  h.topLeftCorner(m, m) = prec;
  h.topLeftCorner(m, m).diagonal() += mu;
  h.block(0, m, m, 1) = mu;
  h.block(m, 0, 1, m) = mu.transpose();
  h(m, m) = mu.sum();
  Eigen::LLT<Eigen::MatrixXd> hllt(h);
  if (hllt.info() != Eigen::Success)
    throw ConditioningError("Hessian not positive definite at the mode",
                            h.diagonal().minCoeff());
  const Eigen::MatrixXd hinv =
      hllt.solve(Eigen::MatrixXd::Identity(m + 1, m + 1));
  const double logdet_h = logdet_from_lower(Eigen::MatrixXd(hllt.matrixL()));

  FitResult out{.grid = g, .spec = config.spec};
  out.beta = beta;
  out.zeta.assign(g.n_cells(), missing());
  out.zeta_variance.assign(g.n_cells(), missing());
  out.offset.assign(offset.values().begin(), offset.values().end());
  for (Eigen::Index p = 0; p < m; ++p) {
    out.zeta[act.cell_of[p]] = beta + theta(p);
    // Var(beta + theta_p)
    out.zeta_variance[act.cell_of[p]] =
        std::max(0.0, hinv(p, p) + hinv(m, m) + 2.0 * hinv(p, m));
  }
  out.loglik_trace = std::move(trace);
  out.log_evidence =
      obj + 0.5 * logdet_q - 0.5 * logdet_h + 0.5 * std::log(2.0 * std::numbers::pi);
  out.gradient_norm = grad_norm;
  out.iterations = iter;
  out.clamp_hits = clamp_hits;
  return out;
}

ProfileResult profile_hyperparameters(const std::vector<std::int64_t>& counts,
                                      const ScalarField& offset,
                                      const std::vector<CovarianceSpec>& candidates,
                                      const FitConfig& base) {
  if (candidates.empty())
    throw std::invalid_argument("need at least one candidate spec");
  ProfileResult out;
  out.evidence.assign(candidates.size(), missing());
  out.fits.resize(candidates.size());
  std::string failures;
  int n_ok = 0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    FitConfig cfg = base;
    cfg.spec = candidates[k];
    try {
      out.fits[k] = fit(counts, offset, cfg);
      out.evidence[k] = out.fits[k]->log_evidence;
      ++n_ok;
    } catch (const std::exception& err) {
      failures += "candidate " + std::to_string(k) + ": " + err.what() + "; ";
    }
  }
  if (n_ok == 0)
    throw OptimizationError("every hyperparameter candidate failed: " + failures, {});
  int best = -1;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (is_missing(out.evidence[k])) continue;
    if (best < 0 || out.evidence[k] > out.evidence[best]) best = static_cast<int>(k);
  }
  out.best_index = best;
  return out;
}

ScalarField predict_intensity(const FitResult& result, bool lognormal_mean) {
  ScalarField out(result.grid, missing());
  for (std::size_t c = 0; c < result.zeta.size(); ++c) {
    const double z = result.zeta[c];
    const double e = result.offset[c];
    if (is_missing(z) || is_missing(e)) continue;
    double v = e * std::exp(z);
    if (lognormal_mean) v *= std::exp(0.5 * result.zeta_variance[c]);
    out.values()[c] = v;
  }
  return out;
}

}  // namespace stvel
