#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stvel {

struct CriterionResult {
  std::string id;
  std::string name;
  bool passed = false;
  double seconds = 0.0;
  std::string detail;  ///< observed values vs thresholds
};

/// Knobs for the validation suite. The defaults reproduce the benchmark
/// study at desk scale; the validate command maps its run configuration
/// onto these fields.
struct ValidationConfig {
  std::uint64_t seed = 987654321ull;

  // benchmark grid (unit cube)
  int nx = 30, ny = 30, nt = 20;
  double dt = 0.05;

  // pipeline demo: coarse fit grid and expected event count
  int fit_nx = 10, fit_ny = 10, fit_nt = 6;
  double target_events = 1500.0;

  /// Directory for the determinism check and pipeline outputs; empty skips
  /// file-writing checks.
  std::string work_dir;
};

/// All acceptance criteria (C1..C11) plus the pipeline checks (P1, P2).
std::vector<CriterionResult> run_acceptance(const ValidationConfig& cfg);

/// One criterion by id ("C3"); throws std::invalid_argument for unknown ids.
CriterionResult run_criterion(const ValidationConfig& cfg, const std::string& id);

std::vector<std::string> criterion_ids();

/// Deterministic end-to-end run (simulate - velocity - fit) writing its
/// outputs under out_dir. Identical seeds give byte-identical files.
void run_demo_pipeline(const std::string& out_dir, const ValidationConfig& cfg);

/// One line per criterion. Timings are included only when requested so the
/// written report stays byte-stable across reruns.
std::string format_report(const std::vector<CriterionResult>& results,
                          bool with_timings = true);

namespace stats {
/// Regularized upper incomplete gamma Q(a, x); chi-square p-value is
/// Q(df/2, stat/2).
double gamma_q(double a, double x);
double pearson(const std::vector<double>& x, const std::vector<double>& y);
double quantile(std::vector<double> v, double p);
}  // namespace stats

}  // namespace stvel
