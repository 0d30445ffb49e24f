#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stvel/covariance.hpp"
#include "stvel/temporal.hpp"
#include "stvel/velocity.hpp"

namespace stvel::cli {

/// Versioned run configuration (schema stvel.config.v1). Unknown fields are
/// rejected so typos fail loudly before any computation.
struct RunConfig {
  std::uint64_t seed = 20250807ull;
  std::string output_dir = ".";

  struct Grid {
    double x0 = 0.0, y0 = 0.0, t0 = 0.0;
    int nx = 30, ny = 30, nt = 20;
    double dx = 1.0 / 30, dy = 1.0 / 30, dt = 1.0 / 20;
  } grid;

  struct Simulate {
    std::string source = "oracle";  // "oracle" | "lgcp"
    double target_events = 1500.0;
    std::optional<double> lambda0;  // overrides the calibration
    std::vector<double> golden_times = {0.225, 0.575, 0.875};
    // lgcp source
    double beta = 0.0;
    double eta = 1.0;
    double mu = 30.0;
    double sigma2 = 1.0, kappa = 4.0, nu = 1.5, a = 0.5;
  } simulate;

  struct Inputs {
    std::string cases;   // x,y,t CSV
    std::string counts;  // t,count CSV
    std::string raster;  // ESRI ASCII
  } inputs;

  struct Offset {
    std::string mode = "constant";  // "kernel" | "raster" | "constant"
    double bandwidth = 0.1;
    double constant = 1.0;
    bool rescale_to_total = false;
  } offset;

  TemporalBasisSpec temporal;

  struct Fit {
    std::vector<double> sigma2 = {1.0};
    std::vector<double> kappa = {4.0};
    std::vector<double> a = {0.5};
    double nu = 1.5;
    int max_iterations = 100;
    double tolerance = 1e-8;
  } fit;

  struct Velocity {
    double gradient_floor = 1e-6;
    std::string scheme = "symmetric";   // | "symmetric-endpoint"
    std::string boundary = "mask";      // | "one-sided"
    std::vector<int> times;             // empty: every index the scheme allows
  } velocity;

  struct Validate {
    int fit_nx = 10, fit_ny = 10, fit_nt = 6;
    double target_events = 1500.0;
  } validate;

  /// Hash of the canonical serialized form; stamped into output headers.
  std::string config_digest;

  SpatioTemporalGrid make_grid() const;
  VelocityOptions velocity_options() const;
  std::vector<CovarianceSpec> fit_candidates() const;
};

/// Parse and validate a config document; empty text yields the defaults.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides = {});
RunConfig default_run_config(const std::vector<std::string>& overrides = {});

/// Apply "dotted.path=json-value" overrides to a config document.
std::string apply_overrides(std::string json_text,
                            const std::vector<std::string>& overrides);

}  // namespace stvel::cli
