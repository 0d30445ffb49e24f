// stvel: spatio-temporal intensity and spread-velocity estimation pipeline.
// Subcommands: simulate, fit-temporal, fit, velocity, validate.
// Exit codes: 0 ok, 1 internal error, 2 user/config error, 3 validation failure.
#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "run_config.hpp"
#include "stvel/analytic.hpp"
#include "stvel/errors.hpp"
#include "stvel/io.hpp"
#include "stvel/simulate.hpp"
#include "stvel/spatial.hpp"
#include "stvel/stfit.hpp"
#include "stvel/temporal.hpp"
#include "stvel/validation.hpp"
#include "stvel/velocity.hpp"

namespace fs = std::filesystem;
using namespace stvel;
using cli::RunConfig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitValidation = 3;

struct CommonArgs {
  std::string config_path;
  std::string output_dir;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig cfg = args.config_path.empty()
                      ? cli::default_run_config(args.overrides)
                      : cli::load_run_config(args.config_path, args.overrides);
  if (const char* env = std::getenv("STVEL_OUTPUT_DIR"); env && cfg.output_dir == ".")
    cfg.output_dir = env;
  if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
  if (args.seed_set) cfg.seed = args.seed;
  fs::create_directories(cfg.output_dir);
  return cfg;
}

FileMeta meta_for(const RunConfig& cfg, const std::string& schema) {
  return {.schema = schema, .config = cfg.config_digest};
}

// removes everything this run wrote when a later stage fails
class OutputTracker {
 public:
  std::string track(const std::string& path) {
    paths_.push_back(path);
    return path;
  }
  void discard_all() {
    for (const auto& p : paths_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  std::vector<std::string> paths_;
};

int cmd_simulate(const RunConfig& cfg) {
  const SpatioTemporalGrid grid = cfg.make_grid();
  const fs::path out(cfg.output_dir);
  OutputTracker tracker;

  PointPattern pattern({}, grid.window(), grid.tspan());
  ScalarField intensity(grid, 0.0);
  double integral = 0.0;

  if (cfg.simulate.source == "oracle") {
    SimIntensityParams params = SimIntensityParams::benchmark();
    params.lambda0 = cfg.simulate.lambda0
                         ? *cfg.simulate.lambda0
                         : calibrated_lambda0(params, cfg.simulate.target_events);
    const SimIntensity oracle(params);
    const auto lam = [&](double x, double y, double t) {
      return oracle.lambda(x, y, t);
    };
    const double lam_max = oracle.upper_bound(grid.tspan());
    const double expected_candidates =
        lam_max * grid.window().area() * grid.tspan().length();
    if (expected_candidates > 2e7)
      throw ConfigError(
          "thinning would need ~" + std::to_string(expected_candidates) +
          " candidates; lower simulate.lambda0 or use simulate.target_events");
    pattern = sample_poisson(lam, grid.window(), grid.tspan(), lam_max,
                             Seed{cfg.seed});
    for (int i = 0; i < grid.nx(); ++i)
      for (int j = 0; j < grid.ny(); ++j)
        for (int n = 0; n < grid.nt(); ++n)
          intensity.set(i, j, n,
                        oracle.lambda(grid.center_x(i), grid.center_y(j),
                                      grid.center_t(n)));
    integral = oracle.integral(grid.window(), grid.tspan(), 64);
    write_oracle_csv(tracker.track((out / "golden_velocity.csv").string()), oracle,
                     grid, cfg.simulate.golden_times,
                     meta_for(cfg, "stvel.oracle.v1"));
  } else {
    // lgcp: draw the latent field, expose the realized intensity, then thin
    const CovarianceSpec spec(cfg.simulate.sigma2, cfg.simulate.kappa,
                              cfg.simulate.nu, cfg.simulate.a);
    const ScalarField zeta =
        sample_gaussian_field(spec, grid, cfg.simulate.beta, Seed{cfg.seed});
    double lam_max = 0.0;
    for (int i = 0; i < grid.nx(); ++i)
      for (int j = 0; j < grid.ny(); ++j)
        for (int n = 0; n < grid.nt(); ++n) {
          const double v =
              cfg.simulate.eta * cfg.simulate.mu * std::exp(zeta.at(i, j, n));
          intensity.set(i, j, n, v);
          lam_max = std::max(lam_max, v);
          integral += v * grid.cell_volume();
        }
    const auto lam = [&](double x, double y, double t) {
      const auto c = grid.locate(x, y, t);
      return c ? intensity.at(c->i, c->j, c->n) : 0.0;
    };
    pattern =
        sample_poisson(lam, grid.window(), grid.tspan(), lam_max, Seed{cfg.seed});
  }

  write_pattern_csv(tracker.track((out / "pattern.csv").string()), pattern,
                    meta_for(cfg, "stvel.pattern.v1"));
  write_field_csv(tracker.track((out / "intensity.csv").string()), intensity,
                  meta_for(cfg, "stvel.grid.v1"));
  std::printf("events: %zu\nintensity integral: %s\n", pattern.size(),
              format_double(integral).c_str());
  return kExitOk;
}

int cmd_fit_temporal(const RunConfig& cfg) {
  if (cfg.inputs.counts.empty())
    throw ConfigError("fit-temporal needs inputs.counts (t,count CSV)");
  const CountsSeries series = read_counts_csv(cfg.inputs.counts);
  const TemporalFit fit = fit_temporal(series.times, series.counts, cfg.temporal);
  const fs::path out(cfg.output_dir);
  write_text_file((out / "temporal_fit.json").string(),
                  temporal_fit_to_json(fit, meta_for(cfg, "stvel.temporal-fit.v1")));
  std::printf("temporal fit: %d iterations, deviance %s, gradient %s\n",
              fit.iterations, format_double(fit.deviance).c_str(),
              format_double(fit.gradient_norm).c_str());
  return kExitOk;
}

ScalarField build_offset(const RunConfig& cfg, const SpatioTemporalGrid& grid,
                         const PointPattern& cases, const TemporalFit& temporal,
                         long long total_cases) {
  ScalarField offset(grid, missing());
  std::vector<double> eta(grid.n_spatial(), missing());

  if (cfg.offset.mode == "raster") {
    const Raster raster = read_esri_ascii(cfg.inputs.raster);
    const RasterOffset ro = raster_offset(raster, grid);
    if (ro.nodata_cells > 0)
      std::fprintf(stderr, "warning: %ld nodata raster cells treated as zero\n",
                   ro.nodata_cells);
    for (int i = 0; i < grid.nx(); ++i)
      for (int j = 0; j < grid.ny(); ++j)
        eta[grid.spatial_index(i, j)] = ro.offset.at(i, j, 0);
  } else if (cfg.offset.mode == "kernel") {
    std::vector<Point2> pts;
    pts.reserve(cases.size());
    for (const Event& e : cases.events()) pts.push_back({e.x, e.y});
    for (int i = 0; i < grid.nx(); ++i)
      for (int j = 0; j < grid.ny(); ++j)
        eta[grid.spatial_index(i, j)] =
            grid.cell_area() * kernel_density(pts, cfg.offset.bandwidth,
                                              {grid.center_x(i), grid.center_y(j)});
  } else {
    for (auto& v : eta) v = cfg.offset.constant * grid.cell_area();
  }

  // expected count per cell: eta mass x fitted daily trend x step length
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j) {
      if (grid.masked(i, j)) continue;
      const double e = eta[grid.spatial_index(i, j)];
      if (is_missing(e) || e <= 0.0) continue;
      for (int n = 0; n < grid.nt(); ++n)
        offset.set(i, j, n,
                   e * eval_mu(temporal, grid.center_t(n)) * grid.dt());
    }

  if (cfg.offset.rescale_to_total) {
    double total = 0.0;
    for (double v : offset.values())
      if (!is_missing(v)) total += v;
    if (total <= 0.0) throw ConfigError("offset rescale impossible: zero mass");
    const double scale = static_cast<double>(total_cases) / total;
    for (double& v : offset.values())
      if (!is_missing(v)) v *= scale;
  }
  return offset;
}

int cmd_fit(const RunConfig& cfg) {
  const fs::path out(cfg.output_dir);
  OutputTracker tracker;
  std::string stage = "setup";
  try {
    const SpatioTemporalGrid grid = cfg.make_grid();

    stage = "inputs";
    if (cfg.inputs.cases.empty())
      throw ConfigError("fit needs inputs.cases (x,y,t CSV)");
    const PointPattern cases = read_pattern_csv(cfg.inputs.cases);

    stage = "temporal";
    TemporalFit temporal;
    if (!cfg.inputs.counts.empty()) {
      const CountsSeries series = read_counts_csv(cfg.inputs.counts);
      temporal = fit_temporal(series.times, series.counts, cfg.temporal);
    } else {
      // daily totals derived from the cases themselves
      std::vector<double> times, counts;
      const double t_lo = grid.t0();
      const int steps = grid.nt();
      std::vector<double> tally(steps, 0.0);
      for (const Event& e : cases.events()) {
        const int n = std::clamp(
            static_cast<int>(std::floor((e.t - t_lo) / grid.dt())), 0, steps - 1);
        tally[n] += 1.0;
      }
      for (int n = 0; n < steps; ++n) {
        times.push_back(grid.center_t(n));
        counts.push_back(tally[n]);
      }
      temporal = fit_temporal(times, counts, cfg.temporal);
    }
    write_text_file(tracker.track((out / "temporal_fit.json").string()),
                    temporal_fit_to_json(temporal, meta_for(cfg, "stvel.temporal-fit.v1")));

    stage = "spatial-offset";
    const ScalarField offset = build_offset(cfg, grid, cases, temporal,
                                            static_cast<long long>(cases.size()));
    write_field_csv(tracker.track((out / "offset.csv").string()), offset,
                    meta_for(cfg, "stvel.grid.v1"));

    stage = "field-fit";
    const std::vector<std::int64_t> counts = bin_counts(cases, grid);
    FitConfig fit_cfg{.spec = cfg.fit_candidates().front(),
                      .max_iterations = cfg.fit.max_iterations,
                      .tolerance = cfg.fit.tolerance};
    const ProfileResult profile =
        profile_hyperparameters(counts, offset, cfg.fit_candidates(), fit_cfg);
    std::printf("hyperparameter profile (evidence by candidate):\n");
    const auto cands = cfg.fit_candidates();
    for (std::size_t k = 0; k < cands.size(); ++k) {
      std::printf("  %c sigma2=%-8g kappa=%-8g a=%-8g evidence=%s\n",
                  static_cast<int>(k) == profile.best_index ? '*' : ' ',
                  cands[k].sigma2, cands[k].kappa, cands[k].a,
                  is_missing(profile.evidence[k])
                      ? "failed"
                      : format_double(profile.evidence[k]).c_str());
    }
    const FitResult& best = *profile.fits[profile.best_index];
    write_text_file(tracker.track((out / "fit.json").string()),
                    fit_result_to_json(best, meta_for(cfg, "stvel.fit.v1")));

    stage = "prediction";
    const ScalarField counts_hat = predict_intensity(best);
    ScalarField lambda_hat(grid, missing());
    for (std::size_t k = 0; k < counts_hat.values().size(); ++k) {
      const double v = counts_hat.values()[k];
      if (!is_missing(v)) lambda_hat.values()[k] = v / grid.cell_volume();
    }
    write_field_csv(tracker.track((out / "lambda.csv").string()), lambda_hat,
                    meta_for(cfg, "stvel.grid.v1"));
    return kExitOk;
  } catch (...) {
    std::fprintf(stderr, "fit aborted in stage '%s'\n", stage.c_str());
    tracker.discard_all();
    throw;
  }
}

struct VelocityArgs {
  std::string input;
  std::vector<int> times;
};

int cmd_velocity(const RunConfig& cfg, const VelocityArgs& args) {
  if (args.input.empty()) throw ConfigError("velocity needs --input <grid csv>");
  const ScalarField field = read_field_csv(args.input);
  const SpatioTemporalGrid& grid = field.grid();
  const VelocityOptions opt = cfg.velocity_options();

  std::vector<int> times = !args.times.empty() ? args.times : cfg.velocity.times;
  if (times.empty()) {
    const int last = opt.time_scheme == TimeScheme::SymmetricWithEndpoint
                         ? grid.nt() - 1
                         : grid.nt() - 2;
    for (int n = 1; n <= last; ++n) times.push_back(n);
  }

  const fs::path out(cfg.output_dir);
  const VectorField vel = min_velocity(field, opt);
  write_velocity_csv((out / "velocity.csv").string(), vel,
                     meta_for(cfg, "stvel.velocity.v1"));

  for (const int n : times) {
    const SpatialSlice td = time_derivative(field, n, opt);  // throws on bad n
    SpatialSlice abs_td = td;
    for (double& v : abs_td.values)
      if (!is_missing(v)) v = std::fabs(v);
    const SpatialSlice gn = gradient_norm(field, n, opt);
    SpatialSlice smin = SpatialSlice::like(grid, missing());
    for (int i = 0; i < grid.nx(); ++i)
      for (int j = 0; j < grid.ny(); ++j)
        smin.set(i, j, vel.magnitude(i, j, n));

    const std::string suffix = std::to_string(n) + ".csv";
    write_slice_csv((out / ("dldt_" + suffix)).string(), abs_td,
                    meta_for(cfg, "stvel.slice.v1"));
    write_slice_csv((out / ("gradnorm_" + suffix)).string(), gn,
                    meta_for(cfg, "stvel.slice.v1"));
    write_slice_csv((out / ("smin_" + suffix)).string(), smin,
                    meta_for(cfg, "stvel.slice.v1"));

    // direction table for the quiver overlay
    std::string dir_csv = "# schema=stvel.direction.v1 config=" +
                          cfg.config_digest + "\nx,y,smin,vx,vy\n";
    for (int i = 0; i < grid.nx(); ++i)
      for (int j = 0; j < grid.ny(); ++j) {
        dir_csv += format_double(grid.center_x(i)) + "," +
                   format_double(grid.center_y(j)) + ",";
        if (vel.defined(i, j, n))
          dir_csv += format_double(vel.magnitude(i, j, n)) + "," +
                     format_double(vel.vx(i, j, n)) + "," +
                     format_double(vel.vy(i, j, n));
        else
          dir_csv += ",,";
        dir_csv += "\n";
      }
    write_text_file((out / ("direction_" + suffix)).string(), dir_csv);
  }
  std::printf("velocity written for %zu time slice(s)\n", times.size());
  return kExitOk;
}

int cmd_validate(const RunConfig& cfg) {
  ValidationConfig vc;
  vc.seed = cfg.seed;
  vc.nx = cfg.grid.nx;
  vc.ny = cfg.grid.ny;
  vc.nt = cfg.grid.nt;
  vc.dt = cfg.grid.dt;
  vc.fit_nx = cfg.validate.fit_nx;
  vc.fit_ny = cfg.validate.fit_ny;
  vc.fit_nt = cfg.validate.fit_nt;
  vc.target_events = cfg.validate.target_events;
  vc.work_dir = cfg.output_dir;

  const auto results = run_acceptance(vc);
  std::fputs(format_report(results).c_str(), stdout);
  write_text_file((fs::path(cfg.output_dir) / "report.txt").string(),
                  format_report(results, /*with_timings=*/false));

  for (const auto& r : results)
    if (!r.passed) return kExitValidation;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatio-temporal intensity and spread-velocity pipeline"};
  app.require_subcommand(1);

  CommonArgs common;
  VelocityArgs vel_args;
  app.add_option("--config", common.config_path, "run configuration JSON");
  app.add_option("--output-dir", common.output_dir,
                 "output directory (overrides config and STVEL_OUTPUT_DIR)");
  app.add_option("--seed", common.seed, "seed override")
      ->each([&](const std::string&) { common.seed_set = true; });
  app.add_option("--set", common.overrides,
                 "config field override, section.field=value (repeatable)");

  auto* simulate = app.add_subcommand("simulate", "draw a synthetic point pattern");
  auto* fit_temporal_cmd =
      app.add_subcommand("fit-temporal", "fit the temporal trend to daily counts");
  auto* fit_cmd = app.add_subcommand("fit", "full intensity fit: temporal, offset, field");
  auto* velocity = app.add_subcommand("velocity", "finite-difference velocity maps");
  velocity->add_option("--input", vel_args.input, "estimated intensity grid CSV");
  velocity->add_option("--time", vel_args.times, "time indices (repeatable)");
  auto* validate = app.add_subcommand("validate", "run the acceptance checks");

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = resolve_config(common);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (fit_temporal_cmd->parsed()) return cmd_fit_temporal(cfg);
    if (fit_cmd->parsed()) return cmd_fit(cfg);
    if (velocity->parsed()) return cmd_velocity(cfg, vel_args);
    if (validate->parsed()) return cmd_validate(cfg);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "unsupported index: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInternal;
  }
}
