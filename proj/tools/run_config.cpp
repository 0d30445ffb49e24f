#include "run_config.hpp"

#include <filesystem>

#include <json.hpp>

#include "stvel/errors.hpp"
#include "stvel/io.hpp"

namespace stvel::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const char* where,
                    std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) known = true;
    if (!known)
      throw ConfigError(std::string("unknown field '") + key + "' in " + where);
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

SpatioTemporalGrid RunConfig::make_grid() const {
  return SpatioTemporalGrid(grid.x0, grid.y0, grid.t0, grid.nx, grid.ny, grid.nt,
                            grid.dx, grid.dy, grid.dt);
}

VelocityOptions RunConfig::velocity_options() const {
  VelocityOptions opt;
  opt.gradient_floor = velocity.gradient_floor;
  if (velocity.scheme == "symmetric")
    opt.time_scheme = TimeScheme::Symmetric;
  else if (velocity.scheme == "symmetric-endpoint")
    opt.time_scheme = TimeScheme::SymmetricWithEndpoint;
  else
    throw ConfigError("velocity.scheme must be 'symmetric' or 'symmetric-endpoint'");
  if (velocity.boundary == "mask")
    opt.boundary = BoundaryPolicy::Mask;
  else if (velocity.boundary == "one-sided")
    opt.boundary = BoundaryPolicy::OneSided;
  else
    throw ConfigError("velocity.boundary must be 'mask' or 'one-sided'");
  return opt;
}

std::vector<CovarianceSpec> RunConfig::fit_candidates() const {
  std::vector<CovarianceSpec> out;
  for (const double s2 : fit.sigma2)
    for (const double k : fit.kappa)
      for (const double a : fit.a) out.emplace_back(s2, k, fit.nu, a);
  if (out.empty()) throw ConfigError("fit candidate grid is empty");
  return out;
}

RunConfig parse_run_config(const std::string& json_text) {
  RunConfig cfg;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  reject_unknown(j, "config",
                 {"schema", "seed", "output_dir", "grid", "simulate", "inputs",
                  "offset", "temporal", "fit", "velocity", "validate"});
  if (!j.contains("schema") || j.at("schema") != "stvel.config.v1")
    throw ConfigError("config schema must be 'stvel.config.v1'");

  get_if(j, "seed", cfg.seed);
  get_if(j, "output_dir", cfg.output_dir);

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    reject_unknown(g, "grid", {"x0", "y0", "t0", "nx", "ny", "nt", "dx", "dy", "dt"});
    get_if(g, "x0", cfg.grid.x0);
    get_if(g, "y0", cfg.grid.y0);
    get_if(g, "t0", cfg.grid.t0);
    get_if(g, "nx", cfg.grid.nx);
    get_if(g, "ny", cfg.grid.ny);
    get_if(g, "nt", cfg.grid.nt);
    get_if(g, "dx", cfg.grid.dx);
    get_if(g, "dy", cfg.grid.dy);
    get_if(g, "dt", cfg.grid.dt);
  }

  if (j.contains("simulate")) {
    const json& s = j.at("simulate");
    reject_unknown(s, "simulate",
                   {"source", "target_events", "lambda0", "golden_times", "beta",
                    "eta", "mu", "sigma2", "kappa", "nu", "a"});
    get_if(s, "source", cfg.simulate.source);
    if (cfg.simulate.source != "oracle" && cfg.simulate.source != "lgcp")
      throw ConfigError("simulate.source must be 'oracle' or 'lgcp'");
    get_if(s, "target_events", cfg.simulate.target_events);
    if (s.contains("lambda0")) cfg.simulate.lambda0 = s.at("lambda0").get<double>();
    get_if(s, "golden_times", cfg.simulate.golden_times);
    get_if(s, "beta", cfg.simulate.beta);
    get_if(s, "eta", cfg.simulate.eta);
    get_if(s, "mu", cfg.simulate.mu);
    get_if(s, "sigma2", cfg.simulate.sigma2);
    get_if(s, "kappa", cfg.simulate.kappa);
    get_if(s, "nu", cfg.simulate.nu);
    get_if(s, "a", cfg.simulate.a);
  }

  if (j.contains("inputs")) {
    const json& i = j.at("inputs");
    reject_unknown(i, "inputs", {"cases", "counts", "raster"});
    get_if(i, "cases", cfg.inputs.cases);
    get_if(i, "counts", cfg.inputs.counts);
    get_if(i, "raster", cfg.inputs.raster);
  }

  if (j.contains("offset")) {
    const json& o = j.at("offset");
    reject_unknown(o, "offset", {"mode", "bandwidth", "constant", "rescale_to_total"});
    get_if(o, "mode", cfg.offset.mode);
    if (cfg.offset.mode != "kernel" && cfg.offset.mode != "raster" &&
        cfg.offset.mode != "constant")
      throw ConfigError("offset.mode must be 'kernel', 'raster', or 'constant'");
    get_if(o, "bandwidth", cfg.offset.bandwidth);
    get_if(o, "constant", cfg.offset.constant);
    get_if(o, "rescale_to_total", cfg.offset.rescale_to_total);
  }

  if (j.contains("temporal")) {
    const json& t = j.at("temporal");
    reject_unknown(t, "temporal",
                   {"day_of_week", "day0_weekday", "fourier_order", "omega",
                    "poly_degree", "include_intercept"});
    get_if(t, "day_of_week", cfg.temporal.day_of_week);
    get_if(t, "day0_weekday", cfg.temporal.day0_weekday);
    get_if(t, "fourier_order", cfg.temporal.fourier_order);
    get_if(t, "omega", cfg.temporal.omega);
    get_if(t, "poly_degree", cfg.temporal.poly_degree);
    get_if(t, "include_intercept", cfg.temporal.include_intercept);
    if (cfg.temporal.day_of_week && !t.contains("include_intercept"))
      cfg.temporal.include_intercept = false;
  }

  if (j.contains("fit")) {
    const json& f = j.at("fit");
    reject_unknown(f, "fit",
                   {"sigma2", "kappa", "a", "nu", "max_iterations", "tolerance"});
    get_if(f, "sigma2", cfg.fit.sigma2);
    get_if(f, "kappa", cfg.fit.kappa);
    get_if(f, "a", cfg.fit.a);
    get_if(f, "nu", cfg.fit.nu);
    get_if(f, "max_iterations", cfg.fit.max_iterations);
    get_if(f, "tolerance", cfg.fit.tolerance);
  }

  if (j.contains("velocity")) {
    const json& v = j.at("velocity");
    reject_unknown(v, "velocity", {"gradient_floor", "scheme", "boundary", "times"});
    get_if(v, "gradient_floor", cfg.velocity.gradient_floor);
    get_if(v, "scheme", cfg.velocity.scheme);
    get_if(v, "boundary", cfg.velocity.boundary);
    get_if(v, "times", cfg.velocity.times);
  }

  if (j.contains("validate")) {
    const json& v = j.at("validate");
    reject_unknown(v, "validate", {"fit_nx", "fit_ny", "fit_nt", "target_events"});
    get_if(v, "fit_nx", cfg.validate.fit_nx);
    get_if(v, "fit_ny", cfg.validate.fit_ny);
    get_if(v, "fit_nt", cfg.validate.fit_nt);
    get_if(v, "target_events", cfg.validate.target_events);
  }

  cfg.config_digest = hash_hex(config_hash(j.dump()));
  return cfg;
}

std::string apply_overrides(std::string json_text,
                            const std::vector<std::string>& overrides) {
  if (overrides.empty()) return json_text;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override must look like section.field=value: " + o);
    std::string pointer = "/" + o.substr(0, eq);
    for (auto& c : pointer)
      if (c == '.') c = '/';
    const std::string raw = o.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);  // numbers, booleans, arrays, quoted strings
    } catch (const json::parse_error&) {
      value = raw;  // bare string
    }
    j[json::json_pointer(pointer)] = value;
  }
  return j.dump();
}

RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const ParseError&) {
    throw ConfigError("cannot read config file " + path);
  }
  RunConfig cfg = parse_run_config(apply_overrides(text, overrides));
  // input paths are relative to the config file's directory
  const auto base = std::filesystem::path(path).parent_path();
  const auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative())
      p = (base / p).string();
  };
  resolve(cfg.inputs.cases);
  resolve(cfg.inputs.counts);
  resolve(cfg.inputs.raster);
  return cfg;
}

RunConfig default_run_config(const std::vector<std::string>& overrides) {
  return parse_run_config(
      apply_overrides(R"({"schema": "stvel.config.v1"})", overrides));
}

}  // namespace stvel::cli
