#include "stvel/io.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stvel/errors.hpp"

namespace stvel {

using nlohmann::json;

std::uint64_t config_hash(const std::string& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string header_line(const FileMeta& meta) {
  return "# schema=" + meta.schema + " config=" + meta.config + "\n";
}

std::string grid_line(const SpatioTemporalGrid& g) {
  std::ostringstream os;
  os << "# grid x0=" << format_double(g.x0()) << " y0=" << format_double(g.y0())
     << " t0=" << format_double(g.t0()) << " nx=" << g.nx() << " ny=" << g.ny()
     << " nt=" << g.nt() << " dx=" << format_double(g.dx())
     << " dy=" << format_double(g.dy()) << " dt=" << format_double(g.dt()) << "\n";
  return os.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // '\n' line ends everywhere
  if (!out) throw ParseError(path, 0, "cannot open file for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return in;
}

bool parse_double(const std::string& tok, double& out) {
  if (tok.empty()) {
    out = missing();
    return true;
  }
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// returns rows of parsed doubles; remembers grid metadata if present
struct CsvBody {
  std::vector<std::vector<double>> rows;
  std::string grid_meta;
};

CsvBody read_csv_body(const std::string& path, std::size_t n_cols) {
  auto in = open_in(path);
  CsvBody body;
  std::string line;
  long line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# grid ", 0) == 0) body.grid_meta = line;
      continue;
    }
    if (!header_seen) {  // column header
      header_seen = true;
      continue;
    }
    const auto toks = split_csv(line);
    if (toks.size() != n_cols)
      throw ParseError(path, line_no,
                       "expected " + std::to_string(n_cols) + " columns, got " +
                           std::to_string(toks.size()));
    std::vector<double> row(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c)
      if (!parse_double(toks[c], row[c]))
        throw ParseError(path, line_no, "bad number '" + toks[c] + "'");
    body.rows.push_back(std::move(row));
  }
  return body;
}

SpatioTemporalGrid grid_from_meta(const std::string& path, const std::string& meta) {
  if (meta.empty()) throw ParseError(path, 0, "missing '# grid' metadata line");
  std::istringstream is(meta.substr(7));
  double x0 = 0, y0 = 0, t0 = 0, dx = 0, dy = 0, dt = 0;
  int nx = 0, ny = 0, nt = 0;
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ParseError(path, 0, "bad grid token " + tok);
    const std::string key = tok.substr(0, eq);
    const double v = std::strtod(tok.c_str() + eq + 1, nullptr);
    if (key == "x0") x0 = v;
    else if (key == "y0") y0 = v;
    else if (key == "t0") t0 = v;
    else if (key == "nx") nx = static_cast<int>(v);
    else if (key == "ny") ny = static_cast<int>(v);
    else if (key == "nt") nt = static_cast<int>(v);
    else if (key == "dx") dx = v;
    else if (key == "dy") dy = v;
    else if (key == "dt") dt = v;
    else throw ParseError(path, 0, "unknown grid key " + key);
  }
  return SpatioTemporalGrid(x0, y0, t0, nx, ny, nt, dx, dy, dt);
}

void put(std::ofstream& out, double v) {
  if (!is_missing(v)) out << format_double(v);
}

}  // namespace

void write_pattern_csv(const std::string& path, const PointPattern& pattern,
                       const FileMeta& meta) {
  auto out = open_out(path);
  out << header_line(meta);
  const Window& w = pattern.window();
  const TimeSpan& ts = pattern.tspan();
  out << "# window xmin=" << format_double(w.xmin) << " xmax=" << format_double(w.xmax)
      << " ymin=" << format_double(w.ymin) << " ymax=" << format_double(w.ymax)
      << " tmin=" << format_double(ts.tmin) << " tmax=" << format_double(ts.tmax)
      << "\n";
  out << "x,y,t\n";
  for (const Event& e : pattern.events())
    out << format_double(e.x) << ',' << format_double(e.y) << ','
        << format_double(e.t) << "\n";
}

PointPattern read_pattern_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  long line_no = 0;
  Window w;
  TimeSpan ts;
  bool window_seen = false, header_seen = false;
  std::vector<Event> events;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# window ", 0) == 0) {
      std::istringstream is(line.substr(9));
      std::string tok;
      while (is >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw ParseError(path, line_no, "bad window token");
        const std::string key = tok.substr(0, eq);
        const double v = std::strtod(tok.c_str() + eq + 1, nullptr);
        if (key == "xmin") w.xmin = v;
        else if (key == "xmax") w.xmax = v;
        else if (key == "ymin") w.ymin = v;
        else if (key == "ymax") w.ymax = v;
        else if (key == "tmin") ts.tmin = v;
        else if (key == "tmax") ts.tmax = v;
      }
      window_seen = true;
      continue;
    }
    if (line[0] == '#') continue;
    const auto toks = split_csv(line);
    if (toks.size() != 3) throw ParseError(path, line_no, "expected x,y,t");
    Event e;
    if (!parse_double(toks[0], e.x) || !parse_double(toks[1], e.y) ||
        !parse_double(toks[2], e.t)) {
      if (!header_seen && events.empty()) {  // column header row
        header_seen = true;
        continue;
      }
      throw ParseError(path, line_no, "bad number in event row");
    }
    header_seen = true;
    events.push_back(e);
  }
  if (!window_seen) {
    // fall back to the bounding box of the events
    if (events.empty()) throw ParseError(path, line_no, "no window metadata and no events");
    w = {events[0].x, events[0].x, events[0].y, events[0].y};
    ts = {events[0].t, events[0].t};
    for (const Event& e : events) {
      w.xmin = std::min(w.xmin, e.x); w.xmax = std::max(w.xmax, e.x);
      w.ymin = std::min(w.ymin, e.y); w.ymax = std::max(w.ymax, e.y);
      ts.tmin = std::min(ts.tmin, e.t); ts.tmax = std::max(ts.tmax, e.t);
    }
  }
  return PointPattern(std::move(events), w, ts);
}

void write_field_csv(const std::string& path, const ScalarField& field,
                     const FileMeta& meta) {
  auto out = open_out(path);
  const auto& g = field.grid();
  out << header_line(meta) << grid_line(g) << "x,y,t,value\n";
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j)
      for (int n = 0; n < g.nt(); ++n) {
        out << format_double(g.center_x(i)) << ',' << format_double(g.center_y(j))
            << ',' << format_double(g.center_t(n)) << ',';
        put(out, field.at(i, j, n));
        out << "\n";
      }
}

ScalarField read_field_csv(const std::string& path) {
  const CsvBody body = read_csv_body(path, 4);
  SpatioTemporalGrid grid = grid_from_meta(path, body.grid_meta);
  if (body.rows.size() != grid.n_cells())
    throw ParseError(path, 0,
                     "expected " + std::to_string(grid.n_cells()) + " rows, got " +
                         std::to_string(body.rows.size()));
  std::vector<double> values(grid.n_cells());
  for (std::size_t k = 0; k < body.rows.size(); ++k) values[k] = body.rows[k][3];
  return ScalarField(std::move(grid), std::move(values));
}

void write_velocity_csv(const std::string& path, const VectorField& field,
                        const FileMeta& meta) {
  auto out = open_out(path);
  const auto& g = field.grid();
  out << header_line(meta) << grid_line(g) << "x,y,t,smin,vx,vy\n";
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j)
      for (int n = 0; n < g.nt(); ++n) {
        out << format_double(g.center_x(i)) << ',' << format_double(g.center_y(j))
            << ',' << format_double(g.center_t(n)) << ',';
        put(out, field.magnitude(i, j, n));
        out << ',';
        put(out, field.vx(i, j, n));
        out << ',';
        put(out, field.vy(i, j, n));
        out << "\n";
      }
}

void write_slice_csv(const std::string& path, const SpatialSlice& slice,
                     const FileMeta& meta) {
  auto out = open_out(path);
  out << header_line(meta) << "x,y,value\n";
  for (int i = 0; i < slice.nx; ++i)
    for (int j = 0; j < slice.ny; ++j) {
      out << format_double(slice.x0 + (i + 0.5) * slice.dx) << ','
          << format_double(slice.y0 + (j + 0.5) * slice.dy) << ',';
      put(out, slice.at(i, j));
      out << "\n";
    }
}

void write_oracle_csv(const std::string& path, const SimIntensity& intensity,
                      const SpatioTemporalGrid& grid,
                      const std::vector<double>& times, const FileMeta& meta) {
  auto out = open_out(path);
  out << header_line(meta) << grid_line(grid)
      << "x,y,t,lambda,dldx,dldy,dldt,smin,vx,vy\n";
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j)
      for (double t : times) {
        const double x = grid.center_x(i), y = grid.center_y(j);
        const auto [dx, dy] = intensity.grad_xy(x, y, t);
        const VelocityValue v = intensity.true_velocity(x, y, t);
        out << format_double(x) << ',' << format_double(y) << ','
            << format_double(t) << ',' << format_double(intensity.lambda(x, y, t))
            << ',' << format_double(dx) << ',' << format_double(dy) << ','
            << format_double(intensity.dlambda_dt(x, y, t)) << ',';
        put(out, v.magnitude);
        out << ',';
        put(out, v.vx);
        out << ',';
        put(out, v.vy);
        out << "\n";
      }
}

CountsSeries read_counts_csv(const std::string& path) {
  auto in = open_in(path);
  CountsSeries out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto toks = split_csv(line);
    if (toks.size() != 2) throw ParseError(path, line_no, "expected t,count");
    double t, c;
    if (!parse_double(toks[0], t) || !parse_double(toks[1], c)) {
      if (out.times.empty()) continue;  // header row
      throw ParseError(path, line_no, "bad number in counts row");
    }
    out.times.push_back(t);
    out.counts.push_back(c);
  }
  if (out.times.empty()) throw ParseError(path, line_no, "no count rows");
  return out;
}

std::vector<Point2> read_points_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<Point2> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto toks = split_csv(line);
    if (toks.size() < 2) throw ParseError(path, line_no, "expected x,y");
    Point2 p;
    if (!parse_double(toks[0], p.x) || !parse_double(toks[1], p.y)) {
      if (out.empty()) continue;  // header row
      throw ParseError(path, line_no, "bad number in point row");
    }
    out.push_back(p);
  }
  return out;
}

namespace {

json spec_to_json(const TemporalBasisSpec& s) {
  return json{{"day_of_week", s.day_of_week}, {"day0_weekday", s.day0_weekday},
              {"fourier_order", s.fourier_order}, {"omega", s.omega},
              {"poly_degree", s.poly_degree},
              {"include_intercept", s.include_intercept}};
}

TemporalBasisSpec spec_from_json(const json& j) {
  TemporalBasisSpec s;
  s.day_of_week = j.at("day_of_week").get<bool>();
  s.day0_weekday = j.at("day0_weekday").get<int>();
  s.fourier_order = j.at("fourier_order").get<int>();
  s.omega = j.at("omega").get<double>();
  s.poly_degree = j.at("poly_degree").get<int>();
  s.include_intercept = j.at("include_intercept").get<bool>();
  return s;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

}  // namespace

std::string temporal_fit_to_json(const TemporalFit& fit, const FileMeta& meta) {
  json j{{"schema", "stvel.temporal-fit.v1"},
         {"config", meta.config},
         {"basis", spec_to_json(fit.spec)},
         {"coefficients", to_vec(fit.coefficients)},
         {"std_errors", to_vec(fit.std_errors)},
         {"deviance", fit.deviance},
         {"gradient_norm", fit.gradient_norm},
         {"iterations", fit.iterations},
         {"time_scale", fit.time_scale}};
  return j.dump(2) + "\n";
}

TemporalFit temporal_fit_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("schema") != "stvel.temporal-fit.v1")
    throw ConfigError("unexpected temporal fit schema");
  TemporalFit fit;
  fit.spec = spec_from_json(j.at("basis"));
  const auto coefs = j.at("coefficients").get<std::vector<double>>();
  const auto ses = j.at("std_errors").get<std::vector<double>>();
  fit.coefficients = Eigen::Map<const Eigen::VectorXd>(coefs.data(), coefs.size());
  fit.std_errors = Eigen::Map<const Eigen::VectorXd>(ses.data(), ses.size());
  fit.deviance = j.at("deviance").get<double>();
  fit.gradient_norm = j.at("gradient_norm").get<double>();
  fit.iterations = j.at("iterations").get<int>();
  fit.time_scale = j.at("time_scale").get<double>();
  return fit;
}

namespace {

json grid_to_json(const SpatioTemporalGrid& g) {
  return json{{"x0", g.x0()}, {"y0", g.y0()}, {"t0", g.t0()},
              {"nx", g.nx()}, {"ny", g.ny()}, {"nt", g.nt()},
              {"dx", g.dx()}, {"dy", g.dy()}, {"dt", g.dt()},
              {"mask", g.mask()}};
}

SpatioTemporalGrid grid_from_json(const json& j) {
  return SpatioTemporalGrid(
      j.at("x0").get<double>(), j.at("y0").get<double>(), j.at("t0").get<double>(),
      j.at("nx").get<int>(), j.at("ny").get<int>(), j.at("nt").get<int>(),
      j.at("dx").get<double>(), j.at("dy").get<double>(), j.at("dt").get<double>(),
      j.at("mask").get<std::vector<std::uint8_t>>());
}

json masked_array(const std::vector<double>& v) {
  json arr = json::array();
  for (double x : v) {
    if (is_missing(x)) arr.push_back(nullptr);
    else arr.push_back(x);
  }
  return arr;
}

std::vector<double> masked_vector(const json& arr) {
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& x : arr)
    out.push_back(x.is_null() ? missing() : x.get<double>());
  return out;
}

}  // namespace

std::string fit_result_to_json(const FitResult& result, const FileMeta& meta) {
  json j{{"schema", "stvel.fit.v1"},
         {"config", meta.config},
         {"hyperparameters",
          {{"sigma2", result.spec.sigma2}, {"kappa", result.spec.kappa},
           {"nu", result.spec.nu}, {"a", result.spec.a}}},
         {"beta", result.beta},
         {"log_evidence", result.log_evidence},
         {"gradient_norm", result.gradient_norm},
         {"iterations", result.iterations},
         {"clamp_hits", result.clamp_hits},
         {"grid", grid_to_json(result.grid)},
         {"zeta", masked_array(result.zeta)},
         {"zeta_variance", masked_array(result.zeta_variance)},
         {"offset", masked_array(result.offset)}};
  return j.dump(2) + "\n";
}

FitResult fit_result_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("schema") != "stvel.fit.v1") throw ConfigError("unexpected fit schema");
  const json& h = j.at("hyperparameters");
  FitResult out{.grid = grid_from_json(j.at("grid")),
                .spec = CovarianceSpec(h.at("sigma2").get<double>(),
                                       h.at("kappa").get<double>(),
                                       h.at("nu").get<double>(),
                                       h.at("a").get<double>(), true)};
  out.beta = j.at("beta").get<double>();
  out.log_evidence = j.at("log_evidence").get<double>();
  out.gradient_norm = j.at("gradient_norm").get<double>();
  out.iterations = j.at("iterations").get<int>();
  out.clamp_hits = j.at("clamp_hits").get<int>();
  out.zeta = masked_vector(j.at("zeta"));
  out.zeta_variance = masked_vector(j.at("zeta_variance"));
  out.offset = masked_vector(j.at("offset"));
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  auto in = open_in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace stvel
