#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wflow/energy.hpp"
#include "wflow/flow.hpp"
#include "wflow/grid.hpp"
#include "wflow/profile.hpp"
#include "wflow/report.hpp"
#include "wflow/topology.hpp"

namespace wflow {

struct ConfigError : std::runtime_error {
  explicit ConfigError(std::vector<std::string> errs)
      : std::runtime_error(join(errs)), errors(std::move(errs)) {}
  std::vector<std::string> errors;

 private:
  static std::string join(const std::vector<std::string>& errs) {
    std::string out = "invalid configuration:";
    for (const auto& e : errs) out += "\n  " + e;
    return out;
  }
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  // grid; h = 0 fits the domain into nx x ny cells with the two-cell collar
  int nx = 256;
  int ny = 256;
  double h = 0.0;

  std::string mask_type = "disc";  // disc | rectangle
  double mask_radius = 1.0;
  double mask_half_width = 1.0;
  double mask_half_height = 1.0;

  double eps = 1.5e-2;
  double sigma = 2.0;
  double kappa = 1.0;
  std::optional<double> target_area;  // defaults to s_eps of the initial field

  std::optional<double> tau;  // defaults to eps * 1e-5
  long max_steps = 1000;
  double solver_tol = 1e-8;
  int solver_max_iter = 1000;
  int geodesic_stride = 1;
  int snapshot_stride = 1000;
  int energy_log_stride = 100;

  Shape shape{Circle{0.0, 0.0, 0.5}};
  std::optional<double> delta;  // defaults to Shape::default_delta()

  std::vector<std::pair<double, double>> bands{{0.2, 0.8}, {-0.8, -0.2}};
  double plateau = 1.0;
  bool penalty = true;
  SubgradientMode subgradient = SubgradientMode::full;

  std::string output_dir = "out";
  long seed = 0;  // reserved

  Grid2D grid() const {
    const double half_x = mask_type == "disc" ? mask_radius : mask_half_width;
    const double half_y = mask_type == "disc" ? mask_radius : mask_half_height;
    const double spacing = h > 0.0 ? h : std::max(2.0 * half_x / (nx - 4), 2.0 * half_y / (ny - 4));
    return Grid2D(nx, ny, spacing, -0.5 * nx * spacing, -0.5 * ny * spacing);
  }

  DomainMask mask() const {
    const Grid2D g = grid();
    if (mask_type == "disc") return DomainMask::disc(g, mask_radius);
    return DomainMask::rectangle(g, -mask_half_width, mask_half_width, -mask_half_height, mask_half_height);
  }

  double resolved_delta() const { return delta ? *delta : shape.default_delta(); }

  FlowConfig flow() const {
    FlowConfig c;
    c.tau = tau ? *tau : eps * 1e-5;
    c.max_steps = max_steps;
    c.solver_tol = solver_tol;
    c.solver_max_iter = solver_max_iter;
    c.geodesic_stride = geodesic_stride;
    c.snapshot_stride = snapshot_stride;
    c.energy_log_stride = energy_log_stride;
    return c;
  }

  TopoSpecs topology() const {
    TopoSpecs t;
    t.bands.clear();
    for (const auto& [lo, hi] : bands) t.bands.emplace_back(lo, hi, plateau);
    t.penalty = penalty;
    t.mode = subgradient;
    return t;
  }

  /// Model parameters with the target length resolved; without an explicit
  /// target this builds the initial field once to measure it.
  ModelParams params() const {
    if (target_area) return ModelParams(eps, sigma, kappa, *target_area);
    ModelParams p(eps, sigma, kappa, 1.0);
    const DomainMask m = mask();
    p.target_area = s_eps(build_recovery(shape, p, m, resolved_delta()), m, p);
    p.validate();
    return p;
  }

  ScalarField initial_field() const {
    const ModelParams p(eps, sigma, kappa, 1.0);
    return build_recovery(shape, p, mask(), resolved_delta());
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<long> to_long(const std::string& s) {
  long v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

inline std::optional<bool> to_bool(const std::string& s) {
  if (s == "on" || s == "true" || s == "1" || s == "yes") return true;
  if (s == "off" || s == "false" || s == "0" || s == "no") return false;
  return std::nullopt;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parses `section.key = value` lines; `#` starts a comment. Every problem is
/// collected and reported together.
inline RunConfig parse_config(std::string_view text) {
  std::map<std::string, std::pair<std::string, int>> kv;  // key -> (value, line)
  std::vector<std::string> errors;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(line_no) + ": expected 'section.key = value'");
      continue;
    }
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (key.find('.') == std::string::npos) {
      errors.push_back("line " + std::to_string(line_no) + ": key '" + key + "' lacks a section");
      continue;
    }
    if (kv.contains(key)) {
      errors.push_back(key + ": duplicate key (line " + std::to_string(line_no) + ")");
      continue;
    }
    kv[key] = {value, line_no};
  }

  RunConfig c;
  std::map<std::string, bool> used;
  auto raw = [&](const std::string& key) -> const std::string* {
    const auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    used[key] = true;
    return &it->second.first;
  };
  auto get_double = [&](const std::string& key, auto&& assign) {
    if (const auto* v = raw(key)) {
      if (const auto d = detail::to_double(*v)) assign(*d);
      else errors.push_back(key + ": expected a real number, got '" + *v + "'");
    }
  };
  auto get_long = [&](const std::string& key, auto&& assign) {
    if (const auto* v = raw(key)) {
      if (const auto d = detail::to_long(*v)) assign(*d);
      else errors.push_back(key + ": expected an integer, got '" + *v + "'");
    }
  };
  auto get_bool = [&](const std::string& key, bool& out) {
    if (const auto* v = raw(key)) {
      if (const auto b = detail::to_bool(*v)) out = *b;
      else errors.push_back(key + ": expected on/off, got '" + *v + "'");
    }
  };

  get_long("grid.nx", [&](long v) { c.nx = static_cast<int>(v); });
  get_long("grid.ny", [&](long v) { c.ny = static_cast<int>(v); });
  get_double("grid.h", [&](double v) { c.h = v; });

  if (const auto* v = raw("mask.type")) c.mask_type = *v;
  get_double("mask.radius", [&](double v) { c.mask_radius = v; });
  get_double("mask.half_width", [&](double v) { c.mask_half_width = v; });
  get_double("mask.half_height", [&](double v) { c.mask_half_height = v; });

  get_double("model.eps", [&](double v) { c.eps = v; });
  get_double("model.sigma", [&](double v) { c.sigma = v; });
  get_double("model.kappa", [&](double v) { c.kappa = v; });
  get_double("model.target_area", [&](double v) { c.target_area = v; });

  get_double("flow.tau", [&](double v) { c.tau = v; });
  get_long("flow.max_steps", [&](long v) { c.max_steps = v; });
  get_double("flow.solver_tol", [&](double v) { c.solver_tol = v; });
  get_long("flow.solver_max_iter", [&](long v) { c.solver_max_iter = static_cast<int>(v); });
  get_long("flow.geodesic_stride", [&](long v) { c.geodesic_stride = static_cast<int>(v); });
  get_long("flow.snapshot_stride", [&](long v) { c.snapshot_stride = static_cast<int>(v); });
  get_long("flow.energy_log_stride", [&](long v) { c.energy_log_stride = static_cast<int>(v); });

  // Shape: every field has a default; only keys of the chosen type are allowed.
  std::string shape_type = "circle";
  if (const auto* v = raw("shape.type")) shape_type = *v;
  std::map<std::string, double> sp;
  const std::map<std::string, std::vector<std::pair<std::string, double>>> shape_keys = {
      {"circle", {{"center_x", 0.0}, {"center_y", 0.0}, {"radius", 0.5}}},
      {"two_circles", {{"c1x", -0.25}, {"c1y", 0.0}, {"r1", 0.15}, {"c2x", 0.25}, {"c2y", 0.0}, {"r2", 0.15}}},
      {"stripe", {{"normal_x", 0.0}, {"normal_y", 1.0}, {"offset", 0.0}, {"width", 0.5}}},
      {"dumbbell",
       {{"c1x", -0.35}, {"c1y", 0.0}, {"r1", 0.2}, {"c2x", 0.35}, {"c2y", 0.0}, {"r2", 0.2}, {"neck", 0.05}}},
  };
  if (const auto it = shape_keys.find(shape_type); it == shape_keys.end()) {
    errors.push_back("shape.type: unknown shape '" + shape_type + "' (circle, two_circles, stripe, dumbbell)");
  } else {
    for (const auto& [name, def] : it->second) {
      sp[name] = def;
      get_double("shape." + name, [&, n = name](double v) { sp[n] = v; });
    }
    try {
      if (shape_type == "circle") c.shape = Shape(Circle{sp["center_x"], sp["center_y"], sp["radius"]});
      else if (shape_type == "two_circles")
        c.shape = Shape(TwoCircles{sp["c1x"], sp["c1y"], sp["r1"], sp["c2x"], sp["c2y"], sp["r2"]});
      else if (shape_type == "stripe")
        c.shape = Shape(Stripe{sp["normal_x"], sp["normal_y"], sp["offset"], sp["width"]});
      else
        c.shape = Shape(Dumbbell{sp["c1x"], sp["c1y"], sp["r1"], sp["c2x"], sp["c2y"], sp["r2"], sp["neck"]});
    } catch (const std::exception& e) {
      errors.push_back(std::string("shape: ") + e.what());
    }
  }
  get_double("shape.delta", [&](double v) { c.delta = v; });

  if (const auto* v = raw("topology.bands")) {
    c.bands.clear();
    std::istringstream list(*v);
    for (std::string item; std::getline(list, item, ',');) {
      item = detail::trim(item);
      const auto colon = item.find(':');
      const auto lo = colon == std::string::npos ? std::nullopt : detail::to_double(detail::trim(item.substr(0, colon)));
      const auto hi = colon == std::string::npos ? std::nullopt : detail::to_double(detail::trim(item.substr(colon + 1)));
      if (!lo || !hi) {
        errors.push_back("topology.bands: expected 'lo:hi' entries, got '" + item + "'");
        continue;
      }
      c.bands.emplace_back(*lo, *hi);
    }
  }
  get_double("topology.plateau", [&](double v) { c.plateau = v; });
  get_bool("topology.penalty", c.penalty);
  if (const auto* v = raw("topology.subgradient")) {
    if (*v == "full") c.subgradient = SubgradientMode::full;
    else if (*v == "frozen") c.subgradient = SubgradientMode::frozen;
    else errors.push_back("topology.subgradient: expected full or frozen, got '" + *v + "'");
  }

  if (const auto* v = raw("output.dir")) c.output_dir = *v;
  get_long("run.seed", [&](long v) { c.seed = v; });

  for (const auto& [key, entry] : kv)
    if (!used.contains(key)) errors.push_back(key + ": unknown key (line " + std::to_string(entry.second) + ")");

  // Invariants.
  if (c.nx < 5 || c.ny < 5) errors.push_back("grid.nx/grid.ny: need at least 5 cells per axis");
  if (c.h < 0.0) errors.push_back("grid.h: must be positive (or 0 for automatic)");
  if (c.mask_type != "disc" && c.mask_type != "rectangle")
    errors.push_back("mask.type: expected disc or rectangle, got '" + c.mask_type + "'");
  if (!(c.mask_radius > 0.0)) errors.push_back("mask.radius: must be positive");
  if (!(c.mask_half_width > 0.0) || !(c.mask_half_height > 0.0))
    errors.push_back("mask.half_width/mask.half_height: must be positive");
  if (!(c.eps > 0.0)) errors.push_back("model.eps: eps must be positive");
  if (!(c.sigma > 0.0 && c.sigma < 4.0)) errors.push_back("model.sigma: sigma must lie in (0,4)");
  if (!(c.kappa > 0.0)) errors.push_back("model.kappa: kappa must be positive");
  if (c.target_area && !(*c.target_area > 0.0)) errors.push_back("model.target_area: must be positive");
  if (c.tau && !(*c.tau >= 0.0)) errors.push_back("flow.tau: must be non-negative");
  if (c.max_steps < 0) errors.push_back("flow.max_steps: must be non-negative");
  if (!(c.solver_tol > 0.0)) errors.push_back("flow.solver_tol: must be positive");
  if (c.solver_max_iter < 1) errors.push_back("flow.solver_max_iter: must be at least 1");
  if (c.geodesic_stride < 1) errors.push_back("flow.geodesic_stride: must be at least 1");
  if (c.snapshot_stride < 1) errors.push_back("flow.snapshot_stride: must be at least 1");
  if (c.energy_log_stride < 1) errors.push_back("flow.energy_log_stride: must be at least 1");
  if (c.delta && !(*c.delta > 0.0 && *c.delta < c.shape.injectivity_scale()))
    errors.push_back("shape.delta: must lie in (0, " + detail::fmt(c.shape.injectivity_scale()) + ")");
  for (const auto& [lo, hi] : c.bands)
    if (!(lo > -1.0 && lo < hi && hi < 1.0))
      errors.push_back("topology.bands: band " + detail::fmt(lo) + ":" + detail::fmt(hi) +
                       " must satisfy -1 < rho1 < rho2 < 1");
  if (!(c.plateau > 0.0)) errors.push_back("topology.plateau: must be positive");

  if (errors.empty()) {
    try {
      (void)c.mask();
    } catch (const std::exception& e) {
      errors.push_back(std::string("mask: ") + e.what());
    }
  }
  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError({"cannot read config file " + path.string()});
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

/// Every key with its effective value; parsing the result reproduces `c`
/// (with the target length fixed to `p.target_area`).
inline std::string resolved_config_text(const RunConfig& c, const ModelParams& p) {
  using detail::fmt;
  std::ostringstream o;
  o << "grid.nx = " << c.nx << "\ngrid.ny = " << c.ny << "\ngrid.h = " << fmt(c.grid().h) << "\n";
  o << "mask.type = " << c.mask_type << "\nmask.radius = " << fmt(c.mask_radius)
    << "\nmask.half_width = " << fmt(c.mask_half_width) << "\nmask.half_height = " << fmt(c.mask_half_height)
    << "\n";
  o << "model.eps = " << fmt(c.eps) << "\nmodel.sigma = " << fmt(c.sigma) << "\nmodel.kappa = " << fmt(c.kappa)
    << "\nmodel.target_area = " << fmt(p.target_area) << "\n";
  const FlowConfig f = c.flow();
  o << "flow.tau = " << fmt(f.tau) << "\nflow.max_steps = " << f.max_steps
    << "\nflow.solver_tol = " << fmt(f.solver_tol) << "\nflow.solver_max_iter = " << f.solver_max_iter
    << "\nflow.geodesic_stride = " << f.geodesic_stride << "\nflow.snapshot_stride = " << f.snapshot_stride
    << "\nflow.energy_log_stride = " << f.energy_log_stride << "\n";
  std::visit(
      [&o](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Circle>) {
          o << "shape.type = circle\nshape.center_x = " << fmt(s.cx) << "\nshape.center_y = " << fmt(s.cy)
            << "\nshape.radius = " << fmt(s.r) << "\n";
        } else if constexpr (std::is_same_v<T, TwoCircles>) {
          o << "shape.type = two_circles\nshape.c1x = " << fmt(s.c1x) << "\nshape.c1y = " << fmt(s.c1y)
            << "\nshape.r1 = " << fmt(s.r1) << "\nshape.c2x = " << fmt(s.c2x) << "\nshape.c2y = " << fmt(s.c2y)
            << "\nshape.r2 = " << fmt(s.r2) << "\n";
        } else if constexpr (std::is_same_v<T, Stripe>) {
          o << "shape.type = stripe\nshape.normal_x = " << fmt(s.nx) << "\nshape.normal_y = " << fmt(s.ny)
            << "\nshape.offset = " << fmt(s.offset) << "\nshape.width = " << fmt(s.width) << "\n";
        } else {
          o << "shape.type = dumbbell\nshape.c1x = " << fmt(s.c1x) << "\nshape.c1y = " << fmt(s.c1y)
            << "\nshape.r1 = " << fmt(s.r1) << "\nshape.c2x = " << fmt(s.c2x) << "\nshape.c2y = " << fmt(s.c2y)
            << "\nshape.r2 = " << fmt(s.r2) << "\nshape.neck = " << fmt(s.neck) << "\n";
        }
      },
      c.shape.variant());
  o << "shape.delta = " << fmt(c.resolved_delta()) << "\n";
  o << "topology.bands = ";
  for (std::size_t b = 0; b < c.bands.size(); ++b)
    o << (b ? ", " : "") << fmt(c.bands[b].first) << ":" << fmt(c.bands[b].second);
  o << "\ntopology.plateau = " << fmt(c.plateau) << "\ntopology.penalty = " << (c.penalty ? "on" : "off")
    << "\ntopology.subgradient = " << (c.subgradient == SubgradientMode::full ? "full" : "frozen") << "\n";
  o << "output.dir = " << c.output_dir << "\nrun.seed = " << c.seed << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Fields

inline void write_field_csv(const ScalarField& u, std::ostream& out) {
  const Grid2D& g = u.grid;
  std::string line;
  char buf[32];
  for (int j = 0; j < g.ny; ++j) {
    line.clear();
    for (int i = 0; i < g.nx; ++i) {
      const int n = std::snprintf(buf, sizeof buf, "%.17g", u(i, j));
      if (i) line += ',';
      line.append(buf, static_cast<std::size_t>(n));
    }
    line += '\n';
    out << line;
  }
}

/// Reads a row-major CSV field (one grid row per line, row j = 0 first).
/// Returns the values with their column and row counts.
struct CsvField {
  int nx = 0;
  int ny = 0;
  std::vector<double> values;
};

inline CsvField read_field_csv(std::istream& in) {
  CsvField f;
  int row = 0;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    int cols = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p <= end) {
      const char* comma = std::find(p, end, ',');
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(p, comma, v);
      if (ec != std::errc() || ptr != comma)
        throw IoError("malformed number on CSV row " + std::to_string(row));
      f.values.push_back(v);
      ++cols;
      p = comma + 1;
    }
    if (f.nx == 0) f.nx = cols;
    else if (cols != f.nx) throw IoError("CSV row " + std::to_string(row) + " has " + std::to_string(cols) +
                                         " columns, expected " + std::to_string(f.nx));
  }
  f.ny = row;
  return f;
}

inline ScalarField read_field_csv(const std::filesystem::path& path, const Grid2D& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvField f = read_field_csv(in);
  if (f.nx != grid.nx || f.ny != grid.ny)
    throw ShapeError(path.string() + " holds a " + std::to_string(f.nx) + "x" + std::to_string(f.ny) +
                     " field, configuration expects " + std::to_string(grid.nx) + "x" + std::to_string(grid.ny));
  return ScalarField(grid, std::move(f.values));
}

/// Grey level of v: round(255 (clamp(v, -1, 1) + 1) / 2).
inline unsigned char pgm_level(double v) {
  const double c = std::clamp(v, -1.0, 1.0);
  return static_cast<unsigned char>(std::lround(255.0 * (c + 1.0) / 2.0));
}

/// Binary PGM (P5, maxval 255). The top image row is grid row ny - 1.
inline void write_pgm(const ScalarField& u, std::ostream& out) {
  const Grid2D& g = u.grid;
  out << "P5\n" << g.nx << ' ' << g.ny << "\n255\n";
  std::string row(static_cast<std::size_t>(g.nx), '\0');
  for (int j = g.ny - 1; j >= 0; --j) {
    for (int i = 0; i < g.nx; ++i) row[static_cast<std::size_t>(i)] = static_cast<char>(pgm_level(u(i, j)));
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

/// Writes `<stem>.csv` and `<stem>.pgm`.
inline void write_snapshot(const ScalarField& u, const std::filesystem::path& stem) {
  auto csv_path = stem;
  csv_path += ".csv";
  auto pgm_path = stem;
  pgm_path += ".pgm";
  {
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot write " + csv_path.string());
    write_field_csv(u, csv);
    if (!csv) throw IoError("write failed for " + csv_path.string());
  }
  std::ofstream pgm(pgm_path, std::ios::binary);
  if (!pgm) throw IoError("cannot write " + pgm_path.string());
  write_pgm(u, pgm);
  if (!pgm) throw IoError("write failed for " + pgm_path.string());
}

// ---------------------------------------------------------------------------
// Energy series

struct SeriesRow {
  long step = 0;
  double time = 0.0;
  double s_eps = 0.0;
  double w_eps = 0.0;
  double area_penalty = 0.0;
  double c_eps = 0.0;
  double total = 0.0;
  double xi_abs = 0.0;
  int n_components = 0;

  static SeriesRow from(const FlowState& s) {
    const EnergyReport& r = s.report;
    return {s.step, s.t, r.s_eps, r.w_eps, r.area_penalty, r.c_eps, r.total, r.xi_abs, r.n_components};
  }
};

inline constexpr std::string_view kSeriesHeader = "step,time,s_eps,w_eps,area_penalty,c_eps,total,xi_abs,n_components";

inline std::string format_series_row(const SeriesRow& r) {
  using detail::fmt;
  return std::to_string(r.step) + ',' + fmt(r.time) + ',' + fmt(r.s_eps) + ',' + fmt(r.w_eps) + ',' +
         fmt(r.area_penalty) + ',' + fmt(r.c_eps) + ',' + fmt(r.total) + ',' + fmt(r.xi_abs) + ',' +
         std::to_string(r.n_components);
}

/// Appends rows to a CSV file, flushing each complete line so an aborted
/// run leaves a parseable file.
class SeriesWriter {
 public:
  explicit SeriesWriter(const std::filesystem::path& path) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
    out_ << kSeriesHeader << '\n' << std::flush;
  }
  void append(const SeriesRow& row) {
    out_ << format_series_row(row) + '\n' << std::flush;
    if (!out_) throw IoError("write failed for " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

inline void write_series(const std::vector<SeriesRow>& rows, const std::filesystem::path& path) {
  SeriesWriter w(path);
  for (const auto& r : rows) w.append(r);
}

inline std::vector<SeriesRow> read_series(std::istream& in) {
  std::vector<SeriesRow> rows;
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kSeriesHeader) throw IoError("missing series header");
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 9) throw IoError("series row with " + std::to_string(f.size()) + " fields");
    auto num = [](const std::string& s) {
      const auto v = detail::to_double(s);
      if (!v) throw IoError("malformed series value '" + s + "'");
      return *v;
    };
    auto whole = [](const std::string& s) {
      const auto v = detail::to_long(s);
      if (!v) throw IoError("malformed series value '" + s + "'");
      return *v;
    };
    rows.push_back({whole(f[0]), num(f[1]), num(f[2]), num(f[3]), num(f[4]), num(f[5]), num(f[6]), num(f[7]),
                    static_cast<int>(whole(f[8]))});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Diagnostics

struct Point {
  double x = 0.0, y = 0.0;
};

/// Symmetric Hausdorff distance between two finite point sets.
inline double hausdorff_distance(const std::vector<Point>& a, const std::vector<Point>& b) {
  if (a.empty() || b.empty()) throw DomainError("Hausdorff distance of an empty set");
  auto directed = [](const std::vector<Point>& from, const std::vector<Point>& to) {
    double worst2 = 0.0;
    for (const Point& p : from) {
      double best2 = std::numeric_limits<double>::infinity();
      for (const Point& q : to) {
        const double dx = p.x - q.x, dy = p.y - q.y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best2) {
          best2 = d2;
          if (best2 <= worst2) break;  // cannot raise the running maximum
        }
      }
      worst2 = std::max(worst2, best2);
    }
    return std::sqrt(worst2);
  };
  return std::max(directed(a, b), directed(b, a));
}

inline std::vector<Point> cell_centers(const std::vector<std::uint32_t>& cells, const Grid2D& g) {
  std::vector<Point> pts;
  pts.reserve(cells.size());
  for (const std::uint32_t c : cells)
    pts.push_back({g.x(static_cast<int>(c % g.nx)), g.y(static_cast<int>(c / g.nx))});
  return pts;
}

/// Hausdorff distance between two cell sets, measured between cell centres.
inline double hausdorff_distance(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                                 const Grid2D& g) {
  return hausdorff_distance(cell_centers(a, g), cell_centers(b, g));
}

}  // namespace wflow
