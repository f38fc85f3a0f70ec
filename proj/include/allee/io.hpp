#pragma once

// Run configuration (flat "section.key = value" text) and every file format the tools emit.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "allee/error.hpp"
#include "allee/experiments.hpp"
#include "allee/integrate.hpp"
#include "allee/model.hpp"
#include "allee/monitor.hpp"
#include "allee/oracle.hpp"

namespace allee {

/// 17 significant digits: enough to round-trip any double.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct GridSpec {
  double x_lo = -60.0;
  double x_hi = 60.0;
  std::size_t nx = 241;
  std::size_t ntheta = 33;
  bool operator==(const GridSpec&) const = default;
};

struct SweepSpec {
  std::vector<double> alphas;
  std::vector<double> L_values{5, 10, 20, 40, 80};
  bool write_matrix = true;
  bool operator==(const SweepSpec&) const = default;
};

struct ScanSpec {
  std::vector<double> theta_tildes;
  double L = 5.0;
  double sigma = 0.1;
  bool operator==(const ScanSpec&) const = default;
};

struct OracleSpec {
  double d = 1.0;
  std::vector<double> theta0s{-1.0, -0.75, 0.0, 0.25, 0.5};
  double level = 0.5;
  double x_lo = -200.0;
  double x_hi = 200.0;
  std::size_t nx = 1601;
  double t_end = 120.0;
  double step_position = -150.0;
  bool operator==(const OracleSpec&) const = default;

  SpeedRunSetup setup() const {
    SpeedRunSetup s;
    s.domain = {x_lo, x_hi, nx};
    s.t_end = t_end;
    s.step_position = step_position;
    s.level = level;
    return s;
  }
};

struct OutputSpec {
  std::string dir = "out";
  std::string prefix = "run";
  std::vector<double> snapshot_times;
  bool timing = true;  // false writes wall_ms = 0 so sweep files are reproducible byte for byte
  bool operator==(const OutputSpec&) const = default;
};

struct MonitorSpec {
  bool enabled = true;
  std::size_t records = 20;
  std::optional<bool> monotone_hypothesis;
  bool operator==(const MonitorSpec&) const = default;
};

struct RunConfig {
  ModelParams model;
  GridSpec grid;
  IntegratorConfig integrator;
  InitialCondition initial;
  SweepSpec sweep;
  ScanSpec scan;
  OracleSpec oracle;
  OutputSpec outputs;
  MonitorSpec monitors;

  bool operator==(const RunConfig&) const = default;

  SimulationSetup setup() const {
    SimulationSetup s;
    s.x_lo = grid.x_lo;
    s.x_hi = grid.x_hi;
    s.nx = grid.nx;
    s.ntheta = grid.ntheta;
    s.integrator = integrator;
    s.monitors = monitors.enabled;
    s.monitor_records = monitors.records;
    s.monitor_options.monotone_hypothesis = monitors.monotone_hypothesis;
    return s;
  }

  void validate() const {
    model.validate();
    integrator.validate();
    Grid::make(grid.x_lo, grid.x_hi, grid.nx, grid.ntheta, model);
    for (double t : outputs.snapshot_times)
      if (t < 0.0 || t > integrator.t_end)
        throw DomainError("outputs.snapshot_times must lie in [0, integrator.t_end]");
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Comma-separated numbers; an element "a:step:b" expands to a, a+step, ..., b.
inline std::optional<std::vector<double>> to_list(std::string_view s) {
  std::vector<double> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const auto item = trim(s.substr(pos, comma == std::string_view::npos ? s.npos : comma - pos));
    const auto c1 = item.find(':');
    if (c1 == std::string_view::npos) {
      const auto v = to_double(item);
      if (!v) return std::nullopt;
      out.push_back(*v);
    } else {
      const auto c2 = item.find(':', c1 + 1);
      if (c2 == std::string_view::npos) return std::nullopt;
      const auto a = to_double(item.substr(0, c1));
      const auto h = to_double(item.substr(c1 + 1, c2 - c1 - 1));
      const auto b = to_double(item.substr(c2 + 1));
      if (!a || !h || !b || !(*h > 0.0) || *b < *a) return std::nullopt;
      const auto n = static_cast<std::size_t>(std::llround((*b - *a) / *h));
      if (n > 1'000'000) return std::nullopt;
      for (std::size_t k = 0; k <= n; ++k) out.push_back(*a + *h * static_cast<double>(k));
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ", ";
    s += fmt17(v[k]);
  }
  return s;
}

/// Key table shared by the parser and the serializer.
struct Field {
  std::function<bool(RunConfig&, std::string_view)> set;  // false: malformed value
  std::function<std::optional<std::string>(const RunConfig&)> get;  // nullopt: omit
};

template <class Get>
Field real(Get g) {
  return {[g](RunConfig& c, std::string_view v) {
            const auto d = to_double(v);
            if (d) g(c) = *d;
            return d.has_value();
          },
          [g](const RunConfig& c) -> std::optional<std::string> {
            return fmt17(g(c));
          }};
}

template <class Get>
Field count(Get g) {
  return {[g](RunConfig& c, std::string_view v) {
            v = trim(v);
            std::size_t n = 0;
            const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
            if (ec != std::errc() || p != v.data() + v.size() || v.empty()) return false;
            g(c) = n;
            return true;
          },
          [g](const RunConfig& c) -> std::optional<std::string> {
            return std::to_string(g(c));
          }};
}

template <class Get>
Field list(Get g) {
  return {[g](RunConfig& c, std::string_view v) {
            auto l = to_list(v);
            if (l) g(c) = std::move(*l);
            return l.has_value();
          },
          [g](const RunConfig& c) -> std::optional<std::string> {
            return join(g(c));
          }};
}

inline std::optional<bool> to_bool(std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  return std::nullopt;
}

template <class Get>
Field boolean(Get g) {
  return {[g](RunConfig& c, std::string_view v) {
            const auto b = to_bool(v);
            if (b) g(c) = *b;
            return b.has_value();
          },
          [g](const RunConfig& c) -> std::optional<std::string> {
            return g(c) ? "true" : "false";
          }};
}

template <class Get>
Field text(Get g) {
  return {[g](RunConfig& c, std::string_view v) {
            v = trim(v);
            if (v.empty()) return false;
            g(c) = std::string(v);
            return true;
          },
          [g](const RunConfig& c) -> std::optional<std::string> { return g(c); }};
}

inline const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    t.emplace_back("model.d", real([](auto& c) -> auto& { return c.model.d; }));
    t.emplace_back("model.alpha", real([](auto& c) -> auto& { return c.model.alpha; }));
    t.emplace_back("model.theta_min", real([](auto& c) -> auto& { return c.model.theta_min; }));
    t.emplace_back("model.theta_max", real([](auto& c) -> auto& { return c.model.theta_max; }));
    t.emplace_back("grid.x_lo", real([](auto& c) -> auto& { return c.grid.x_lo; }));
    t.emplace_back("grid.x_hi", real([](auto& c) -> auto& { return c.grid.x_hi; }));
    t.emplace_back("grid.nx", count([](auto& c) -> auto& { return c.grid.nx; }));
    t.emplace_back("grid.ntheta", count([](auto& c) -> auto& { return c.grid.ntheta; }));
    t.emplace_back("integrator.rtol", real([](auto& c) -> auto& { return c.integrator.rtol; }));
    t.emplace_back("integrator.atol", real([](auto& c) -> auto& { return c.integrator.atol; }));
    t.emplace_back("integrator.t_end", real([](auto& c) -> auto& { return c.integrator.t_end; }));
    t.emplace_back("integrator.dt_init", real([](auto& c) -> auto& { return c.integrator.dt_init; }));
    t.emplace_back("integrator.dt_max",
                   Field{[](RunConfig& c, std::string_view v) {
                           const auto d = to_double(v);
                           if (d) c.integrator.dt_max = *d;
                           return d.has_value();
                         },
                         [](const RunConfig& c) -> std::optional<std::string> {
                           if (!c.integrator.dt_max) return std::nullopt;
                           return fmt17(*c.integrator.dt_max);
                         }});
    t.emplace_back("integrator.record_times",
                   list([](auto& c) -> auto& { return c.integrator.record_times; }));
    t.emplace_back("initial.kind",
                   Field{[](RunConfig& c, std::string_view v) {
                           v = trim(v);
                           if (v == "uniform") c.initial.kind = InitialKind::UniformIndicator;
                           else if (v == "gaussian") c.initial.kind = InitialKind::GaussianTrait;
                           else return false;
                           return true;
                         },
                         [](const RunConfig& c) -> std::optional<std::string> {
                           return std::string(to_string(c.initial.kind));
                         }});
    t.emplace_back("initial.L", real([](auto& c) -> auto& { return c.initial.L; }));
    t.emplace_back("initial.theta_tilde", real([](auto& c) -> auto& { return c.initial.theta_tilde; }));
    t.emplace_back("initial.sigma", real([](auto& c) -> auto& { return c.initial.sigma; }));
    t.emplace_back("initial.scale", real([](auto& c) -> auto& { return c.initial.scale; }));
    t.emplace_back("sweep.alphas", list([](auto& c) -> auto& { return c.sweep.alphas; }));
    t.emplace_back("sweep.L_values", list([](auto& c) -> auto& { return c.sweep.L_values; }));
    t.emplace_back("sweep.write_matrix", boolean([](auto& c) -> auto& { return c.sweep.write_matrix; }));
    t.emplace_back("scan.theta_tildes",
                   list([](auto& c) -> auto& { return c.scan.theta_tildes; }));
    t.emplace_back("scan.L", real([](auto& c) -> auto& { return c.scan.L; }));
    t.emplace_back("scan.sigma", real([](auto& c) -> auto& { return c.scan.sigma; }));
    t.emplace_back("oracle.d", real([](auto& c) -> auto& { return c.oracle.d; }));
    t.emplace_back("oracle.theta0", list([](auto& c) -> auto& { return c.oracle.theta0s; }));
    t.emplace_back("oracle.level", real([](auto& c) -> auto& { return c.oracle.level; }));
    t.emplace_back("oracle.x_lo", real([](auto& c) -> auto& { return c.oracle.x_lo; }));
    t.emplace_back("oracle.x_hi", real([](auto& c) -> auto& { return c.oracle.x_hi; }));
    t.emplace_back("oracle.nx", count([](auto& c) -> auto& { return c.oracle.nx; }));
    t.emplace_back("oracle.t_end", real([](auto& c) -> auto& { return c.oracle.t_end; }));
    t.emplace_back("oracle.step_position", real([](auto& c) -> auto& { return c.oracle.step_position; }));
    t.emplace_back("outputs.dir", text([](auto& c) -> auto& { return c.outputs.dir; }));
    t.emplace_back("outputs.prefix", text([](auto& c) -> auto& { return c.outputs.prefix; }));
    t.emplace_back("outputs.snapshot_times",
                   list([](auto& c) -> auto& { return c.outputs.snapshot_times; }));
    t.emplace_back("outputs.timing", boolean([](auto& c) -> auto& { return c.outputs.timing; }));
    t.emplace_back("monitors.enabled", boolean([](auto& c) -> auto& { return c.monitors.enabled; }));
    t.emplace_back("monitors.records", count([](auto& c) -> auto& { return c.monitors.records; }));
    t.emplace_back("monitors.monotone_hypothesis",
                   Field{[](RunConfig& c, std::string_view v) {
                           if (trim(v) == "auto") {
                             c.monitors.monotone_hypothesis.reset();
                             return true;
                           }
                           const auto b = to_bool(v);
                           if (b) c.monitors.monotone_hypothesis = *b;
                           return b.has_value();
                         },
                         [](const RunConfig& c) -> std::optional<std::string> {
                           if (!c.monitors.monotone_hypothesis) return std::string("auto");
                           return std::string(*c.monitors.monotone_hypothesis ? "true" : "false");
                         }});
    return t;
  }();
  return table;
}

}  // namespace detail

/// Parses "key = value" lines; '#' starts a comment. Unknown, duplicate or malformed keys
/// raise ConfigError with the 1-based line number.
inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::map<std::string, int> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(line_no, std::string(line),
                        "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    const auto& table = detail::fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return f.first == key; });
    if (it == table.end())
      throw ConfigError(line_no, key, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (const auto [prev, inserted] = seen.emplace(key, line_no); !inserted) {
      throw ConfigError(line_no, key,
                        "line " + std::to_string(line_no) + ": duplicate key '" + key +
                            "' (first set on line " + std::to_string(prev->second) + ")");
    }
    if (!it->second.set(cfg, value)) {
      throw ConfigError(line_no, key,
                        "line " + std::to_string(line_no) + ": invalid value '" + std::string(value) +
                            "' for key '" + key + "'");
    }
  }
  return cfg;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline void write_config(std::ostream& os, const RunConfig& cfg) {
  std::string section;
  for (const auto& [key, field] : detail::fields()) {
    const auto value = field.get(cfg);
    if (!value) continue;
    const std::string sec = key.substr(0, key.find('.'));
    if (sec != section) {
      if (!section.empty()) os << '\n';
      section = sec;
    }
    os << key << " = " << *value << '\n';
  }
}

inline std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  write_config(os, cfg);
  return os.str();
}

// ---- trajectories and snapshots -------------------------------------------------------------

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,N,sup_u\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k)
    os << fmt17(traj.times[k]) << ',' << fmt17(traj.mass_series[k]) << ',' << fmt17(traj.sup_series[k])
       << '\n';
}

inline void write_snapshot(std::ostream& os, const StateField& s) {
  const Grid& g = s.grid;
  os << "# t=" << fmt17(s.t) << " nx=" << g.nx << " ntheta=" << g.ntheta << " x_lo=" << fmt17(g.x_lo)
     << " dx=" << fmt17(g.dx) << " dtheta=" << fmt17(g.dtheta) << '\n';
  for (std::size_t i = 0; i < g.nx; ++i) {
    for (std::size_t j = 0; j < g.ntheta; ++j) {
      if (j) os << ' ';
      os << fmt17(s.at(i, j));
    }
    os << '\n';
  }
}

/// Reads a snapshot written by write_snapshot; `params` supplies the trait range.
inline StateField read_snapshot(std::istream& in, const ModelParams& params) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("# ", 0) != 0)
    throw ConfigError(1, "header", "snapshot: missing '# t=...' header");
  std::map<std::string, std::string> kv;
  std::istringstream hs(header.substr(2));
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* k : {"t", "nx", "ntheta", "x_lo", "dx", "dtheta"})
    if (!kv.count(k)) throw ConfigError(1, k, std::string("snapshot header lacks ") + k);
  const auto num = [&](const char* k) {
    const auto v = detail::to_double(kv[k]);
    if (!v) throw ConfigError(1, k, std::string("snapshot header: bad value for ") + k);
    return *v;
  };
  const auto nx = static_cast<std::size_t>(num("nx"));
  const auto nth = static_cast<std::size_t>(num("ntheta"));
  const double x_lo = num("x_lo");
  const double dx = num("dx");
  const Grid g = Grid::make(x_lo, x_lo + dx * static_cast<double>(nx - 1), nx, nth, params);
  StateField s(params, g);
  s.t = num("t");
  for (std::size_t k = 0; k < s.u.size(); ++k) {
    if (!(in >> tok)) throw ConfigError(static_cast<int>(2 + k / nth), "data", "snapshot: truncated data");
    const auto v = detail::to_double(tok);
    if (!v) throw ConfigError(static_cast<int>(2 + k / nth), "data", "snapshot: bad number '" + tok + "'");
    s.u[k] = *v;
  }
  return s;
}

/// Rebuilds the record series of a trajectory from a time-ordered list of snapshots.
inline Trajectory trajectory_from_snapshots(std::vector<StateField> snaps) {
  if (snaps.empty()) throw MissingRecord("no snapshots");
  std::sort(snaps.begin(), snaps.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  Trajectory traj;
  traj.initial_max_rho = detail::max_of(integrate_mass(snaps.front()));
  for (auto& s : snaps) {
    traj.times.push_back(s.t);
    traj.mass_series.push_back(total_mass(s));
    traj.sup_series.push_back(detail::max_of(s.u));
    traj.min_series.push_back(detail::min_of(s.u));
    traj.snapshots.push_back(std::move(s));
  }
  return traj;
}

// ---- experiment tables -----------------------------------------------------------------------

/// Header alpha,L,label,N_half,N_end,wall_ms; footer comment with the alpha_star estimate.
inline void write_sweep_csv(std::ostream& os, const SweepResult& r, bool timing = true) {
  os << "alpha,L,label,N_half,N_end,wall_ms\n";
  for (std::size_t a = 0; a < r.alpha_values.size(); ++a) {
    for (std::size_t l = 0; l < r.L_values.size(); ++l) {
      const auto& c = r.at(a, l);
      os << fmt17(r.alpha_values[a]) << ',' << fmt17(r.L_values[l]) << ',' << c.label_name() << ','
         << fmt17(c.ok() ? c.outcome.N_half : NAN) << ',' << fmt17(c.ok() ? c.outcome.N_end : NAN) << ','
         << fmt17(timing ? c.wall_ms : 0.0) << '\n';
    }
  }
  const auto star = empirical_alpha_star(r);
  std::string step = "nan";
  if (r.alpha_values.size() > 1) step = fmt17(r.alpha_values[1] - r.alpha_values[0]);
  os << "# alpha_star=" << (star ? fmt17(*star) : std::string("none")) << " step=" << step << '\n';
  for (const auto& c : r.cells)
    if (c.error) os << "# indeterminate: " << *c.error << '\n';
}

inline int label_code(const CellResult& c) {
  if (!c.ok()) return -1;
  return static_cast<int>(3 - static_cast<int>(c.outcome.label));
}

/// gnuplot "nonuniform matrix": first row = count and L values, then alpha and label codes.
inline void write_sweep_matrix(std::ostream& os, const SweepResult& r) {
  os << "# codes: 3 Persistence 2 ProbablePersistence 1 ProbableExtinction 0 Extinction -1 Indeterminate\n";
  os << "# rows: alpha, columns: L\n";
  os << r.L_values.size();
  for (double L : r.L_values) os << ' ' << fmt17(L);
  os << '\n';
  for (std::size_t a = 0; a < r.alpha_values.size(); ++a) {
    os << fmt17(r.alpha_values[a]);
    for (std::size_t l = 0; l < r.L_values.size(); ++l) os << ' ' << label_code(r.at(a, l));
    os << '\n';
  }
}

inline void write_scan_csv(std::ostream& os, const TraitScanResult& r, bool timing = true) {
  os << "theta_tilde,label,N_half,N_end,wall_ms\n";
  for (const auto& e : r.entries) {
    const auto& c = e.cell;
    os << fmt17(e.theta_tilde) << ',' << c.label_name() << ',' << fmt17(c.ok() ? c.outcome.N_half : NAN)
       << ',' << fmt17(c.ok() ? c.outcome.N_end : NAN) << ',' << fmt17(timing ? c.wall_ms : 0.0) << '\n';
  }
  os << "# theta_tilde_star=" << (r.threshold ? fmt17(*r.threshold) : std::string("none")) << '\n';
}

struct SpeedRow {
  BistableParams params;
  std::optional<FrontSpeedEstimate> estimate;
  std::string error;
};

inline void write_speed_csv(std::ostream& os, const std::vector<SpeedRow>& rows) {
  os << "theta0,d,speed,expected,r_squared,fit_t0,fit_t1,status\n";
  for (const auto& r : rows) {
    os << fmt17(r.params.theta0) << ',' << fmt17(r.params.d) << ',';
    if (r.estimate) {
      os << fmt17(r.estimate->speed) << ',' << fmt17(table_speed(r.params)) << ','
         << fmt17(r.estimate->r_squared) << ',' << fmt17(r.estimate->fit_t0) << ','
         << fmt17(r.estimate->fit_t1) << ",ok\n";
    } else {
      os << "nan," << fmt17(table_speed(r.params)) << ",nan,nan,nan," << r.error << '\n';
    }
  }
}

}  // namespace allee
