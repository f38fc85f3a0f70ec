#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "allee/allee.hpp"

namespace fs = std::filesystem;
using namespace allee;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kSolver = 2;
constexpr int kStrictMonitor = 3;

struct Globals {
  std::string config;
  std::string out;
  std::size_t workers = 1;
  bool strict = false;
  bool porcelain = false;
  bool no_timing = false;
};

RunConfig load_config(const Globals& g) {
  RunConfig cfg;
  if (!g.config.empty()) {
    std::ifstream in(g.config);
    if (!in) throw ConfigError(0, "", "cannot open config file '" + g.config + "'");
    cfg = parse_config(in);
  }
  if (!g.out.empty()) cfg.outputs.dir = g.out;
  if (g.no_timing) cfg.outputs.timing = false;
  return cfg;
}

fs::path output_path(const RunConfig& cfg, const std::string& suffix) {
  fs::path dir(cfg.outputs.dir);
  fs::create_directories(dir);
  return dir / (cfg.outputs.prefix + suffix);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw DomainError("cannot write '" + p.string() + "'");
  return os;
}

int cmd_simulate(const Globals& g) {
  RunConfig cfg = load_config(g);
  cfg.validate();
  SimulationSetup setup = cfg.setup();
  const Grid grid = setup.grid(cfg.model);
  const StateField init = build_initial(cfg.initial, grid, cfg.model);

  IntegratorConfig ic = setup.resolved_integrator();
  ic.store_snapshots = true;
  ic.record_times.insert(ic.record_times.end(), cfg.outputs.snapshot_times.begin(),
                         cfg.outputs.snapshot_times.end());
  std::sort(ic.record_times.begin(), ic.record_times.end());
  ic.record_times.erase(std::unique(ic.record_times.begin(), ic.record_times.end()), ic.record_times.end());

  const Trajectory traj = solve(init, ic);
  const OutcomeLabel outcome = classify_outcome(traj, grid.length());

  {
    auto os = open_out(output_path(cfg, "_trajectory.csv"));
    write_trajectory_csv(os, traj);
  }
  for (double t : cfg.outputs.snapshot_times) {
    const auto k = traj.find(t);
    if (!k) continue;
    auto os = open_out(output_path(cfg, "_t" + fmt17(t) + ".snap"));
    write_snapshot(os, traj.snapshots[*k]);
  }

  bool monitors_ok = true;
  if (cfg.monitors.enabled) {
    MonitorOptions mo = setup.monitor_options;
    mo.support_length = cfg.initial.L;
    const MonitorReport rep = run_monitors(traj, cfg.model, mo);
    monitors_ok = rep.passed();
    auto txt = open_out(output_path(cfg, "_monitors.txt"));
    write_monitor_text(txt, rep);
    auto csv = open_out(output_path(cfg, "_monitors.csv"));
    write_monitor_csv(csv, rep);
  }

  if (g.porcelain) {
    std::cout << "outcome=" << to_string(outcome.label) << " N_half=" << fmt17(outcome.N_half)
              << " N_end=" << fmt17(outcome.N_end) << " monitors=" << (monitors_ok ? "pass" : "fail") << '\n';
  } else {
    std::cout << "outcome: " << to_string(outcome.label) << "  N(T/2) = " << outcome.N_half
              << "  N(T) = " << outcome.N_end << '\n';
    std::cout << "steps: " << traj.stats.accepted << " accepted, " << traj.stats.rejected << " rejected\n";
    if (cfg.monitors.enabled) std::cout << "monitors: " << (monitors_ok ? "pass" : "FAIL") << '\n';
    std::cout << "output: " << cfg.outputs.dir << '\n';
  }
  return (!monitors_ok && g.strict) ? kStrictMonitor : kOk;
}

struct EigenFlags {
  std::optional<double> theta_min, theta_max, alpha, d;
  std::size_t ntheta = kRegimeEigenNodes;
  double shift = 0.0;
  double M = 1.0;
};

ModelParams eigen_params(const Globals& g, const EigenFlags& f) {
  ModelParams p = load_config(g).model;
  if (f.theta_min) p.theta_min = *f.theta_min;
  if (f.theta_max) p.theta_max = *f.theta_max;
  if (f.alpha) p.alpha = *f.alpha;
  if (f.d) p.d = *f.d;
  p.theta_min += f.shift;
  p.theta_max += f.shift;
  return p;
}

int cmd_eigen(const Globals& g, const EigenFlags& f) {
  const ModelParams p = eigen_params(g, f);
  if (!(p.theta_min < p.theta_max) || !(p.alpha > 0.0)) throw DomainError("need theta_min < theta_max and alpha > 0");
  const EigenPair pair = solve_eigen(p, f.ntheta);
  const LambdaBounds b = lambda_bounds(p);
  const ShapeReport shape = check_eigenfunction_shape(pair);
  if (g.porcelain) {
    std::cout << "lambda=" << fmt17(pair.lambda) << " lower=" << fmt17(b.lower) << " upper=" << fmt17(b.upper)
              << " conditional_upper=" << (b.conditional_upper ? fmt17(*b.conditional_upper) : "none")
              << " min_phi=" << fmt17(pair.min_phi()) << " shape=" << (shape.pass ? "pass" : "fail")
              << " ntheta=" << f.ntheta << '\n';
  } else {
    std::printf("lambda_alpha     = %.12g\n", pair.lambda);
    std::printf("bounds           = (%.12g, %.12g)\n", b.lower, b.upper);
    if (b.conditional_upper) std::printf("small-alpha bound = %.12g\n", *b.conditional_upper);
    std::printf("min phi          = %.6g\n", pair.min_phi());
    std::printf("shape check      = %s%s%s\n", shape.pass ? "pass" : "FAIL", shape.pass ? "" : ": ",
                shape.reason.c_str());
  }
  return kOk;
}

int cmd_regime(const Globals& g, const EigenFlags& f) {
  const ModelParams p = eigen_params(g, f);
  p.validate();
  const EigenPair pair = solve_eigen(p, f.ntheta);
  const RegimeReport r = classify_regime(p, pair, f.M);
  const Thresholds t = compute_thresholds(p, pair, f.M);
  const auto opt = [](const std::optional<double>& v) { return v ? fmt17(*v) : std::string("none"); };
  if (g.porcelain) {
    std::cout << "cell=" << to_string(r.cell) << " lambda=" << fmt17(r.lambda)
              << " sign_indeterminate=" << (r.sign_indeterminate ? "true" : "false")
              << " alpha_sharp=" << opt(t.alpha_sharp) << " u0_sup_bound=" << opt(t.u0_sup_bound)
              << " eta_star=" << opt(t.eta_star) << " lambda1_dirichlet=" << fmt17(t.lambda1_dirichlet) << '\n';
  } else {
    std::cout << "cell: " << to_string(r.cell) << '\n'
              << "lambda_alpha: " << r.lambda << '\n'
              << "notes: " << r.notes << '\n'
              << "alpha_sharp(M=" << f.M << "): " << opt(t.alpha_sharp) << '\n'
              << "extinction bound on ||u0||: " << opt(t.u0_sup_bound) << '\n';
  }
  return kOk;
}

int cmd_sweep(const Globals& g) {
  const RunConfig cfg = load_config(g);
  cfg.validate();
  if (cfg.sweep.alphas.empty()) throw DomainError("sweep.alphas is empty");
  const SweepResult r = run_sweep(cfg.model, cfg.sweep.alphas, cfg.sweep.L_values, cfg.setup(), g.workers);
  {
    auto os = open_out(output_path(cfg, "_sweep.csv"));
    write_sweep_csv(os, r, cfg.outputs.timing);
  }
  if (cfg.sweep.write_matrix) {
    auto os = open_out(output_path(cfg, "_sweep_matrix.dat"));
    write_sweep_matrix(os, r);
  }
  const auto star = empirical_alpha_star(r);
  std::size_t failed = 0, monitor_fail = 0;
  for (const auto& c : r.cells) {
    failed += c.ok() ? 0 : 1;
    monitor_fail += (c.monitors && !c.monitors->passed()) ? 1 : 0;
  }
  std::cout << (g.porcelain ? "alpha_star=" : "empirical alpha_star: ") << (star ? fmt17(*star) : "none")
            << (g.porcelain ? " indeterminate=" : "  indeterminate cells: ") << failed
            << (g.porcelain ? " monitor_failures=" : "  monitor failures: ") << monitor_fail << '\n';
  if (failed == r.cells.size()) return kSolver;
  return (monitor_fail && g.strict) ? kStrictMonitor : kOk;
}

int cmd_scan(const Globals& g) {
  const RunConfig cfg = load_config(g);
  cfg.validate();
  if (cfg.scan.theta_tildes.empty()) throw DomainError("scan.theta_tildes is empty");
  const TraitScanResult r =
      run_trait_scan(cfg.model, cfg.scan.theta_tildes, cfg.scan.L, cfg.scan.sigma, cfg.setup(), g.workers);
  {
    auto os = open_out(output_path(cfg, "_scan.csv"));
    write_scan_csv(os, r, cfg.outputs.timing);
  }
  std::size_t failed = 0, monitor_fail = 0;
  for (const auto& e : r.entries) {
    failed += e.cell.ok() ? 0 : 1;
    monitor_fail += (e.cell.monitors && !e.cell.monitors->passed()) ? 1 : 0;
  }
  std::cout << (g.porcelain ? "theta_tilde_star=" : "estimated theta_tilde_star: ")
            << (r.threshold ? fmt17(*r.threshold) : "none") << '\n';
  if (failed == r.entries.size()) return kSolver;
  return (monitor_fail && g.strict) ? kStrictMonitor : kOk;
}

int cmd_oracle(const Globals& g) {
  const RunConfig cfg = load_config(g);
  std::vector<SpeedRow> rows(cfg.oracle.theta0s.size());
  parallel_for(rows.size(), g.workers, [&](std::size_t k) {
    rows[k].params = {cfg.oracle.d, cfg.oracle.theta0s[k]};
    try {
      rows[k].estimate = run_front_speed(rows[k].params, cfg.oracle.setup());
    } catch (const FrontError& e) {
      rows[k].error = e.kind() == FrontError::Kind::FrontNotFound ? "FrontNotFound" : "BoundaryContamination";
    } catch (const SolverError& e) {
      rows[k].error = SolverError::kind_name(e.kind());
    }
  });
  {
    auto os = open_out(output_path(cfg, "_speeds.csv"));
    write_speed_csv(os, rows);
  }
  std::size_t failed = 0;
  for (const auto& r : rows) {
    if (!r.estimate) ++failed;
    if (g.porcelain) {
      std::cout << "theta0=" << fmt17(r.params.theta0) << " speed="
                << (r.estimate ? fmt17(r.estimate->speed) : "nan") << " expected=" << fmt17(table_speed(r.params))
                << '\n';
    } else if (r.estimate) {
      std::printf("theta0 = %-6g  speed = %.6f  table = %.6f  r^2 = %.6f\n", r.params.theta0, r.estimate->speed,
                  table_speed(r.params), r.estimate->r_squared);
    } else {
      std::printf("theta0 = %-6g  %s\n", r.params.theta0, r.error.c_str());
    }
  }
  return failed == rows.size() && !rows.empty() ? kSolver : kOk;
}

int cmd_monitor(const Globals& g, const std::vector<std::string>& files) {
  const RunConfig cfg = load_config(g);
  cfg.model.validate();
  std::vector<StateField> snaps;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw DomainError("cannot open snapshot '" + f + "'");
    snaps.push_back(read_snapshot(in, cfg.model));
  }
  const Trajectory traj = trajectory_from_snapshots(std::move(snaps));
  MonitorOptions mo = cfg.setup().monitor_options;
  mo.support_length = cfg.initial.L;
  const MonitorReport rep = run_monitors(traj, cfg.model, mo);
  if (g.porcelain)
    write_monitor_csv(std::cout, rep);
  else
    write_monitor_text(std::cout, rep);
  return (!rep.passed() && g.strict) ? kStrictMonitor : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal reaction-diffusion model with an evolving Allee threshold"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Run configuration (key = value)");
  app.add_option("--out", g.out, "Output directory (overrides outputs.dir)");
  app.add_option("--workers", g.workers, "Concurrent simulations")->check(CLI::PositiveNumber);
  app.add_flag("--strict", g.strict, "Exit 3 when a monitor check fails");
  app.add_flag("--porcelain", g.porcelain, "Single-line machine-readable output");
  app.add_flag("--no-timing", g.no_timing, "Write wall_ms = 0 in tables");

  EigenFlags ef;
  auto add_eigen_flags = [&ef](CLI::App* sub) {
    sub->add_option("--theta-min", ef.theta_min);
    sub->add_option("--theta-max", ef.theta_max);
    sub->add_option("--alpha", ef.alpha);
    sub->add_option("--d", ef.d);
    sub->add_option("--ntheta", ef.ntheta)->check(CLI::Range(16, 1 << 22));
    sub->add_option("--shift", ef.shift, "Add a constant to both trait bounds");
    sub->add_option("--M", ef.M, "Bound on the initial mass sup rho(0, .)");
  };

  auto* simulate = app.add_subcommand("simulate", "Run one simulation from --config");
  auto* eigen = app.add_subcommand("eigen", "Principal eigenpair of -alpha d2/dtheta2 + theta");
  add_eigen_flags(eigen);
  auto* regime = app.add_subcommand("regime", "Persistence/extinction regime and thresholds");
  add_eigen_flags(regime);
  auto* sweep = app.add_subcommand("sweep", "(alpha, L) phase diagram");
  auto* scan = app.add_subcommand("scan", "Initial mean-trait scan");
  auto* oracle = app.add_subcommand("oracle", "Front speeds of the local bistable equation");
  auto* monitor = app.add_subcommand("monitor", "Invariant checks on snapshot files");
  std::vector<std::string> snapshot_files;
  monitor->add_option("snapshots", snapshot_files, "Snapshot files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(g);
    if (*eigen) return cmd_eigen(g, ef);
    if (*regime) return cmd_regime(g, ef);
    if (*sweep) return cmd_sweep(g);
    if (*scan) return cmd_scan(g);
    if (*oracle) return cmd_oracle(g);
    if (*monitor) return cmd_monitor(g, snapshot_files);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "DomainError: " << e.what() << '\n';
    return kUsage;
  } catch (const MissingRecord& e) {
    std::cerr << "MissingRecord: " << e.what() << '\n';
    return kSolver;
  } catch (const SolverError& e) {
    std::cerr << "SolverError (" << SolverError::kind_name(e.kind()) << "): " << e.what() << '\n';
    return kSolver;
  } catch (const FrontError& e) {
    std::cerr << "FrontError: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  }
  return kUsage;
}
