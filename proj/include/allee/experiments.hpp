#pragma once

// Numerical experiments on I x Theta: initial data, the four-way outcome rule based on the
// total mass N(t), and the (alpha, L) phase-diagram and initial-trait scans.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "allee/error.hpp"
#include "allee/integrate.hpp"
#include "allee/model.hpp"
#include "allee/monitor.hpp"
#include "allee/parallel.hpp"

namespace allee {

enum class InitialKind { UniformIndicator, GaussianTrait };

/// u0 = scale * f(theta) * 1_{(-L/2, L/2)}(x), where f integrates to 1 over Theta:
/// f = 1/(theta_max - theta_min) for UniformIndicator, a normalized Gaussian otherwise.
struct InitialCondition {
  InitialKind kind = InitialKind::UniformIndicator;
  double L = 20.0;
  double theta_tilde = 0.3;
  double sigma = 0.1;
  double scale = 1.0;

  static InitialCondition uniform(double L, double scale = 1.0) {
    return {InitialKind::UniformIndicator, L, 0.0, 0.0, scale};
  }
  static InitialCondition gaussian(double L, double theta_tilde, double sigma) {
    return {InitialKind::GaussianTrait, L, theta_tilde, sigma, 1.0};
  }

  bool operator==(const InitialCondition&) const = default;
};

inline const char* to_string(InitialKind k) noexcept {
  return k == InitialKind::UniformIndicator ? "uniform" : "gaussian";
}

/// Trait profile f(theta_j), trapezoid-normalized to unit integral.
inline std::vector<double> trait_profile(const InitialCondition& ic, const Grid& g) {
  std::vector<double> f(g.ntheta);
  if (ic.kind == InitialKind::UniformIndicator) {
    std::fill(f.begin(), f.end(), 1.0 / (g.theta_max - g.theta_min));
    return f;
  }
  for (std::size_t j = 0; j < g.ntheta; ++j) {
    const double z = g.theta(j) - ic.theta_tilde;
    f[j] = std::exp(-z * z / (2.0 * ic.sigma * ic.sigma));
  }
  const double c = 1.0 / detail::trapezoid(f, g.dtheta);
  for (double& v : f) v *= c;
  return f;
}

/// Samples the initial condition pointwise at nodes; a node exactly on |x| = L/2 gets half weight.
inline StateField build_initial(const InitialCondition& ic, const Grid& g, const ModelParams& p) {
  p.validate();
  if (!(ic.L > 0.0) || ic.L > g.length() + 1e-12) {
    std::ostringstream m;
    m << "initial support length L=" << ic.L << " must lie in (0, " << g.length() << "]";
    throw DomainError(m.str());
  }
  if (!(ic.scale > 0.0)) throw DomainError("initial.scale must be > 0");
  if (ic.kind == InitialKind::GaussianTrait) {
    if (!(ic.theta_tilde > p.theta_min && ic.theta_tilde < p.theta_max))
      throw DomainError("initial.theta_tilde must lie inside (theta_min, theta_max)");
    if (!(ic.sigma > 0.0)) throw DomainError("initial.sigma must be > 0");
  }
  const auto f = trait_profile(ic, g);
  StateField s(p, g);
  const double half = 0.5 * ic.L;
  const double edge_tol = 1e-9 * std::max(1.0, half);
  std::size_t supported = 0;
  for (std::size_t i = 0; i < g.nx; ++i) {
    const double ax = std::abs(g.x(i));
    double w = 0.0;
    if (std::abs(ax - half) <= edge_tol)
      w = 0.5;
    else if (ax < half)
      w = 1.0;
    if (w == 0.0) continue;
    ++supported;
    for (std::size_t j = 0; j < g.ntheta; ++j) s.at(i, j) = ic.scale * w * f[j];
  }
  if (supported == 0) throw DomainError("initial support contains no grid node");
  return s;
}

enum class Outcome { Persistence, ProbablePersistence, ProbableExtinction, Extinction };

inline const char* to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::Persistence: return "Persistence";
    case Outcome::ProbablePersistence: return "ProbablePersistence";
    case Outcome::ProbableExtinction: return "ProbableExtinction";
    case Outcome::Extinction: return "Extinction";
  }
  return "?";
}

inline bool persistence_side(Outcome o) noexcept {
  return o == Outcome::Persistence || o == Outcome::ProbablePersistence;
}

struct OutcomeLabel {
  Outcome label = Outcome::ProbableExtinction;
  double N_half = 0.0;
  double N_end = 0.0;
};

/// N(T) > |I| - 1: persistence; N(T) < 1: extinction; otherwise the trend from T/2 to T
/// decides, with ties counted as probable extinction.
inline OutcomeLabel classify_outcome(double n_half, double n_end, double domain_len) {
  OutcomeLabel o{Outcome::ProbableExtinction, n_half, n_end};
  if (n_end > domain_len - 1.0)
    o.label = Outcome::Persistence;
  else if (n_end < 1.0)
    o.label = Outcome::Extinction;
  else if (n_end > n_half)
    o.label = Outcome::ProbablePersistence;
  return o;
}

inline OutcomeLabel classify_outcome(const Trajectory& traj, double domain_len) {
  if (traj.times.empty()) throw MissingRecord("trajectory has no records");
  const double T = traj.times.back();
  const auto half = traj.find(0.5 * T);
  if (!half) {
    std::ostringstream m;
    m << "trajectory lacks a record at T/2 = " << 0.5 * T;
    throw MissingRecord(m.str());
  }
  return classify_outcome(traj.mass_series[*half], traj.mass_series.back(), domain_len);
}

/// Everything besides the model parameters and initial data that a single run needs.
struct SimulationSetup {
  double x_lo = -60.0;
  double x_hi = 60.0;
  std::size_t nx = 241;
  std::size_t ntheta = 33;
  IntegratorConfig integrator;
  bool monitors = false;
  std::size_t monitor_records = 20;
  MonitorOptions monitor_options;

  Grid grid(const ModelParams& p) const { return Grid::make(x_lo, x_hi, nx, ntheta, p); }

  /// Integrator settings with T/2 and T recorded, plus snapshots when monitoring.
  IntegratorConfig resolved_integrator() const {
    IntegratorConfig c = integrator;
    const double T = c.t_end;
    c.record_times.push_back(0.5 * T);
    c.record_times.push_back(T);
    if (monitors) {
      c.store_snapshots = true;
      const auto extra = uniform_record_times(T, monitor_records);
      c.record_times.insert(c.record_times.end(), extra.begin(), extra.end());
    }
    std::sort(c.record_times.begin(), c.record_times.end());
    c.record_times.erase(std::unique(c.record_times.begin(), c.record_times.end()),
                         c.record_times.end());
    return c;
  }
};

struct CellResult {
  OutcomeLabel outcome;
  double wall_ms = 0.0;
  std::optional<std::string> error;  // solver failure; the label is then Indeterminate
  std::optional<MonitorReport> monitors;

  bool ok() const noexcept { return !error; }
  std::string label_name() const { return error ? "Indeterminate" : to_string(outcome.label); }
};

/// build_initial -> solve -> classify_outcome (-> run_monitors). Solver failures are captured.
inline CellResult run_cell(const ModelParams& p, const InitialCondition& ic,
                           const SimulationSetup& setup) {
  CellResult r;
  const auto t0 = std::chrono::steady_clock::now();
  const Grid g = setup.grid(p);
  const StateField init = build_initial(ic, g, p);
  try {
    const Trajectory traj = solve(init, setup.resolved_integrator());
    r.outcome = classify_outcome(traj, g.length());
    if (setup.monitors) {
      MonitorOptions mo = setup.monitor_options;
      if (!mo.support_length) mo.support_length = ic.L;
      r.monitors = run_monitors(traj, p, mo);
    }
  } catch (const SolverError& e) {
    r.error = std::string(SolverError::kind_name(e.kind())) + ": " + e.what();
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

struct SweepResult {
  std::vector<double> alpha_values;
  std::vector<double> L_values;
  std::vector<CellResult> cells;  // alpha-major: cells[a * L_values.size() + l]

  const CellResult& at(std::size_t a, std::size_t l) const { return cells[a * L_values.size() + l]; }
};

/// One uniform-indicator simulation per (alpha, L) cell, run on `workers` threads.
inline SweepResult run_sweep(const ModelParams& base, const std::vector<double>& alphas,
                             const std::vector<double>& Ls, const SimulationSetup& setup,
                             std::size_t workers = 1) {
  if (alphas.empty() || Ls.empty()) throw DomainError("run_sweep: empty alpha or L range");
  base.validate();
  setup.integrator.validate();
  for (double L : Ls) build_initial(InitialCondition::uniform(L), setup.grid(base), base);

  SweepResult res;
  res.alpha_values = alphas;
  res.L_values = Ls;
  res.cells.resize(alphas.size() * Ls.size());
  parallel_for(res.cells.size(), workers, [&](std::size_t k) {
    ModelParams p = base;
    p.alpha = alphas[k / Ls.size()];
    res.cells[k] = run_cell(p, InitialCondition::uniform(Ls[k % Ls.size()]), setup);
  });
  return res;
}

/// Smallest sampled alpha from which every cell, at that alpha and all larger sampled ones,
/// is on the extinction side; with the sampling step as uncertainty.
inline std::optional<double> empirical_alpha_star(const SweepResult& r) {
  std::optional<double> star;
  for (std::size_t a = r.alpha_values.size(); a-- > 0;) {
    bool all_extinct = true;
    for (std::size_t l = 0; l < r.L_values.size(); ++l) {
      const auto& c = r.at(a, l);
      if (!c.ok() || persistence_side(c.outcome.label)) all_extinct = false;
    }
    if (!all_extinct) break;
    star = r.alpha_values[a];
  }
  return star;
}

struct TraitScanEntry {
  double theta_tilde = 0.0;
  CellResult cell;
};

struct TraitScanResult {
  std::vector<TraitScanEntry> entries;
  std::optional<double> threshold;  // midpoint between last persistent and first extinct value
};

/// Estimated theta_tilde threshold: midpoint of the first persistence -> extinction switch.
inline std::optional<double> trait_threshold(const std::vector<TraitScanEntry>& e) {
  for (std::size_t k = 1; k < e.size(); ++k) {
    if (!e[k].cell.ok() || !e[k - 1].cell.ok()) continue;
    if (persistence_side(e[k - 1].cell.outcome.label) && !persistence_side(e[k].cell.outcome.label))
      return 0.5 * (e[k - 1].theta_tilde + e[k].theta_tilde);
  }
  return std::nullopt;
}

inline TraitScanResult run_trait_scan(const ModelParams& base, const std::vector<double>& thetas,
                                      double L, double sigma, const SimulationSetup& setup,
                                      std::size_t workers = 1) {
  if (thetas.empty()) throw DomainError("run_trait_scan: empty theta_tilde list");
  base.validate();
  for (double th : thetas) build_initial(InitialCondition::gaussian(L, th, sigma), setup.grid(base), base);
  TraitScanResult res;
  res.entries.resize(thetas.size());
  parallel_for(thetas.size(), workers, [&](std::size_t k) {
    res.entries[k].theta_tilde = thetas[k];
    res.entries[k].cell = run_cell(base, InitialCondition::gaussian(L, thetas[k], sigma), setup);
  });
  res.threshold = trait_threshold(res.entries);
  return res;
}

}  // namespace allee
