#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "allee/dopri.hpp"
#include "allee/model.hpp"

namespace allee {

struct IntegratorConfig {
  double rtol = 1e-6;
  double atol = 1e-8;
  double t_end = 100.0;
  double dt_init = 1e-3;
  std::optional<double> dt_max;  // unset: diffusion ceiling from stable_dt_ceiling()
  std::vector<double> record_times;
  bool store_snapshots = false;

  void validate() const {
    if (!(atol > 0.0)) throw DomainError("integrator.atol must be > 0");
    if (!(rtol > 0.0 && rtol < 1.0)) throw DomainError("integrator.rtol must lie in (0, 1)");
    if (!(t_end > 0.0)) throw DomainError("integrator.t_end must be > 0");
    if (!(dt_init > 0.0)) throw DomainError("integrator.dt_init must be > 0");
    if (dt_max && !(*dt_max >= dt_init))
      throw DomainError("integrator.dt_max must be >= integrator.dt_init");
    if (!std::is_sorted(record_times.begin(), record_times.end()))
      throw DomainError("integrator.record_times must be sorted");
    if (!record_times.empty() && (record_times.back() > t_end || record_times.front() < 0.0))
      throw DomainError("integrator.record_times must lie in [0, t_end]");
  }

  bool operator==(const IntegratorConfig&) const = default;
};

/// Equally spaced record times k * t_end / count, k = 1..count.
inline std::vector<double> uniform_record_times(double t_end, std::size_t count) {
  std::vector<double> r(count);
  for (std::size_t k = 0; k < count; ++k)
    r[k] = t_end * static_cast<double>(k + 1) / static_cast<double>(count);
  r.back() = t_end;
  return r;
}

/// Real-axis stability limit of the Dormand-Prince 5(4) solution polynomial.
inline constexpr double kDopriRealStability = 3.3065;

/// 0.9 * min(dx^2 / 2d, dtheta^2 / 2 alpha), further capped so the combined 2-D diffusion
/// spectrum (plus the reaction Jacobian) stays inside the stability interval. Without the cap,
/// the checkerboard mode grows just below atol once the solution is small and dt sits at the ceiling.
inline double stable_dt_ceiling(const ModelParams& p, const Grid& g) {
  const double per_direction = 0.9 * std::min(g.dx * g.dx / (2.0 * p.d), g.dtheta * g.dtheta / (2.0 * p.alpha));
  const double spectral_radius = 4.0 * p.d / (g.dx * g.dx) + 4.0 * p.alpha / (g.dtheta * g.dtheta) + 1.0 +
                                 std::max(std::abs(p.theta_min), std::abs(p.theta_max));
  return std::min(per_direction, 0.9 * kDopriRealStability / spectral_radius);
}

struct Trajectory {
  std::vector<double> times;
  std::vector<StateField> snapshots;  // empty unless store_snapshots
  std::vector<double> mass_series;
  std::vector<double> sup_series;
  std::vector<double> min_series;  // raw minimum of u before reporting clip
  double initial_max_rho = 0.0;    // M = max_x rho(0, x)
  StepperStats stats;

  std::size_t size() const noexcept { return times.size(); }

  /// Index of the record at time t (within 1e-9 relative), if present.
  std::optional<std::size_t> find(double t) const {
    for (std::size_t k = 0; k < times.size(); ++k)
      if (std::abs(times[k] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return k;
    return std::nullopt;
  }
};

namespace detail {

inline double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }
inline double min_of(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

inline std::vector<double> resolve_record_times(const IntegratorConfig& cfg, double t0) {
  std::vector<double> out;
  for (double r : cfg.record_times)
    if (r > t0 && (out.empty() || r > out.back())) out.push_back(r);
  if (out.empty() || out.back() < cfg.t_end) out.push_back(cfg.t_end);
  return out;
}

}  // namespace detail

/// Integrates the method-of-lines system from `initial` to cfg.t_end, landing exactly on
/// every record time. Throws SolverError on blow-up, step underflow or negativity breach.
inline Trajectory solve(const StateField& initial, const IntegratorConfig& cfg) {
  validate_state(initial);
  cfg.validate();

  const ModelParams params = initial.params;
  const Grid grid = initial.grid;

  StepperConfig sc;
  sc.rtol = cfg.rtol;
  sc.atol = cfg.atol;
  sc.dt_max = cfg.dt_max.value_or(stable_dt_ceiling(params, grid));
  sc.dt_init = std::min(cfg.dt_init, sc.dt_max);
  sc.dt_min = 1e-12 * cfg.t_end;

  auto rhs = [&params, &grid](double, std::span<const double> y, std::span<double> dy) {
    rhs_into(params, grid, y, dy);
  };
  Dopri5<decltype(rhs)> stepper(rhs, initial.u.size(), sc);

  Trajectory traj;
  traj.initial_max_rho = detail::max_of(integrate_mass(initial));
  const double blowup = 1e3 * std::max(traj.initial_max_rho, 1.0);
  const double neg_floor = -1e3 * cfg.atol;

  const auto record = [&](double t, const std::vector<double>& y) {
    StateField snap(params, grid);
    snap.t = t;
    snap.u = y;
    const double lo = detail::min_of(y);
    for (double& v : snap.u)
      if (v < 0.0 && v > neg_floor) v = 0.0;
    traj.times.push_back(t);
    traj.mass_series.push_back(total_mass(snap));
    traj.sup_series.push_back(detail::max_of(snap.u));
    traj.min_series.push_back(lo);
    if (cfg.store_snapshots) traj.snapshots.push_back(std::move(snap));
  };

  const auto check = [&](double t, const std::vector<double>& y) {
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    if (!(*hi <= blowup)) {
      std::ostringstream m;
      m << "max u = " << *hi << " exceeds " << blowup << " at t=" << t;
      throw SolverError(SolverError::Kind::BlowUp, m.str());
    }
    if (*lo < neg_floor) {
      std::ostringstream m;
      m << "min u = " << *lo << " below " << neg_floor << " at t=" << t;
      throw SolverError(SolverError::Kind::NegativityBreach, m.str());
    }
  };

  double t = initial.t;
  std::vector<double> y = initial.u;
  record(t, y);
  for (double stop : detail::resolve_record_times(cfg, t)) {
    stepper.advance(t, y, stop, check);
    record(t, y);
  }
  traj.stats = stepper.stats();
  return traj;
}

}  // namespace allee
