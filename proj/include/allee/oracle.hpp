#pragma once

// Low-dimensional reference solvers: the local bistable equation
//   rho_t = d rho_xx + rho (rho - theta0) (1 - rho)
// with level-set front tracking, and scalar comparison ODEs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "allee/dopri.hpp"
#include "allee/error.hpp"
#include "allee/experiments.hpp"
#include "allee/integrate.hpp"

namespace allee {

struct BistableParams {
  double d = 1.0;
  double theta0 = 0.25;

  void validate() const {
    if (!(d > 0.0)) throw DomainError("oracle.d must be > 0");
    if (!(theta0 < 1.0)) throw DomainError("oracle.theta0 must be < 1");
  }
};

/// Spreading speed from the classical table: pulled 2 sqrt(-theta0 d) for theta0 <= -1/2,
/// pushed sqrt(2d) (1/2 - theta0) on (-1/2, 1/2), zero from 1/2 on.
inline double table_speed(const BistableParams& p) {
  if (p.theta0 <= -0.5) return 2.0 * std::sqrt(-p.theta0 * p.d);
  if (p.theta0 < 0.5) return std::sqrt(2.0 * p.d) * (0.5 - p.theta0);
  return 0.0;
}

struct LocalDomain {
  double x_lo = -60.0;
  double x_hi = 60.0;
  std::size_t nx = 241;

  double dx() const noexcept { return (x_hi - x_lo) / static_cast<double>(nx - 1); }
  double x(std::size_t i) const noexcept { return x_lo + dx() * static_cast<double>(i); }
  double length() const noexcept { return x_hi - x_lo; }
};

struct LocalTrajectory {
  LocalDomain domain;
  std::vector<double> times;
  std::vector<std::vector<double>> profiles;
  StepperStats stats;

  /// Trapezoidal integral of rho at record k.
  double mass(std::size_t k) const { return detail::trapezoid(profiles[k], domain.dx()); }
  std::vector<double> mass_series() const {
    std::vector<double> m(times.size());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = mass(k);
    return m;
  }
};

namespace detail {

inline void local_rhs(const BistableParams& p, double dx, std::span<const double> r,
                      std::span<double> out) {
  const std::size_t n = r.size();
  const double c = p.d / (dx * dx);
  const auto react = [&](double v) { return v * (v - p.theta0) * (1.0 - v); };
  out[0] = 2.0 * c * (r[1] - r[0]) + react(r[0]);
  for (std::size_t i = 1; i + 1 < n; ++i)
    out[i] = c * (r[i - 1] - 2.0 * r[i] + r[i + 1]) + react(r[i]);
  out[n - 1] = 2.0 * c * (r[n - 2] - r[n - 1]) + react(r[n - 1]);
}

}  // namespace detail

/// Method-of-lines solve with the same stencil and stepper as the 2D model.
inline LocalTrajectory solve_local_1d(const BistableParams& p, const std::vector<double>& rho0,
                                      const LocalDomain& dom, const IntegratorConfig& cfg) {
  p.validate();
  cfg.validate();
  if (dom.nx < 3 || !(dom.x_lo < dom.x_hi)) throw DomainError("oracle domain needs nx >= 3, x_lo < x_hi");
  if (rho0.size() != dom.nx) throw DomainError("rho0 length must equal nx");
  for (double v : rho0)
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("rho0 must be finite and >= 0");

  const double dx = dom.dx();
  StepperConfig sc;
  sc.rtol = cfg.rtol;
  sc.atol = cfg.atol;
  sc.dt_max = cfg.dt_max.value_or(0.9 * dx * dx / (2.0 * p.d));
  sc.dt_init = std::min(cfg.dt_init, sc.dt_max);
  sc.dt_min = 1e-12 * cfg.t_end;
  auto rhs = [&](double, std::span<const double> y, std::span<double> dy) {
    detail::local_rhs(p, dx, y, dy);
  };
  Dopri5<decltype(rhs)> stepper(rhs, dom.nx, sc);

  const double m0 = std::max(1.0, detail::max_of(rho0));
  const double neg_floor = -1e3 * cfg.atol;
  const auto check = [&](double t, const std::vector<double>& y) {
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    if (!(*hi <= 1e3 * m0)) {
      std::ostringstream m;
      m << "max rho = " << *hi << " at t=" << t;
      throw SolverError(SolverError::Kind::BlowUp, m.str());
    }
    if (*lo < neg_floor) {
      std::ostringstream m;
      m << "min rho = " << *lo << " at t=" << t;
      throw SolverError(SolverError::Kind::NegativityBreach, m.str());
    }
  };

  LocalTrajectory traj;
  traj.domain = dom;
  double t = 0.0;
  std::vector<double> y = rho0;
  traj.times.push_back(t);
  traj.profiles.push_back(y);
  for (double stop : detail::resolve_record_times(cfg, t)) {
    stepper.advance(t, y, stop, check);
    traj.times.push_back(t);
    traj.profiles.push_back(y);
  }
  traj.stats = stepper.stats();
  return traj;
}

struct FrontSpeedEstimate {
  double speed = 0.0;
  double level = 0.5;
  double fit_t0 = 0.0;
  double fit_t1 = 0.0;
  double r_squared = 0.0;
  std::vector<double> positions;  // front position at each record used in the fit
};

/// Rightmost x where the profile crosses `level` from above, by linear interpolation.
inline std::optional<double> front_position(const std::vector<double>& r, const LocalDomain& dom,
                                            double level) {
  for (std::size_t i = r.size() - 1; i-- > 0;) {
    if (r[i] >= level && r[i + 1] < level) {
      const double s = (r[i] - level) / (r[i] - r[i + 1]);
      return dom.x(i) + s * dom.dx();
    }
  }
  return std::nullopt;
}

/// Least-squares slope of the front position over the last half of the trajectory.
inline FrontSpeedEstimate measure_front_speed(const LocalTrajectory& traj, double level = 0.5,
                                              std::size_t clearance_cells = 10) {
  if (traj.times.size() < 3) throw FrontError(FrontError::Kind::FrontNotFound, "too few records");
  FrontSpeedEstimate est;
  est.level = level;
  const double T = traj.times.back();
  const double margin = static_cast<double>(clearance_cells) * traj.domain.dx();
  std::vector<double> ts;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    if (traj.times[k] < 0.5 * T - 1e-12 * T) continue;
    const auto xf = front_position(traj.profiles[k], traj.domain, level);
    if (!xf && traj.profiles[k].back() >= level) {
      std::ostringstream m;
      m << "front left the domain through x=" << traj.domain.x_hi << " by t=" << traj.times[k];
      throw FrontError(FrontError::Kind::BoundaryContamination, m.str());
    }
    if (!xf) {
      std::ostringstream m;
      m << "no crossing of level " << level << " at t=" << traj.times[k];
      throw FrontError(FrontError::Kind::FrontNotFound, m.str());
    }
    if (*xf < traj.domain.x_lo + margin || *xf > traj.domain.x_hi - margin) {
      std::ostringstream m;
      m << "front at x=" << *xf << " within " << clearance_cells << " cells of the boundary at t="
        << traj.times[k];
      throw FrontError(FrontError::Kind::BoundaryContamination, m.str());
    }
    ts.push_back(traj.times[k]);
    est.positions.push_back(*xf);
  }
  if (ts.size() < 2) throw FrontError(FrontError::Kind::FrontNotFound, "fewer than two fit points");

  const double n = static_cast<double>(ts.size());
  double mt = 0.0, mx = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    mt += ts[k];
    mx += est.positions[k];
  }
  mt /= n;
  mx /= n;
  double stt = 0.0, stx = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    stt += (ts[k] - mt) * (ts[k] - mt);
    stx += (ts[k] - mt) * (est.positions[k] - mx);
    sxx += (est.positions[k] - mx) * (est.positions[k] - mx);
  }
  est.speed = stx / stt;
  est.r_squared = sxx > 0.0 ? stx * stx / (stt * sxx) : 1.0;
  est.fit_t0 = ts.front();
  est.fit_t1 = ts.back();
  return est;
}

/// Speed measurement protocol: x in (-200, 200), step data rho = 1 left of x = -150, T = 120,
/// fit over [60, 120].
struct SpeedRunSetup {
  LocalDomain domain{-200.0, 200.0, 1601};
  double step_position = -150.0;
  double t_end = 120.0;
  std::size_t records = 121;
  double level = 0.5;
  double rtol = 1e-7;
  double atol = 1e-9;
};

inline FrontSpeedEstimate run_front_speed(const BistableParams& p, const SpeedRunSetup& s = {}) {
  std::vector<double> rho0(s.domain.nx, 0.0);
  for (std::size_t i = 0; i < s.domain.nx; ++i)
    if (s.domain.x(i) <= s.step_position) rho0[i] = 1.0;
  IntegratorConfig cfg;
  cfg.rtol = s.rtol;
  cfg.atol = s.atol;
  cfg.t_end = s.t_end;
  cfg.record_times = uniform_record_times(s.t_end, s.records - 1);
  return measure_front_speed(solve_local_1d(p, rho0, s.domain, cfg), s.level);
}

/// Rectangular bump of the given amplitude and width centred at 0, classified with the
/// four mass rules on the domain length.
inline OutcomeLabel hair_trigger_probe(const BistableParams& p, double amplitude, double width,
                                       double t_end = 200.0, const LocalDomain& dom = {}) {
  if (!(amplitude > 0.0) || !(width > 0.0))
    throw DomainError("hair_trigger_probe: amplitude and width must be > 0");
  std::vector<double> rho0(dom.nx, 0.0);
  for (std::size_t i = 0; i < dom.nx; ++i) {
    const double ax = std::abs(dom.x(i));
    if (std::abs(ax - 0.5 * width) <= 1e-9 * std::max(1.0, width))
      rho0[i] = 0.5 * amplitude;
    else if (ax < 0.5 * width)
      rho0[i] = amplitude;
  }
  IntegratorConfig cfg;
  cfg.t_end = t_end;
  cfg.record_times = {0.5 * t_end, t_end};
  const auto traj = solve_local_1d(p, rho0, dom, cfg);
  // records: 0, T/2, T
  return classify_outcome(traj.mass(1), traj.mass(2), dom.length());
}

enum class ComparisonKind { LogisticSquare, Bistable };

struct ScalarPath {
  std::vector<double> times;
  std::vector<double> values;
};

/// y' = y^2 (1 - y) (LogisticSquare) or y' = y (y - theta0) (1 - y) (Bistable), recorded at
/// `records` equally spaced times.
inline ScalarPath solve_comparison_ode(ComparisonKind kind, double y0, double t_end,
                                       double theta0 = 0.5, std::size_t records = 100) {
  if (!(y0 >= 0.0)) throw DomainError("comparison ODE needs y0 >= 0");
  if (!(t_end > 0.0) || records == 0) throw DomainError("comparison ODE needs t_end > 0");
  StepperConfig sc;
  sc.rtol = 1e-11;
  sc.atol = 1e-13;
  sc.dt_init = 1e-4;
  sc.dt_max = t_end / 10.0;
  sc.dt_min = 1e-14 * t_end;
  auto rhs = [kind, theta0](double, std::span<const double> y, std::span<double> dy) {
    const double v = y[0];
    dy[0] = kind == ComparisonKind::LogisticSquare ? v * v * (1.0 - v) : v * (v - theta0) * (1.0 - v);
  };
  Dopri5<decltype(rhs)> stepper(rhs, 1, sc);
  ScalarPath path;
  double t = 0.0;
  std::vector<double> y{y0};
  path.times.push_back(t);
  path.values.push_back(y0);
  for (double stop : uniform_record_times(t_end, records)) {
    stepper.advance(t, y, stop, [](double, const std::vector<double>&) {});
    path.times.push_back(t);
    path.values.push_back(y[0]);
  }
  return path;
}

}  // namespace allee
