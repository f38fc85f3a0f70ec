#pragma once

// Runtime checks of the a priori inequalities every solution must satisfy. Monitors are
// pure observers: they read a Trajectory and never modify it.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "allee/integrate.hpp"
#include "allee/model.hpp"

namespace allee {

enum class CheckStatus { Pass, Fail, Skipped };

inline const char* to_string(CheckStatus s) noexcept {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Skipped: return "skipped";
  }
  return "?";
}

struct MonitorOptions {
  double positivity_tol = 1e-7;  // 10 x default atol
  double mass_tol = 1e-3;
  double late_mass_tol = 1e-2;
  double monotone_tol = 1e-6;
  double mean_trait_tol = 1e-6;
  double limits_tol = 1e-2;
  double eps_rho = kDefaultEpsRho;
  double late_fraction = 0.1;       // late time = final 10% of the run
  double late_min_t_end = 200.0;
  std::optional<bool> monotone_hypothesis;  // unset: detect M <= 1 and du0/dtheta <= 0
  std::optional<double> support_length;     // L of the initial support, for the core region

  bool operator==(const MonitorOptions&) const = default;
};

struct MonitorCheck {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  double worst_violation = 0.0;  // > 0 only when the inequality is broken
  double time_of_worst = 0.0;
  std::string detail;
};

struct MonitorReport {
  std::vector<MonitorCheck> checks;
  MonitorOptions config;

  bool passed() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const MonitorCheck& c) { return c.status == CheckStatus::Fail; });
  }

  const MonitorCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

namespace detail {

// Tracks the largest excess of `value` over `bound` across records.
struct Worst {
  double excess = -std::numeric_limits<double>::infinity();
  double time = 0.0;
  std::string where;

  void update(double e, double t, const std::string& w) {
    if (e > excess) {
      excess = e;
      time = t;
      where = w;
    }
  }
  template <class F>
  void update_lazy(double e, double t, F&& where_fn) {
    if (e > excess) {
      excess = e;
      time = t;
      where = where_fn();
    }
  }
};

inline MonitorCheck finish(std::string name, const Worst& w, const std::string& bound_desc) {
  MonitorCheck c;
  c.name = std::move(name);
  c.time_of_worst = w.time;
  if (w.excess > 0.0) {
    c.status = CheckStatus::Fail;
    c.worst_violation = w.excess;
    c.detail = bound_desc + " violated by " + std::to_string(w.excess) + " at " + w.where;
  } else {
    c.status = CheckStatus::Pass;
    c.detail = bound_desc;
  }
  return c;
}

inline MonitorCheck skipped(std::string name, std::string why) {
  MonitorCheck c;
  c.name = std::move(name);
  c.status = CheckStatus::Skipped;
  c.detail = std::move(why);
  return c;
}

inline std::string node_label(const Grid& g, std::size_t i, std::size_t j) {
  std::ostringstream m;
  m << "node (" << i << "," << j << ") x=" << g.x(i) << " theta=" << g.theta(j);
  return m.str();
}

inline bool nonincreasing_in_theta(const StateField& s, double tol) {
  for (std::size_t i = 0; i < s.grid.nx; ++i)
    for (std::size_t j = 0; j + 1 < s.grid.ntheta; ++j)
      if (s.at(i, j + 1) - s.at(i, j) > tol) return false;
  return true;
}

}  // namespace detail

/// Evaluates the registered checks in a fixed order: positivity, mass_ceiling,
/// late_mass_ceiling, mean_trait_range, trait_monotonicity, mean_trait_ceiling,
/// limits_convergence. Conditional checks are Skipped (not passed) when their
/// hypotheses fail.
inline MonitorReport run_monitors(const Trajectory& traj, const ModelParams& params,
                                  const MonitorOptions& opt = {}) {
  MonitorReport rep;
  rep.config = opt;
  const auto& snaps = traj.snapshots;
  const bool have = !snaps.empty();
  const double t_end = traj.times.empty() ? 0.0 : traj.times.back();

  // positivity: raw minima recorded by the integrator plus every stored snapshot.
  {
    detail::Worst w;
    for (std::size_t k = 0; k < traj.min_series.size(); ++k) {
      std::ostringstream m;
      m << "record t=" << traj.times[k];
      w.update(-opt.positivity_tol - traj.min_series[k], traj.times[k], m.str());
    }
    for (const auto& s : snaps) {
      const auto it = std::min_element(s.u.begin(), s.u.end());
      const std::size_t idx = static_cast<std::size_t>(it - s.u.begin());
      w.update_lazy(-opt.positivity_tol - *it, s.t, [&] {
        return detail::node_label(s.grid, idx / s.grid.ntheta, idx % s.grid.ntheta);
      });
    }
    std::ostringstream b;
    b << "min u >= " << -opt.positivity_tol;
    if (traj.min_series.empty() && !have)
      rep.checks.push_back(detail::skipped("positivity", "no records"));
    else
      rep.checks.push_back(detail::finish("positivity", w, b.str()));
  }

  std::vector<DerivedFields> derived;
  derived.reserve(snaps.size());
  for (const auto& s : snaps) derived.push_back(derive(s, opt.eps_rho));

  const double M = have ? *std::max_element(derived.front().rho.begin(), derived.front().rho.end())
                        : traj.initial_max_rho;

  // mass_ceiling: max_x rho <= max(M, 1).
  if (!have) {
    rep.checks.push_back(detail::skipped("mass_ceiling", "no snapshots"));
  } else {
    detail::Worst w;
    const double bound = std::max(M, 1.0) + opt.mass_tol;
    for (std::size_t k = 0; k < snaps.size(); ++k) {
      const auto& rho = derived[k].rho;
      const auto it = std::max_element(rho.begin(), rho.end());
      w.update_lazy(*it - bound, snaps[k].t, [&] {
        std::ostringstream m;
        m << "x=" << snaps[k].grid.x(static_cast<std::size_t>(it - rho.begin()));
        return m.str();
      });
    }
    std::ostringstream b;
    b << "max rho <= max(M,1) + " << opt.mass_tol << " with M=" << M;
    rep.checks.push_back(detail::finish("mass_ceiling", w, b.str()));
  }

  // late_mass_ceiling: max_x rho <= 1 over the final part of long runs.
  if (!have) {
    rep.checks.push_back(detail::skipped("late_mass_ceiling", "no snapshots"));
  } else if (t_end < opt.late_min_t_end) {
    rep.checks.push_back(detail::skipped("late_mass_ceiling", "t_end below late-time horizon"));
  } else {
    detail::Worst w;
    const double t_late = (1.0 - opt.late_fraction) * t_end;
    const double bound = 1.0 + opt.late_mass_tol;
    bool any = false;
    for (std::size_t k = 0; k < snaps.size(); ++k) {
      if (snaps[k].t < t_late) continue;
      any = true;
      const auto& rho = derived[k].rho;
      w.update(*std::max_element(rho.begin(), rho.end()) - bound, snaps[k].t, "late record");
    }
    if (!any)
      rep.checks.push_back(detail::skipped("late_mass_ceiling", "no snapshot in late window"));
    else
      rep.checks.push_back(detail::finish("late_mass_ceiling", w, "late max rho <= 1 + tol"));
  }

  // mean_trait_range: theta_min - dtheta <= theta_bar <= theta_max + dtheta where rho > eps.
  if (!have) {
    rep.checks.push_back(detail::skipped("mean_trait_range", "no snapshots"));
  } else {
    detail::Worst w;
    for (std::size_t k = 0; k < snaps.size(); ++k) {
      const auto& g = snaps[k].grid;
      for (std::size_t i = 0; i < g.nx; ++i) {
        if (!(derived[k].rho[i] > opt.eps_rho)) continue;
        const double tb = derived[k].theta_bar[i];
        const double e = std::max(g.theta_min - g.dtheta - tb, tb - g.theta_max - g.dtheta);
        w.update_lazy(e, snaps[k].t, [&] {
          std::ostringstream m;
          m << "x=" << g.x(i) << " theta_bar=" << tb;
          return m.str();
        });
      }
    }
    rep.checks.push_back(detail::finish("mean_trait_range", w, "theta_bar within Theta +- dtheta"));
  }

  // Conditional checks under "M <= 1 and u0 nonincreasing in theta".
  bool hyp = false;
  std::string hyp_why;
  if (have) {
    if (opt.monotone_hypothesis) {
      hyp = *opt.monotone_hypothesis;
      hyp_why = "hypothesis flag set to false";
    } else {
      const bool m_ok = M <= 1.0 + 1e-12;
      const bool mono = detail::nonincreasing_in_theta(snaps.front(), 0.0);
      hyp = m_ok && mono;
      hyp_why = !m_ok ? "M > 1" : "u0 not nonincreasing in theta";
    }
  }
  if (!have) {
    rep.checks.push_back(detail::skipped("trait_monotonicity", "no snapshots"));
    rep.checks.push_back(detail::skipped("mean_trait_ceiling", "no snapshots"));
  } else if (!hyp) {
    rep.checks.push_back(detail::skipped("trait_monotonicity", hyp_why));
    rep.checks.push_back(detail::skipped("mean_trait_ceiling", hyp_why));
  } else {
    detail::Worst mono;
    detail::Worst ceil;
    const double mid = params.midpoint();
    for (std::size_t k = 0; k < snaps.size(); ++k) {
      const auto& s = snaps[k];
      const auto& g = s.grid;
      for (std::size_t i = 0; i < g.nx; ++i) {
        for (std::size_t j = 0; j + 1 < g.ntheta; ++j) {
          const double e = s.at(i, j + 1) - s.at(i, j) - opt.monotone_tol;
          mono.update_lazy(e, s.t, [&] { return detail::node_label(g, i, j); });
        }
        if (derived[k].rho[i] > opt.eps_rho) {
          const double e = derived[k].theta_bar[i] - mid - opt.mean_trait_tol;
          ceil.update_lazy(e, s.t, [&] {
            std::ostringstream m;
            m << "x=" << g.x(i);
            return m.str();
          });
        }
      }
    }
    rep.checks.push_back(detail::finish("trait_monotonicity", mono, "u nonincreasing in theta"));
    rep.checks.push_back(detail::finish("mean_trait_ceiling", ceil, "theta_bar <= midpoint"));
  }

  // limits_convergence: theta_max <= 0 forces rho -> 1 and u -> 1/|Theta| on compacts.
  if (!have) {
    rep.checks.push_back(detail::skipped("limits_convergence", "no snapshots"));
  } else if (!(params.theta_max <= 0.0)) {
    rep.checks.push_back(detail::skipped("limits_convergence", "theta_max > 0"));
  } else if (!opt.support_length) {
    rep.checks.push_back(detail::skipped("limits_convergence", "initial support length unknown"));
  } else {
    detail::Worst w;
    const auto& s = snaps.back();
    const auto& rho = derived.back().rho;
    const double core = *opt.support_length / 4.0;
    const double target_u = 1.0 / params.width();
    for (std::size_t i = 0; i < s.grid.nx; ++i) {
      if (std::abs(s.grid.x(i)) > core) continue;
      w.update_lazy(std::abs(rho[i] - 1.0) - opt.limits_tol, s.t, [&] {
        std::ostringstream m;
        m << "rho at x=" << s.grid.x(i);
        return m.str();
      });
      for (std::size_t j = 0; j < s.grid.ntheta; ++j)
        w.update_lazy(std::abs(s.at(i, j) - target_u) / target_u - opt.limits_tol, s.t,
                      [&] { return "u at " + detail::node_label(s.grid, i, j); });
    }
    rep.checks.push_back(
        detail::finish("limits_convergence", w, "core rho -> 1 and u -> 1/(theta_max-theta_min)"));
  }
  return rep;
}

/// One line per check: "name status worst=<v> t=<t> detail".
inline void write_monitor_text(std::ostream& os, const MonitorReport& r) {
  char buf[64];
  for (const auto& c : r.checks) {
    std::snprintf(buf, sizeof buf, "%.17g", c.worst_violation);
    os << c.name << ' ' << to_string(c.status) << " worst=" << buf;
    std::snprintf(buf, sizeof buf, "%.17g", c.time_of_worst);
    os << " t=" << buf << ' ' << c.detail << '\n';
  }
}

inline void write_monitor_csv(std::ostream& os, const MonitorReport& r) {
  char a[64], b[64];
  os << "check,status,worst_violation,time_of_worst,detail\n";
  for (const auto& c : r.checks) {
    std::snprintf(a, sizeof a, "%.17g", c.worst_violation);
    std::snprintf(b, sizeof b, "%.17g", c.time_of_worst);
    std::string d = c.detail;
    std::replace(d.begin(), d.end(), ',', ';');
    os << c.name << ',' << to_string(c.status) << ',' << a << ',' << b << ',' << d << '\n';
  }
}

}  // namespace allee
