#pragma once

// Method-of-lines discretization of
//   u_t = d u_xx + alpha u_thth + u (rho - theta) (1 - rho),   rho = int u dtheta
// on a rectangle I x [theta_min, theta_max] with homogeneous Neumann conditions
// on all four sides (ghost-point reflection, second order).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "allee/error.hpp"

namespace allee {

/// Physical and evolutionary parameters: spatial diffusion d, mutation alpha,
/// and the trait range (theta_min, theta_max) of the Allee threshold.
struct ModelParams {
  double d = 1.0;
  double alpha = 1e-3;
  double theta_min = 0.2;
  double theta_max = 0.9;

  double width() const noexcept { return theta_max - theta_min; }
  double midpoint() const noexcept { return 0.5 * (theta_min + theta_max); }

  void validate() const {
    if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("model.d must be > 0");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("model.alpha must be > 0");
    if (!(theta_min < theta_max)) throw DomainError("model.theta_min must be < model.theta_max");
    if (!(theta_max < 1.0)) throw DomainError("model.theta_max must be < 1");
    if (!std::isfinite(theta_min)) throw DomainError("model.theta_min must be finite");
  }

  bool operator==(const ModelParams&) const = default;
};

/// Uniform tensor grid on [x_lo, x_hi] x [theta_min, theta_max], both endpoints included.
struct Grid {
  double x_lo = -60.0;
  double x_hi = 60.0;
  std::size_t nx = 241;
  std::size_t ntheta = 33;
  double theta_min = 0.2;
  double theta_max = 0.9;
  double dx = 0.5;
  double dtheta = 0.7 / 32.0;

  static Grid make(double x_lo, double x_hi, std::size_t nx, std::size_t ntheta,
                   const ModelParams& p) {
    if (!(x_lo < x_hi)) throw DomainError("grid.x_lo must be < grid.x_hi");
    if (nx < 3) throw DomainError("grid.nx must be >= 3");
    if (ntheta < 3) throw DomainError("grid.ntheta must be >= 3");
    if (!(p.theta_min < p.theta_max)) throw DomainError("theta_min must be < theta_max");
    Grid g;
    g.x_lo = x_lo;
    g.x_hi = x_hi;
    g.nx = nx;
    g.ntheta = ntheta;
    g.theta_min = p.theta_min;
    g.theta_max = p.theta_max;
    g.dx = (x_hi - x_lo) / static_cast<double>(nx - 1);
    g.dtheta = (p.theta_max - p.theta_min) / static_cast<double>(ntheta - 1);
    return g;
  }

  double x(std::size_t i) const noexcept { return x_lo + dx * static_cast<double>(i); }
  double theta(std::size_t j) const noexcept { return theta_min + dtheta * static_cast<double>(j); }
  double length() const noexcept { return x_hi - x_lo; }
  std::size_t size() const noexcept { return nx * ntheta; }

  bool operator==(const Grid&) const = default;
};

/// Density u(t, x_i, theta_j), stored row-major: row i = fixed x, column j = increasing theta.
struct StateField {
  double t = 0.0;
  std::vector<double> u;
  ModelParams params;
  Grid grid;

  StateField() = default;
  StateField(const ModelParams& p, const Grid& g, double value = 0.0, double time = 0.0)
      : t(time), u(g.size(), value), params(p), grid(g) {}

  double& at(std::size_t i, std::size_t j) noexcept { return u[i * grid.ntheta + j]; }
  double at(std::size_t i, std::size_t j) const noexcept { return u[i * grid.ntheta + j]; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {u.data() + i * grid.ntheta, grid.ntheta};
  }
};

struct DerivedFields {
  std::vector<double> rho;
  std::vector<double> theta_bar;
  double total_mass = 0.0;
};

inline constexpr double kDefaultEpsRho = 1e-12;

namespace detail {

inline double trapezoid(std::span<const double> v, double h) noexcept {
  const std::size_t n = v.size();
  double s = 0.5 * (v[0] + v[n - 1]);
  for (std::size_t k = 1; k + 1 < n; ++k) s += v[k];
  return s * h;
}

inline double trapezoid_moment(std::span<const double> v, const Grid& g) noexcept {
  const std::size_t n = v.size();
  double s = 0.5 * (g.theta(0) * v[0] + g.theta(n - 1) * v[n - 1]);
  for (std::size_t k = 1; k + 1 < n; ++k) s += g.theta(k) * v[k];
  return s * g.dtheta;
}

}  // namespace detail

/// rho(x_i) = int u(x_i, theta) dtheta by the trapezoidal rule.
inline std::vector<double> integrate_mass(const StateField& s) {
  std::vector<double> rho(s.grid.nx);
  for (std::size_t i = 0; i < s.grid.nx; ++i) rho[i] = detail::trapezoid(s.row(i), s.grid.dtheta);
  return rho;
}

/// Mass-weighted mean trait per x node; nodes with rho < eps_rho get the midpoint sentinel.
inline std::vector<double> mean_trait(const StateField& s, double eps_rho = kDefaultEpsRho) {
  const double sentinel = 0.5 * (s.grid.theta_min + s.grid.theta_max);
  std::vector<double> tb(s.grid.nx, sentinel);
  for (std::size_t i = 0; i < s.grid.nx; ++i) {
    const auto r = s.row(i);
    const double rho = detail::trapezoid(r, s.grid.dtheta);
    if (rho >= eps_rho) tb[i] = detail::trapezoid_moment(r, s.grid) / rho;
  }
  return tb;
}

/// N(t) = int_I rho dx, trapezoidal in x.
inline double total_mass(const StateField& s) {
  const auto rho = integrate_mass(s);
  return detail::trapezoid(rho, s.grid.dx);
}

inline DerivedFields derive(const StateField& s, double eps_rho = kDefaultEpsRho) {
  DerivedFields f;
  f.rho = integrate_mass(s);
  f.theta_bar = mean_trait(s, eps_rho);
  f.total_mass = detail::trapezoid(f.rho, s.grid.dx);
  return f;
}

/// Writes du/dt for the flat field `u` into `out`. This is the integrator's hot loop.
inline void rhs_into(const ModelParams& p, const Grid& g, std::span<const double> u,
                     std::span<double> out) noexcept {
  const std::size_t nx = g.nx;
  const std::size_t nt = g.ntheta;
  const double cx = p.d / (g.dx * g.dx);
  const double ct = p.alpha / (g.dtheta * g.dtheta);
  for (std::size_t i = 0; i < nx; ++i) {
    const double* row = u.data() + i * nt;
    // Ghost reflection in x: u[-1] = u[1], u[nx] = u[nx-2].
    const double* left = u.data() + (i == 0 ? 1 : i - 1) * nt;
    const double* right = u.data() + (i + 1 == nx ? nx - 2 : i + 1) * nt;
    double* o = out.data() + i * nt;

    const double rho = detail::trapezoid({row, nt}, g.dtheta);
    const double one_minus = 1.0 - rho;

    // Trait endpoints use the reflected ghost u[-1] = u[1].
    o[0] = cx * (left[0] - 2.0 * row[0] + right[0]) + ct * 2.0 * (row[1] - row[0]) +
           row[0] * (rho - g.theta(0)) * one_minus;
    for (std::size_t j = 1; j + 1 < nt; ++j) {
      const double c = row[j];
      o[j] = cx * (left[j] - 2.0 * c + right[j]) + ct * (row[j - 1] - 2.0 * c + row[j + 1]) +
             c * (rho - g.theta(j)) * one_minus;
    }
    const std::size_t e = nt - 1;
    o[e] = cx * (left[e] - 2.0 * row[e] + right[e]) + ct * 2.0 * (row[e - 1] - row[e]) +
           row[e] * (rho - g.theta(e)) * one_minus;
  }
}

inline std::vector<double> assemble_rhs(const StateField& s) {
  std::vector<double> out(s.u.size());
  rhs_into(s.params, s.grid, s.u, out);
  return out;
}

/// Sampled field consistency: the array matches the grid and parameters agree on Theta.
inline void validate_state(const StateField& s) {
  s.params.validate();
  if (s.u.size() != s.grid.size()) {
    std::ostringstream m;
    m << "state size " << s.u.size() << " does not match grid " << s.grid.nx << "x"
      << s.grid.ntheta;
    throw DomainError(m.str());
  }
  if (s.grid.theta_min != s.params.theta_min || s.grid.theta_max != s.params.theta_max)
    throw DomainError("grid trait range does not match model parameters");
  if (!(s.t >= 0.0)) throw DomainError("state time must be >= 0");
}

}  // namespace allee
