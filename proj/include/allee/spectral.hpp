#pragma once

// Neumann principal eigenpair of  -alpha phi'' + theta phi = lambda phi  on [theta_min, theta_max].
//
// Discretization: central differences with ghost reflection at both ends. The resulting
// matrix A is not symmetric, but W A is for the trapezoidal weights W = diag(1/2, 1, ..., 1, 1/2),
// so S = W^{1/2} A W^{-1/2} is a symmetric tridiagonal matrix with the same spectrum.
// The smallest eigenvalue of S is bracketed by Sturm-sequence counts and bisected; the vector
// comes from inverse iteration on S and is mapped back with W^{-1/2}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "allee/error.hpp"
#include "allee/model.hpp"

namespace allee {

struct EigenPair {
  double lambda = 0.0;
  std::vector<double> phi;  // max-normalized, positive
  double alpha = 0.0;
  ModelParams params;

  std::size_t size() const noexcept { return phi.size(); }
  double dtheta() const noexcept { return params.width() / static_cast<double>(phi.size() - 1); }
  double theta(std::size_t j) const noexcept {
    return params.theta_min + dtheta() * static_cast<double>(j);
  }
  double min_phi() const { return *std::min_element(phi.begin(), phi.end()); }
};

inline constexpr std::size_t kRegimeEigenNodes = 513;

namespace detail {

struct SymTridiag {
  std::vector<double> diag;
  std::vector<double> off;  // off[k] couples k and k+1
};

inline SymTridiag neumann_operator(const ModelParams& p, std::size_t n) {
  const double h = p.width() / static_cast<double>(n - 1);
  const double c = p.alpha / (h * h);
  SymTridiag s;
  s.diag.resize(n);
  s.off.assign(n - 1, -c);
  for (std::size_t j = 0; j < n; ++j) s.diag[j] = 2.0 * c + p.theta_min + h * static_cast<double>(j);
  s.off.front() = -std::sqrt(2.0) * c;
  s.off.back() = -std::sqrt(2.0) * c;
  return s;
}

/// Number of eigenvalues strictly below sigma (negative pivots of LDL^T of S - sigma I).
inline std::size_t sturm_count(const SymTridiag& s, double sigma) {
  const std::size_t n = s.diag.size();
  std::size_t count = 0;
  double q = s.diag[0] - sigma;
  const double tiny = 1e-300;
  for (std::size_t k = 0;; ++k) {
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
    if (k + 1 == n) break;
    q = (s.diag[k + 1] - sigma) - s.off[k] * s.off[k] / q;
  }
  return count;
}

/// Solves (S - sigma I) x = b in place by tridiagonal elimination. Pivots smaller than
/// eps * ||S - sigma I|| are floored there (sign kept) so a shift at an eigenvalue cannot overflow.
inline void shifted_solve(const SymTridiag& s, double sigma, std::vector<double>& b) {
  const std::size_t n = s.diag.size();
  double norm = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double row = std::abs(s.diag[k] - sigma);
    if (k > 0) row += std::abs(s.off[k - 1]);
    if (k + 1 < n) row += std::abs(s.off[k]);
    norm = std::max(norm, row);
  }
  const double floor = std::numeric_limits<double>::epsilon() * std::max(norm, 1e-300);
  const auto guard = [floor](double q) { return std::abs(q) < floor ? std::copysign(floor, q) : q; };
  std::vector<double> q(n);
  q[0] = guard(s.diag[0] - sigma);
  for (std::size_t k = 1; k < n; ++k) {
    const double m = s.off[k - 1] / q[k - 1];
    q[k] = guard((s.diag[k] - sigma) - m * s.off[k - 1]);
    b[k] -= m * b[k - 1];
  }
  b[n - 1] /= q[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) b[k] = (b[k] - s.off[k] * b[k + 1]) / q[k];
}

inline double residual_inf(const SymTridiag& s, double lambda, const std::vector<double>& x) {
  const std::size_t n = x.size();
  double r = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double v = (s.diag[k] - lambda) * x[k];
    if (k > 0) v += s.off[k - 1] * x[k - 1];
    if (k + 1 < n) v += s.off[k] * x[k + 1];
    r = std::max(r, std::abs(v));
  }
  return r;
}

inline void normalize_inf(std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  for (double& v : x) v /= m;
}

}  // namespace detail

/// Discrete Rayleigh quotient, exactly consistent with the operator used by solve_eigen:
/// [alpha sum (phi_{j+1}-phi_j)^2 / h + h sum w_j theta_j phi_j^2] / (h sum w_j phi_j^2).
inline double rayleigh_quotient(const ModelParams& p, const std::vector<double>& phi) {
  const std::size_t n = phi.size();
  const double h = p.width() / static_cast<double>(n - 1);
  double grad = 0.0, pot = 0.0, norm = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) grad += (phi[j + 1] - phi[j]) * (phi[j + 1] - phi[j]);
  for (std::size_t j = 0; j < n; ++j) {
    const double w = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
    pot += w * (p.theta_min + h * static_cast<double>(j)) * phi[j] * phi[j];
    norm += w * phi[j] * phi[j];
  }
  return (p.alpha * grad / h + h * pot) / (h * norm);
}

/// Smallest eigenvalue and positive, max-normalized eigenvector of the discrete Neumann operator.
inline EigenPair solve_eigen(const ModelParams& params, std::size_t ntheta = kRegimeEigenNodes) {
  params.validate();
  if (ntheta < 16) throw DomainError("solve_eigen needs ntheta >= 16");

  const auto op = detail::neumann_operator(params, ntheta);

  // The discrete Rayleigh quotient keeps theta_min < lambda <= midpoint, so this bracket is safe.
  double lo = params.theta_min - 1.0;
  double hi = params.midpoint() + 1.0;
  const double tol = 1e-12 * std::max(1.0, std::abs(params.theta_max));
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (detail::sturm_count(op, mid) >= 1)
      hi = mid;
    else
      lo = mid;
  }
  const double lambda = 0.5 * (lo + hi);

  // Residuals carry roundoff of order eps * ||S||, and ||S|| grows like alpha / dtheta^2.
  const double h = params.width() / static_cast<double>(ntheta - 1);
  const double scale = std::max(1.0, 4.0 * params.alpha / (h * h) +
                                         std::max(std::abs(params.theta_min), std::abs(params.theta_max)));

  // Residual convergence fixes phi to ~eps in the max norm; the exponentially small tail
  // needs further sweeps before it is accurate componentwise.
  std::vector<double> y(ntheta, 1.0);
  std::vector<double> prev;
  int converged_sweeps = 0;
  double residual = 0.0;
  for (int it = 0; it < 400; ++it) {
    prev = y;
    detail::shifted_solve(op, lambda, y);
    detail::normalize_inf(y);
    if (y[0] * prev[0] < 0.0)
      for (double& v : y) v = -v;
    residual = detail::residual_inf(op, lambda, y) / scale;
    if (residual < 1e-10) ++converged_sweeps;
    double change = 0.0;
    for (std::size_t k = 0; k < ntheta; ++k)
      if (y[k] != 0.0) change = std::max(change, std::abs(y[k] - prev[k]) / std::abs(y[k]));
    if (converged_sweeps >= 2 && change < 1e-12) break;
  }
  if (converged_sweeps < 2) {
    std::ostringstream m;
    m << "inverse iteration stalled at relative residual " << residual;
    throw SolverError(SolverError::Kind::NonConvergence, m.str());
  }

  EigenPair pair;
  pair.alpha = params.alpha;
  pair.params = params;
  pair.phi.resize(ntheta);
  for (std::size_t j = 0; j < ntheta; ++j) {
    const double w = (j == 0 || j + 1 == ntheta) ? 0.5 : 1.0;
    pair.phi[j] = y[j] / std::sqrt(w);
  }
  if (pair.phi[0] < 0.0)
    for (double& v : pair.phi) v = -v;
  detail::normalize_inf(pair.phi);
  for (std::size_t j = 0; j < ntheta; ++j) {
    if (!(pair.phi[j] > 0.0)) {
      std::ostringstream m;
      m << "eigenvector not one-signed at node " << j << " (value " << pair.phi[j] << ")";
      throw SolverError(SolverError::Kind::SignError, m.str());
    }
  }
  // Bisection resolves lambda only to eps * ||S||; the difference-form quotient of the
  // converged vector avoids that cancellation.
  pair.lambda = rayleigh_quotient(params, pair.phi);
  if (!(std::abs(pair.lambda - lambda) <= 1e-8 * scale)) pair.lambda = lambda;
  return pair;
}

struct LambdaBounds {
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> conditional_upper;
};

/// theta_min < lambda < midpoint always; the boundary-layer bound
/// 3/2 (pi^2 alpha / 2)^{1/3} + theta_min applies when its two hypotheses hold.
inline LambdaBounds lambda_bounds(const ModelParams& p) {
  p.validate();
  LambdaBounds b;
  b.lower = p.theta_min;
  b.upper = p.midpoint();
  const double s = std::cbrt(M_PI * M_PI * p.alpha / 2.0);
  if (1.5 * s + p.theta_min <= 0.0 && s + p.theta_min <= p.theta_max)
    b.conditional_upper = 1.5 * s + p.theta_min;
  return b;
}

struct ShapeReport {
  bool pass = true;
  std::optional<std::size_t> first_violation;
  std::string reason;
};

/// Checks that phi is nonincreasing, concave left of lambda and convex right of it.
/// Curvature uses phi'' ~ (phi_{j-1} - 2 phi_j + phi_{j+1}) / h^2 with ghost reflection, and the
/// sign test is relative to phi_j so it stays meaningful deep in the exponential tail.
/// Nodes within one cell of lambda are not sign-tested.
inline ShapeReport check_eigenfunction_shape(const EigenPair& pair, double tol = 1e-8) {
  ShapeReport r;
  const std::size_t n = pair.phi.size();
  const auto& phi = pair.phi;
  const double h = pair.dtheta();
  const auto fail = [&r](std::size_t j, std::string why) {
    r.pass = false;
    r.first_violation = j;
    r.reason = std::move(why);
  };
  for (std::size_t j = 0; j < n; ++j) {
    if (j + 1 < n && phi[j + 1] - phi[j] > tol) {
      fail(j, "increase between nodes " + std::to_string(j) + " and " + std::to_string(j + 1));
      return r;
    }
    const double lo = j == 0 ? phi[1] : phi[j - 1];
    const double hi = j + 1 == n ? phi[n - 2] : phi[j + 1];
    const double curv = (lo - 2.0 * phi[j] + hi) / (h * h);
    const double th = pair.theta(j);
    if (th < pair.lambda - h && !(curv < -tol * phi[j])) {
      fail(j, "not strictly concave at node " + std::to_string(j));
      return r;
    }
    if (th > pair.lambda + h && !(curv > tol * phi[j])) {
      fail(j, "not strictly convex at node " + std::to_string(j));
      return r;
    }
  }
  return r;
}

/// lambda_alpha over an increasing list of alphas, other parameters fixed.
inline std::vector<double> lambda_curve(const ModelParams& base, const std::vector<double>& alphas,
                                        std::size_t ntheta = kRegimeEigenNodes) {
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    if (!(alphas[k] > 0.0)) throw DomainError("lambda_curve: alphas must be positive");
    if (k > 0 && !(alphas[k] > alphas[k - 1]))
      throw DomainError("lambda_curve: alphas must be strictly increasing");
  }
  std::vector<double> out;
  out.reserve(alphas.size());
  for (double a : alphas) {
    ModelParams p = base;
    p.alpha = a;
    out.push_back(solve_eigen(p, ntheta).lambda);
  }
  return out;
}

/// Eigenvalue used for regime decisions: the 513-node value, Richardson-extrapolated from
/// (257, 513) when it falls inside the dead band 10 dtheta^2 around zero.
struct RegimeEigenvalue {
  EigenPair pair;
  double lambda = 0.0;
  double dead_band = 0.0;
  bool extrapolated = false;
};

inline RegimeEigenvalue regime_eigenvalue(const ModelParams& p) {
  RegimeEigenvalue r;
  r.pair = solve_eigen(p, kRegimeEigenNodes);
  r.lambda = r.pair.lambda;
  const double h = p.width() / static_cast<double>(kRegimeEigenNodes - 1);
  r.dead_band = 10.0 * h * h;
  if (std::abs(r.lambda) < r.dead_band) {
    const double coarse = solve_eigen(p, (kRegimeEigenNodes + 1) / 2).lambda;
    r.lambda = (4.0 * r.pair.lambda - coarse) / 3.0;
    r.extrapolated = true;
  }
  return r;
}

}  // namespace allee
