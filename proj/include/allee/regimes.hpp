#pragma once

// Decision table for persistence/extinction and the explicit thresholds that back it.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include "allee/error.hpp"
#include "allee/model.hpp"
#include "allee/spectral.hpp"

namespace allee {

enum class RegimeCell {
  SystematicPersistence,
  SystematicExtinction,
  ConditionalEP,
  ConditionalEP_Conjectured,
  SupercriticalSplit,
};

inline const char* to_string(RegimeCell c) noexcept {
  switch (c) {
    case RegimeCell::SystematicPersistence: return "SystematicPersistence";
    case RegimeCell::SystematicExtinction: return "SystematicExtinction";
    case RegimeCell::ConditionalEP: return "ConditionalEP";
    case RegimeCell::ConditionalEP_Conjectured: return "ConditionalEP_Conjectured";
    case RegimeCell::SupercriticalSplit: return "SupercriticalSplit";
  }
  return "Unknown";
}

struct RegimeReport {
  RegimeCell cell = RegimeCell::ConditionalEP;
  double lambda = 0.0;
  std::optional<double> alpha_sharp;  // only for SupercriticalSplit
  bool sign_indeterminate = false;    // lambda inside the +-10 dtheta^2 dead band
  std::string notes;
};

struct Thresholds {
  std::optional<double> u0_sup_bound;
  std::optional<double> alpha_sharp;
  double lambda1_dirichlet = 0.0;
  std::optional<double> eta_star;
};

inline constexpr double kCriticalSumTol = 1e-12;

/// pi^2 / (theta_max - theta_min)^2: first Dirichlet eigenvalue of -d^2/dtheta^2 on Theta,
/// equal to the second Neumann one.
inline double lambda1_dirichlet(const ModelParams& p) { return M_PI * M_PI / (p.width() * p.width()); }

/// min((theta_max + theta_min - 1) / 10, theta_min / 4), defined in the supercritical regime.
inline std::optional<double> eta_star(const ModelParams& p) {
  if (!(p.theta_min + p.theta_max > 1.0) || !(p.theta_min > 0.0)) return std::nullopt;
  return std::min((p.theta_max + p.theta_min - 1.0) / 10.0, p.theta_min / 4.0);
}

/// Explicit mutation level above which every solution with sup rho(0,.) <= M goes extinct
/// (supercritical case, 0 < theta_min < 1/2 < midpoint).
inline std::optional<double> alpha_sharp(double M, const ModelParams& p) {
  if (!(M > 0.0)) throw DomainError("alpha_sharp: M must be > 0");
  if (!(p.theta_min + p.theta_max > 1.0) || !(p.theta_min < 0.5)) return std::nullopt;
  if (!(p.theta_min > 0.0))
    throw DomainError("alpha_sharp: theta_min must be > 0 in the supercritical regime");
  const double tmin = p.theta_min;
  const double tmax = p.theta_max;
  const double w = tmax - tmin;
  const double eta = *eta_star(p);
  const double m1 = M + 1.0;
  const double bracket = m1 * (1.0 + M_PI) * tmax - m1 * tmin + M_PI / 4.0 +
                         m1 * m1 / (eta * eta * std::sqrt(3.0)) *
                             std::sqrt((tmax * tmax * tmax - tmin * tmin * tmin) * w);
  return w * w / (M_PI * M_PI * M_PI) * bracket;
}

/// Sup-norm bound on u0 below which extinction is guaranteed (requires lambda > 0):
/// lambda min(phi) / ((theta_max - theta_min) (1 + theta_max)).
inline std::optional<double> extinction_threshold(const EigenPair& pair, const ModelParams& p) {
  if (!(pair.lambda > 0.0)) return std::nullopt;
  return pair.lambda * pair.min_phi() / (p.width() * (1.0 + p.theta_max));
}

inline Thresholds compute_thresholds(const ModelParams& p, const EigenPair& pair, double M = 1.0) {
  Thresholds t;
  t.u0_sup_bound = extinction_threshold(pair, p);
  if (p.theta_min > 0.0) t.alpha_sharp = alpha_sharp(M, p);
  t.lambda1_dirichlet = lambda1_dirichlet(p);
  t.eta_star = eta_star(p);
  return t;
}

/// Places (params, lambda) in the persistence/extinction table. Near lambda = 0 the sign is
/// taken from a Richardson-extrapolated eigenvalue; if that is still inside the dead band the
/// report is flagged and falls through to the lambda > 0 branch.
inline RegimeReport classify_regime(const ModelParams& p, const EigenPair& pair, double M = 1.0) {
  RegimeReport r;
  std::ostringstream notes;
  double lambda = pair.lambda;
  const double h = pair.dtheta();
  const double band = 10.0 * h * h;
  if (std::abs(lambda) < band && pair.size() >= 33) {
    ModelParams q = p;
    q.alpha = pair.alpha;
    const double coarse = solve_eigen(q, (pair.size() + 1) / 2).lambda;
    lambda = (4.0 * pair.lambda - coarse) / 3.0;
    notes << "lambda " << pair.lambda << " within dead band " << band
          << ", extrapolated to " << lambda << "; ";
  }
  r.lambda = lambda;
  if (std::abs(lambda) < band) {
    r.sign_indeterminate = true;
    notes << "Indeterminate-with-sign-uncertainty: treated as lambda > 0; ";
  }

  const double sum = p.theta_min + p.theta_max;
  if (lambda <= 0.0 && !r.sign_indeterminate) {
    r.cell = RegimeCell::SystematicPersistence;
    notes << "lambda <= 0: every solution persists (hair trigger)";
  } else if (p.theta_min >= 0.5) {
    r.cell = RegimeCell::SystematicExtinction;
    notes << "theta_min >= 1/2: every solution goes extinct";
  } else if (p.theta_min < 0.0) {
    r.cell = RegimeCell::ConditionalEP;
    notes << "lambda > 0, theta_min < 0: small data go extinct, outcome depends on u0";
  } else if (std::abs(sum - 1.0) <= kCriticalSumTol) {
    r.cell = RegimeCell::ConditionalEP_Conjectured;
    notes << "lambda > 0, theta_min + theta_max = 1: extinction possible, persistence conjectured";
  } else if (sum < 1.0) {
    r.cell = RegimeCell::ConditionalEP;
    notes << "lambda > 0, theta_min + theta_max < 1: outcome depends on u0";
  } else {
    r.cell = RegimeCell::SupercriticalSplit;
    if (p.theta_min > 0.0) {
      r.alpha_sharp = alpha_sharp(M, p);
      notes << "lambda > 0, theta_min + theta_max > 1: extinction for alpha > alpha_sharp = "
            << *r.alpha_sharp << " (M = " << M << "); below it persistence is conjectured";
    } else {
      notes << "lambda > 0, theta_min = 0, theta_min + theta_max > 1: alpha_sharp undefined";
    }
  }
  r.notes = notes.str();
  return r;
}

inline RegimeReport classify_regime(const ModelParams& p) {
  return classify_regime(p, solve_eigen(p, kRegimeEigenNodes));
}

enum class Prediction { GuaranteedExtinction, GuaranteedPersistence, Unknown };

inline const char* to_string(Prediction p) noexcept {
  switch (p) {
    case Prediction::GuaranteedExtinction: return "GuaranteedExtinction";
    case Prediction::GuaranteedPersistence: return "GuaranteedPersistence";
    case Prediction::Unknown: return "Unknown";
  }
  return "Unknown";
}

struct OutcomePrediction {
  Prediction prediction = Prediction::Unknown;
  std::string notes;
};

/// Outcome implied by the proven theorems alone; conjectured cells stay Unknown.
/// M is max_x rho(0, x) of the actual initial condition.
inline OutcomePrediction predict_outcome(const ModelParams& p, const EigenPair& pair,
                                         double u0_sup, double M, double alpha) {
  OutcomePrediction out;
  if (p.theta_min >= 0.5) {
    out.prediction = Prediction::GuaranteedExtinction;
    out.notes = "systematic extinction: theta_min >= 1/2";
    return out;
  }
  if (pair.lambda <= 0.0) {
    out.prediction = Prediction::GuaranteedPersistence;
    out.notes = "systematic persistence: lambda_alpha <= 0";
    return out;
  }
  if (const auto bound = extinction_threshold(pair, p); bound && u0_sup < *bound) {
    std::ostringstream m;
    m << "extinction: ||u0||_inf = " << u0_sup << " < " << *bound;
    out.prediction = Prediction::GuaranteedExtinction;
    out.notes = m.str();
    return out;
  }
  if (p.theta_min > 0.0 && p.theta_min + p.theta_max > 1.0) {
    const double sharp = *alpha_sharp(M, p);
    if (alpha > sharp) {
      std::ostringstream m;
      m << "extinction: alpha = " << alpha << " > alpha_sharp(M=" << M << ") = " << sharp;
      out.prediction = Prediction::GuaranteedExtinction;
      out.notes = m.str();
      return out;
    }
  }
  out.prediction = Prediction::Unknown;
  out.notes = "lambda_alpha > 0 and no sufficient extinction condition applies";
  return out;
}

}  // namespace allee
