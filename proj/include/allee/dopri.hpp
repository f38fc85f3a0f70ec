#pragma once

// Explicit Dormand-Prince 5(4) pair with FSAL and a PI step-size controller
// (Hairer, Norsett & Wanner, "Solving ODEs I", routine DOPRI5).
//
// The stepper is generic over the right-hand side: any callable
//   void(double t, std::span<const double> y, std::span<double> dydt)
// works, which is how the 2D model, the 1D local oracle and the scalar
// comparison ODEs share one integrator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include "allee/error.hpp"

namespace allee {

struct StepperConfig {
  double rtol = 1e-6;
  double atol = 1e-8;
  double dt_init = 1e-3;
  double dt_max = std::numeric_limits<double>::infinity();
  double dt_min = 1e-12;  // absolute floor; below it a step is an underflow
  std::size_t max_steps = 50'000'000;
};

struct StepperStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
  double max_accepted_error = 0.0;  // scaled error norm, <= 1 for every accepted step
};

template <class Rhs>
class Dopri5 {
public:
  Dopri5(Rhs rhs, std::size_t n, StepperConfig cfg)
      : rhs_(std::move(rhs)), cfg_(cfg), h_(cfg.dt_init), k1_(n), k2_(n), k3_(n), k4_(n),
        k5_(n), k6_(n), k7_(n), ytmp_(n), ynew_(n) {}

  const StepperStats& stats() const noexcept { return stats_; }
  double step_size() const noexcept { return h_; }

  /// Advances (t, y) to exactly t_stop. `on_accept(t, y)` runs after every accepted step
  /// and may throw to abort.
  template <class OnAccept>
  void advance(double& t, std::vector<double>& y, double t_stop, OnAccept&& on_accept) {
    if (!(t_stop > t)) return;
    if (!fsal_ready_) {
      rhs_(t, y, k1_);
      ++stats_.rhs_evals;
      fsal_ready_ = true;
    }
    const std::size_t n = y.size();
    while (t < t_stop) {
      if (stats_.accepted + stats_.rejected >= cfg_.max_steps)
        throw SolverError(SolverError::Kind::StepUnderflow, "maximum step count exceeded");

      double h = std::min(h_, cfg_.dt_max);
      const double remaining = t_stop - t;
      bool truncated = false;
      if (h >= remaining) {
        h = remaining;
        truncated = true;
      } else if (h < cfg_.dt_min) {
        std::ostringstream m;
        m << "step size " << h << " fell below " << cfg_.dt_min << " at t=" << t;
        throw SolverError(SolverError::Kind::StepUnderflow, m.str());
      }

      stage(t, y, h, n);
      const double err = error_norm(y, h, n);

      if (err <= 1.0) {
        // PI controller with beta = 0.04, expo1 = 0.2 - 0.75 beta.
        const double fac11 = std::pow(std::max(err, 1e-16), kExpo1);
        double fac = fac11 / std::pow(facold_, kBeta);
        fac = std::clamp(fac / kSafe, 1.0 / kFacMax, 1.0 / kFacMin);
        const double hnew = h / fac;
        facold_ = std::max(err, 1e-4);

        t = truncated ? t_stop : t + h;
        y.swap(ynew_);
        k1_.swap(k7_);
        ++stats_.accepted;
        stats_.max_accepted_error = std::max(stats_.max_accepted_error, err);
        // A step shortened to hit t_stop does not shrink the controller's proposal.
        h_ = truncated ? std::max(hnew, h_) : hnew;
        if (last_rejected_) h_ = std::min(h_, h);
        last_rejected_ = false;
        on_accept(t, std::as_const(y));
      } else {
        const double fac11 = std::pow(err, kExpo1);
        h_ = h / std::min(1.0 / kFacMin, fac11 / kSafe);
        ++stats_.rejected;
        last_rejected_ = true;
        if (!std::isfinite(err)) h_ = 0.1 * h;
      }
    }
  }

private:
  static constexpr double kBeta = 0.04;
  static constexpr double kExpo1 = 0.2 - kBeta * 0.75;
  static constexpr double kSafe = 0.9;
  static constexpr double kFacMin = 0.2;  // hnew >= 0.2 h
  static constexpr double kFacMax = 10.0; // hnew <= 10 h

  // Dormand-Prince tableau.
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  void stage(double t, const std::vector<double>& y, double h, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) ytmp_[i] = y[i] + h * a21 * k1_[i];
    rhs_(t + c2 * h, ytmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) ytmp_[i] = y[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
    rhs_(t + c3 * h, ytmp_, k3_);
    for (std::size_t i = 0; i < n; ++i)
      ytmp_[i] = y[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
    rhs_(t + c4 * h, ytmp_, k4_);
    for (std::size_t i = 0; i < n; ++i)
      ytmp_[i] = y[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
    rhs_(t + c5 * h, ytmp_, k5_);
    for (std::size_t i = 0; i < n; ++i)
      ytmp_[i] =
          y[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
    rhs_(t + h, ytmp_, k6_);
    for (std::size_t i = 0; i < n; ++i)
      ynew_[i] =
          y[i] + h * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
    rhs_(t + h, ynew_, k7_);
    stats_.rhs_evals += 6;
  }

  double error_norm(const std::vector<double>& y, double h, std::size_t n) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] +
                            e6 * k6_[i] + e7 * k7_[i]);
      const double sk = cfg_.atol + cfg_.rtol * std::max(std::abs(y[i]), std::abs(ynew_[i]));
      const double r = e / sk;
      sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(n));
  }

  Rhs rhs_;
  StepperConfig cfg_;
  double h_;
  double facold_ = 1e-4;
  bool fsal_ready_ = false;
  bool last_rejected_ = false;
  StepperStats stats_;
  std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_;
};

}  // namespace allee
