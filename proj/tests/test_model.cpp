#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "allee/model.hpp"

using namespace allee;

namespace {

ModelParams base() { return {1.0, 5e-3, 0.2, 0.9}; }

StateField filled(const ModelParams& p, const Grid& g, auto&& f) {
  StateField s(p, g);
  for (std::size_t i = 0; i < g.nx; ++i)
    for (std::size_t j = 0; j < g.ntheta; ++j) s.at(i, j) = f(g.x(i), g.theta(j));
  return s;
}

// Field X(x) T(theta) on [0, 4] x Theta with vanishing odd derivatives at every wall, so the
// ghost-point reflection keeps second order at the boundary nodes too.
struct Manufactured {
  ModelParams p{1.0, 0.05, 0.2, 0.9};
  double xl = 4.0;

  double X(double x) const { return 0.3 + 0.2 * std::cos(M_PI * x / xl); }
  double Xpp(double x) const { return -0.2 * (M_PI / xl) * (M_PI / xl) * std::cos(M_PI * x / xl); }
  double s(double th) const { return (th - p.theta_min) / p.width(); }
  double T(double th) const {
    const double v = s(th);
    return 1.0 + 0.3 * std::cos(M_PI * v) + 0.1 * std::cos(2 * M_PI * v);
  }
  double Tpp(double th) const {
    const double v = s(th);
    return (-0.3 * M_PI * M_PI * std::cos(M_PI * v) - 0.4 * M_PI * M_PI * std::cos(2 * M_PI * v)) /
           (p.width() * p.width());
  }
  double rho(double x) const { return X(x) * p.width(); }
  double rhs(double x, double th) const {
    const double u = X(x) * T(th);
    const double r = rho(x);
    return p.d * Xpp(x) * T(th) + p.alpha * X(x) * Tpp(th) + u * (r - th) * (1 - r);
  }

  double max_error(std::size_t n) const {
    const Grid g = Grid::make(0.0, xl, n, n, p);
    const StateField s = filled(p, g, [&](double x, double th) { return X(x) * T(th); });
    const auto out = assemble_rhs(s);
    double err = 0.0;
    for (std::size_t i = 0; i < g.nx; ++i)
      for (std::size_t j = 0; j < g.ntheta; ++j)
        err = std::max(err, std::abs(out[i * g.ntheta + j] - rhs(g.x(i), g.theta(j))));
    return err;
  }
};

}  // namespace

TEST(ModelParams, ValidationRejectsBadValues) {
  EXPECT_NO_THROW(base().validate());
  ModelParams p = base();
  p.d = 0.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = base();
  p.alpha = -1.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = base();
  p.theta_max = 1.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = base();
  p.theta_min = 0.95;
  EXPECT_THROW(p.validate(), DomainError);
  p = {1.0, 1e-2, -0.8, -0.1};
  EXPECT_NO_THROW(p.validate());
}

TEST(Grid, SpacingAndNodes) {
  const Grid g = Grid::make(-60, 60, 241, 33, base());
  EXPECT_DOUBLE_EQ(g.dx, 0.5);
  EXPECT_DOUBLE_EQ(g.dtheta, 0.7 / 32);
  EXPECT_DOUBLE_EQ(g.x(0), -60);
  EXPECT_DOUBLE_EQ(g.x(240), 60);
  EXPECT_NEAR(g.theta(32), 0.9, 1e-15);
  EXPECT_THROW(Grid::make(-1, 1, 2, 33, base()), DomainError);
  EXPECT_THROW(Grid::make(-1, 1, 33, 2, base()), DomainError);
  EXPECT_THROW(Grid::make(1, -1, 33, 33, base()), DomainError);
}

TEST(Quadrature, LinearTraitProfileIsExact) {
  const auto p = base();
  const Grid g = Grid::make(-1, 1, 5, 33, p);
  const StateField s = filled(p, g, [](double, double th) { return th; });
  for (double r : integrate_mass(s)) EXPECT_NEAR(r, (0.81 - 0.04) / 2, 1e-14);
}

TEST(Quadrature, QuadraticProfileConvergesAtSecondOrder) {
  const auto p = base();
  const double exact = (std::pow(0.9, 3) - std::pow(0.2, 3)) / 3.0;
  double prev = 0.0;
  for (std::size_t n : {17, 33, 65, 129}) {
    const Grid g = Grid::make(-1, 1, 3, n, p);
    const StateField s = filled(p, g, [](double, double th) { return th * th; });
    const double err = std::abs(integrate_mass(s)[0] - exact);
    const double h = g.dtheta;
    EXPECT_NEAR(err, p.width() * h * h / 6.0, 1e-12);  // trapezoid error for a parabola
    if (prev > 0) { EXPECT_NEAR(std::log2(prev / err), 2.0, 0.05); }
    prev = err;
  }
}

TEST(MeanTrait, UniformGivesMidpointAndEmptyGivesSentinel) {
  const auto p = base();
  const Grid g = Grid::make(-2, 2, 9, 33, p);
  StateField s(p, g, 1.0 / p.width());
  for (std::size_t j = 0; j < g.ntheta; ++j) s.at(0, j) = 0.0;
  const auto tb = mean_trait(s);
  for (double v : tb) EXPECT_NEAR(v, 0.55, 1e-14);
  const auto rho = integrate_mass(s);
  EXPECT_EQ(rho[0], 0.0);
}

TEST(MeanTrait, StaysInsideThetaForRandomPositiveFields) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> U(0.0, 2.0);
  const auto p = base();
  const Grid g = Grid::make(-2, 2, 11, 17, p);
  for (int trial = 0; trial < 50; ++trial) {
    StateField s(p, g);
    for (double& v : s.u) v = U(rng);
    for (double v : mean_trait(s)) {
      EXPECT_GE(v, p.theta_min - 1e-14);
      EXPECT_LE(v, p.theta_max + 1e-14);
    }
  }
}

TEST(TotalMass, UniformIndicatorOverWholeDomain) {
  const auto p = base();
  const Grid g = Grid::make(-60, 60, 241, 33, p);
  const StateField s(p, g, 1.0 / p.width());
  EXPECT_NEAR(total_mass(s), 120.0, 1e-11);
  const auto f = derive(s);
  EXPECT_NEAR(f.total_mass, 120.0, 1e-11);
  EXPECT_EQ(f.rho.size(), g.nx);
}

TEST(Rhs, UniformEquilibriumIsStationary) {
  const auto p = base();
  const Grid g = Grid::make(-10, 10, 41, 33, p);
  const StateField s(p, g, 1.0 / p.width());
  for (double v : assemble_rhs(s)) EXPECT_NEAR(v, 0.0, 1e-13);
}

TEST(Rhs, ZeroIsStationary) {
  const auto p = base();
  const Grid g = Grid::make(-10, 10, 41, 33, p);
  for (double v : assemble_rhs(StateField(p, g))) EXPECT_EQ(v, 0.0);
}

TEST(Rhs, SecondOrderOnManufacturedField) {
  const Manufactured m;
  double prev = 0.0;
  std::vector<double> slopes;
  for (std::size_t n : {17, 33, 65, 129, 257}) {
    const double err = m.max_error(n);
    if (prev > 0) slopes.push_back(std::log2(prev / err));
    prev = err;
  }
  for (double s : slopes) EXPECT_NEAR(s, 2.0, 0.2);
}

TEST(Rhs, ReflectionSymmetryInX) {
  const auto p = base();
  const Grid g = Grid::make(-5, 5, 21, 17, p);
  const StateField s = filled(p, g, [](double x, double th) { return std::exp(-x * x) * (1.2 - th); });
  const auto out = assemble_rhs(s);
  for (std::size_t i = 0; i < g.nx; ++i)
    for (std::size_t j = 0; j < g.ntheta; ++j)
      EXPECT_NEAR(out[i * g.ntheta + j], out[(g.nx - 1 - i) * g.ntheta + j], 1e-14);
}

TEST(StateField, ValidateCatchesMismatch) {
  const auto p = base();
  const Grid g = Grid::make(-5, 5, 21, 17, p);
  StateField s(p, g);
  EXPECT_NO_THROW(validate_state(s));
  s.u.pop_back();
  EXPECT_THROW(validate_state(s), DomainError);
  StateField q(p, g);
  q.params.theta_min = 0.1;
  EXPECT_THROW(validate_state(q), DomainError);
}
