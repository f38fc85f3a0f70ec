#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "allee/spectral.hpp"

using namespace allee;

namespace {

ModelParams with_alpha(double a, double tmin = 0.2, double tmax = 0.9) { return {1.0, a, tmin, tmax}; }

// Continuum eigenvalues from the Airy-function characteristic equation (tests/oracles).
constexpr double kLambda5e3 = 0.37413687486417242151;
constexpr double kLambda1e3 = 0.30187929697672036647;
constexpr double kLambda1e6 = 0.21018792971647471089;
constexpr double kLambda1 = 0.5479993336445952341;
constexpr double kLambdaNeg = -0.58200342949321551171;  // alpha 1e-2 on [-0.8, -0.1]
constexpr double kLambdaStraddle = -0.19812070283640549689;  // alpha 1e-3 on [-0.3, 0.5]

// Fine-grid Richardson oracle of the discretization itself (4097 and 2049 nodes).
constexpr double kFine4097 = 0.374136855137486;
constexpr double kFine2049 = 0.374136795957380;
constexpr double kRichardson = kFine4097 + (kFine4097 - kFine2049) / 3.0;

}  // namespace

TEST(SolveEigen, FineGridOracleReproduced) {
  EXPECT_NEAR(solve_eigen(with_alpha(5e-3), 4097).lambda, kFine4097, 1e-12);
  EXPECT_NEAR(solve_eigen(with_alpha(5e-3), 2049).lambda, kFine2049, 1e-12);
  EXPECT_NEAR(kRichardson, kLambda5e3, 1e-11);
}

TEST(SolveEigen, CoarseGridsMatchOracleToSecondOrder) {
  for (std::size_t n : {65, 129, 257, 513}) {
    const double h = 0.7 / static_cast<double>(n - 1);
    const double err = std::abs(solve_eigen(with_alpha(5e-3), n).lambda - kRichardson);
    EXPECT_LE(err, 1.0 * h * h) << n;
    EXPECT_GE(err, 0.1 * h * h) << n;  // genuinely second order, not accidentally exact
  }
}

TEST(SolveEigen, RefinementSlopeIsTwo) {
  std::vector<double> lam;
  for (std::size_t n : {65, 129, 257, 513, 1025}) lam.push_back(solve_eigen(with_alpha(5e-3), n).lambda);
  for (std::size_t k = 0; k + 2 < lam.size(); ++k) {
    const double slope = std::log2((lam[k + 1] - lam[k]) / (lam[k + 2] - lam[k + 1]));
    EXPECT_NEAR(slope, 2.0, 0.2);
  }
}

TEST(SolveEigen, AgreesWithAiryCharacteristicEquation) {
  struct Case {
    ModelParams p;
    double lambda;
    std::size_t n;
  };
  for (const Case& c : {Case{with_alpha(1e-3), kLambda1e3, 2049}, Case{with_alpha(1.0), kLambda1, 513},
                        Case{with_alpha(1e-2, -0.8, -0.1), kLambdaNeg, 1025},
                        Case{with_alpha(1e-3, -0.3, 0.5), kLambdaStraddle, 2049}}) {
    const double h = c.p.width() / static_cast<double>(c.n - 1);
    EXPECT_NEAR(solve_eigen(c.p, c.n).lambda, c.lambda, 2.0 * h * h);
  }
}

TEST(SolveEigen, EigenfunctionPositiveAndNormalized) {
  const auto pair = solve_eigen(with_alpha(5e-3), 513);
  EXPECT_EQ(pair.size(), 513u);
  EXPECT_DOUBLE_EQ(*std::max_element(pair.phi.begin(), pair.phi.end()), 1.0);
  EXPECT_GT(pair.min_phi(), 0.0);
  EXPECT_DOUBLE_EQ(pair.phi.front(), 1.0);  // maximum at theta_min
}

TEST(SolveEigen, ResidualOfTheDiscreteProblemIsTiny) {
  const auto p = with_alpha(5e-3);
  const auto pair = solve_eigen(p, 257);
  const auto s = detail::neumann_operator(p, 257);
  const double scale = 4 * p.alpha / (pair.dtheta() * pair.dtheta()) + 0.9;
  // Residual of the symmetrized system on W^{1/2} phi.
  std::vector<double> y(pair.phi);
  y.front() /= std::sqrt(2.0);
  y.back() /= std::sqrt(2.0);
  EXPECT_LT(detail::residual_inf(s, pair.lambda, y), 1e-9 * scale);
}

TEST(SolveEigen, RejectsTooFewNodes) {
  EXPECT_THROW(solve_eigen(with_alpha(5e-3), 8), DomainError);
  EXPECT_THROW(solve_eigen(with_alpha(-1.0), 64), DomainError);
}

TEST(SolveEigen, SmallAlphaApproachesThetaMin) {
  const auto pair = solve_eigen(with_alpha(1e-6), 513);
  EXPECT_LT(std::abs(pair.lambda - 0.2), 0.05);
  // Boundary-layer scaling: lambda - theta_min ~ |a1'| alpha^{1/3} with a1' = -1.0188.
  EXPECT_NEAR((kLambda1e6 - 0.2) / std::cbrt(1e-6), 1.0188, 0.01);
  EXPECT_NEAR(pair.lambda, kLambda1e6, 5e-4);
}

TEST(SolveEigen, LargeAlphaApproachesMidpoint) {
  const auto pair = solve_eigen(with_alpha(1e3), 513);
  EXPECT_NEAR(pair.lambda, 0.55, 1e-3);
  EXPECT_LT(pair.lambda, 0.55);
}

TEST(SolveEigen, ShiftCovariance) {
  for (double c : {-0.5, 0.03, 0.09}) {
    const double a = solve_eigen(with_alpha(5e-3), 513).lambda;
    const double b = solve_eigen(with_alpha(5e-3, 0.2 + c, 0.9 + c), 513).lambda;
    EXPECT_NEAR(b - a, c, 1e-9);
  }
}

TEST(SolveEigen, RayleighQuotientIsMinimal) {
  const auto p = with_alpha(5e-3);
  const auto pair = solve_eigen(p, 257);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> v(pair.phi);
    for (double& x : v) x += 0.05 * N(rng);
    EXPECT_GE(rayleigh_quotient(p, v), pair.lambda - 1e-12);
  }
  EXPECT_NEAR(rayleigh_quotient(p, pair.phi), pair.lambda, 1e-13);
  std::vector<double> flat(257, 1.0);
  EXPECT_NEAR(rayleigh_quotient(p, flat), p.midpoint(), 1e-13);
}

TEST(LambdaBounds, OpenIntervalAndConditionalBound) {
  auto b = lambda_bounds(with_alpha(5e-3));
  EXPECT_EQ(b.lower, 0.2);
  EXPECT_NEAR(b.upper, 0.55, 1e-15);
  EXPECT_FALSE(b.conditional_upper.has_value());  // theta_min > 0
  b = lambda_bounds(with_alpha(1e-3, -0.8, -0.1));
  ASSERT_TRUE(b.conditional_upper.has_value());
  EXPECT_NEAR(*b.conditional_upper, 1.5 * std::cbrt(M_PI * M_PI * 1e-3 / 2) - 0.8, 1e-14);
}

TEST(LambdaBounds, HoldOnRandomTuples) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> la(-6.0, 2.0), tmin(-1.0, 0.8), wid(0.05, 1.0);
  // The midpoint gap shrinks like width^4 / (120 alpha); alpha <= 50 width^2 keeps it above
  // twice the 10 dtheta^2 margin at 513 nodes.
  for (int k = 0; k < 100;) {
    ModelParams p{1.0, std::pow(10.0, la(rng)), tmin(rng), 0.0};
    p.theta_max = std::min(p.theta_min + wid(rng), 0.99);
    if (p.alpha > 50.0 * p.width() * p.width()) continue;
    ++k;
    const auto pair = solve_eigen(p, 513);
    const auto b = lambda_bounds(p);
    const double h = pair.dtheta();
    EXPECT_GT(pair.lambda, b.lower + 10 * h * h) << p.alpha << " " << p.theta_min << " " << p.theta_max;
    EXPECT_LT(pair.lambda, b.upper - 10 * h * h) << p.alpha << " " << p.theta_min << " " << p.theta_max;
    if (b.conditional_upper) { EXPECT_LE(pair.lambda, *b.conditional_upper + 10 * h * h); }
  }
}

TEST(Shape, PassesAcrossAlphaRange) {
  for (double a : {1e-6, 1e-4, 5e-3, 1e-1, 1.0, 1e3}) {
    const auto r = check_eigenfunction_shape(solve_eigen(with_alpha(a), 513));
    EXPECT_TRUE(r.pass) << a << ": " << r.reason;
  }
}

TEST(Shape, DetectsCorruption) {
  auto pair = solve_eigen(with_alpha(5e-3), 257);
  pair.phi[200] *= 1.5;
  const auto r = check_eigenfunction_shape(pair);
  EXPECT_FALSE(r.pass);
  ASSERT_TRUE(r.first_violation.has_value());
  EXPECT_EQ(*r.first_violation, 199u);
}

TEST(LambdaCurve, MonotoneIncreasingAndConcave) {
  std::vector<double> alphas;
  for (int k = 0; k < 20; ++k) alphas.push_back(1e-6 * std::pow(1e9, k / 19.0));
  const auto lam = lambda_curve(with_alpha(1.0), alphas, 513);
  for (std::size_t k = 1; k < lam.size(); ++k) EXPECT_GT(lam[k], lam[k - 1]);
  for (std::size_t k = 1; k + 1 < lam.size(); ++k) {
    const double s1 = (lam[k] - lam[k - 1]) / (alphas[k] - alphas[k - 1]);
    const double s2 = (lam[k + 1] - lam[k]) / (alphas[k + 1] - alphas[k]);
    EXPECT_LT(s2, s1) << k;
  }
}

TEST(LambdaCurve, RejectsUnsortedAlphas) {
  EXPECT_THROW(lambda_curve(with_alpha(1.0), {1e-3, 1e-4}), DomainError);
  EXPECT_THROW(lambda_curve(with_alpha(1.0), {0.0, 1e-4}), DomainError);
}

TEST(RegimeEigenvalue, ExtrapolatesOnlyInsideDeadBand) {
  const auto far = regime_eigenvalue(with_alpha(5e-3));
  EXPECT_FALSE(far.extrapolated);
  EXPECT_EQ(far.lambda, far.pair.lambda);
  // Shift Theta so that lambda sits within the dead band around 0.
  const double lam = solve_eigen(with_alpha(5e-3), 513).lambda;
  const double h = 0.7 / 512;
  const double c = -lam + 2.0 * h * h;
  const auto near = regime_eigenvalue(with_alpha(5e-3, 0.2 + c, 0.9 + c));
  EXPECT_TRUE(near.extrapolated);
  EXPECT_NEAR(near.lambda, kLambda5e3 + c, 1e-9);
}
