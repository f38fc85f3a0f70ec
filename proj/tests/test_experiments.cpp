#include <gtest/gtest.h>

#include <cmath>

#include "allee/experiments.hpp"

using namespace allee;

namespace {

ModelParams base() { return {1.0, 5e-3, 0.2, 0.9}; }

SimulationSetup small_setup(double t_end) {
  SimulationSetup s;
  s.x_lo = -20;
  s.x_hi = 20;
  s.nx = 81;
  s.ntheta = 17;
  s.integrator.t_end = t_end;
  return s;
}

// 1 / int_Theta exp(-(theta - 0.3)^2 / 0.02) dtheta, adaptive quadrature (tests/oracles).
constexpr double kGaussNorm = 4.7417219009619148708;

double discrete_gauss_norm(std::size_t ntheta) {
  const auto p = base();
  const Grid g = Grid::make(-60, 60, 241, ntheta, p);
  const auto s = build_initial(InitialCondition::gaussian(20, 0.3, 0.1), g, p);
  const std::size_t j = 0;  // theta_min
  const double z = g.theta(j) - 0.3;
  return s.at(120, j) / std::exp(-z * z / 0.02);
}

}  // namespace

TEST(BuildInitial, UniformIndicatorHasUnitTraitMass) {
  const auto p = base();
  const Grid g = Grid::make(-60, 60, 241, 33, p);
  const auto s = build_initial(InitialCondition::uniform(20), g, p);
  const auto rho = integrate_mass(s);
  EXPECT_NEAR(*std::max_element(rho.begin(), rho.end()), 1.0, 1e-14);
  for (std::size_t i = 0; i < g.nx; ++i) {
    const double ax = std::abs(g.x(i));
    if (ax < 10 - 1e-9) EXPECT_NEAR(rho[i], 1.0, 1e-14) << g.x(i);
    else if (ax > 10 + 1e-9) EXPECT_EQ(rho[i], 0.0) << g.x(i);
    else EXPECT_NEAR(rho[i], 0.5, 1e-14) << g.x(i);
  }
  EXPECT_NEAR(total_mass(s), 20.0, 1e-12);
}

TEST(BuildInitial, ScaleMultipliesProfile) {
  const auto p = base();
  const Grid g = Grid::make(-60, 60, 241, 33, p);
  const auto a = build_initial(InitialCondition::uniform(10), g, p);
  const auto b = build_initial(InitialCondition::uniform(10, 1e-3), g, p);
  for (std::size_t k = 0; k < a.u.size(); ++k) EXPECT_DOUBLE_EQ(b.u[k], 1e-3 * a.u[k]);
}

TEST(BuildInitial, GaussianNormalizationMatchesQuadratureOracle) {
  const double e33 = std::abs(discrete_gauss_norm(33) - kGaussNorm);
  const double e65 = std::abs(discrete_gauss_norm(65) - kGaussNorm);
  const double e129 = std::abs(discrete_gauss_norm(129) - kGaussNorm);
  // Euler-Maclaurin: C_h - C ~ C^2 h^2 / 12 (f'(theta_min) - f'(theta_max)), f the unnormalized profile.
  const auto fp = [](double th) { return -(th - 0.3) / 0.01 * std::exp(-(th - 0.3) * (th - 0.3) / 0.02); };
  const double h33 = 0.7 / 32;
  const double predicted = kGaussNorm * kGaussNorm * h33 * h33 / 12.0 * (fp(0.2) - fp(0.9));
  EXPECT_GT(discrete_gauss_norm(33), kGaussNorm);
  EXPECT_NEAR(e33, predicted, 0.05 * predicted);
  EXPECT_NEAR(std::log2(e33 / e65), 2.0, 0.2);
  EXPECT_NEAR(std::log2(e65 / e129), 2.0, 0.2);
}

TEST(BuildInitial, GaussianTraitIntegralIsExactlyOne) {
  const auto p = base();
  const Grid g = Grid::make(-60, 60, 241, 33, p);
  const auto s = build_initial(InitialCondition::gaussian(5, 0.6, 0.1), g, p);
  EXPECT_NEAR(integrate_mass(s)[120], 1.0, 1e-14);
}

TEST(BuildInitial, WideGaussianIsFlat) {
  const auto p = base();
  const Grid g = Grid::make(-60, 60, 241, 33, p);
  const auto s = build_initial(InitialCondition::gaussian(20, 0.5, 1e3), g, p);
  for (std::size_t j = 0; j < g.ntheta; ++j) EXPECT_NEAR(s.at(120, j), 1.0 / 0.7, 1e-6);
}

TEST(BuildInitial, DomainErrors) {
  const auto p = base();
  const Grid g = Grid::make(-60, 60, 241, 33, p);
  EXPECT_THROW(build_initial(InitialCondition::uniform(121), g, p), DomainError);
  EXPECT_THROW(build_initial(InitialCondition::uniform(0), g, p), DomainError);
  const Grid even = Grid::make(-60, 60, 240, 33, p);  // no node at x = 0
  EXPECT_NO_THROW(build_initial(InitialCondition::uniform(0.1), g, p));
  EXPECT_THROW(build_initial(InitialCondition::uniform(0.1), even, p), DomainError);
  EXPECT_THROW(build_initial(InitialCondition::gaussian(5, 0.95, 0.1), g, p), DomainError);
  EXPECT_THROW(build_initial(InitialCondition::gaussian(5, 0.5, 0.0), g, p), DomainError);
  EXPECT_THROW(build_initial(InitialCondition::uniform(5, -1.0), g, p), DomainError);
}

TEST(ClassifyOutcome, FourRulesAndPrecedence) {
  EXPECT_EQ(classify_outcome(100.0, 119.5, 120).label, Outcome::Persistence);
  EXPECT_EQ(classify_outcome(200.0, 119.5, 120).label, Outcome::Persistence);  // precedence over trend
  EXPECT_EQ(classify_outcome(3.0, 0.5, 120).label, Outcome::Extinction);
  EXPECT_EQ(classify_outcome(0.1, 0.5, 120).label, Outcome::Extinction);
  EXPECT_EQ(classify_outcome(40.0, 50.0, 120).label, Outcome::ProbablePersistence);
  EXPECT_EQ(classify_outcome(60.0, 50.0, 120).label, Outcome::ProbableExtinction);
  EXPECT_EQ(classify_outcome(50.0, 50.0, 120).label, Outcome::ProbableExtinction);  // tie
  EXPECT_EQ(classify_outcome(40.0, 119.0, 120).label, Outcome::ProbablePersistence);  // strict >
  EXPECT_EQ(classify_outcome(2.0, 1.0, 120).label, Outcome::ProbableExtinction);      // strict <
  const auto o = classify_outcome(40.0, 50.0, 120);
  EXPECT_EQ(o.N_half, 40.0);
  EXPECT_EQ(o.N_end, 50.0);
}

TEST(ClassifyOutcome, RequiresHalfTimeRecord) {
  Trajectory t;
  t.times = {0.0, 10.0};
  t.mass_series = {1.0, 2.0};
  EXPECT_THROW(classify_outcome(t, 120), MissingRecord);
  EXPECT_THROW(classify_outcome(Trajectory{}, 120), MissingRecord);
  t.times = {0.0, 5.0, 10.0};
  t.mass_series = {1.0, 2.0, 3.0};
  EXPECT_EQ(classify_outcome(t, 120).label, Outcome::ProbablePersistence);
}

TEST(SimulationSetup, ResolvedRecordTimesIncludeHalfAndEnd) {
  auto s = small_setup(40.0);
  s.integrator.record_times = {20.0, 5.0};
  std::sort(s.integrator.record_times.begin(), s.integrator.record_times.end());
  const auto c = s.resolved_integrator();
  EXPECT_EQ(c.record_times, (std::vector<double>{5.0, 20.0, 40.0}));
  s.monitors = true;
  s.monitor_records = 4;
  EXPECT_EQ(s.resolved_integrator().record_times, (std::vector<double>{5.0, 10.0, 20.0, 30.0, 40.0}));
  EXPECT_TRUE(s.resolved_integrator().store_snapshots);
}

TEST(RunSweep, SingleCellEqualsDirectSolve) {
  const auto p = base();
  const auto setup = small_setup(40.0);
  const auto r = run_sweep(p, {5e-3}, {10.0}, setup);
  ASSERT_EQ(r.cells.size(), 1u);
  const Grid g = setup.grid(p);
  const auto traj = solve(build_initial(InitialCondition::uniform(10.0), g, p), setup.resolved_integrator());
  const auto direct = classify_outcome(traj, g.length());
  EXPECT_EQ(r.at(0, 0).outcome.label, direct.label);
  EXPECT_EQ(r.at(0, 0).outcome.N_end, direct.N_end);
  EXPECT_EQ(r.at(0, 0).outcome.N_half, direct.N_half);
}

TEST(RunSweep, IndependentOfWorkerCountAndRepeatable) {
  const auto p = base();
  const auto setup = small_setup(30.0);
  const std::vector<double> alphas{2e-3, 8e-3, 1.4e-2};
  const std::vector<double> Ls{4.0, 12.0};
  const auto a = run_sweep(p, alphas, Ls, setup, 1);
  const auto b = run_sweep(p, alphas, Ls, setup, 3);
  const auto c = run_sweep(p, alphas, Ls, setup, 1);
  ASSERT_EQ(a.cells.size(), 6u);
  for (std::size_t k = 0; k < a.cells.size(); ++k) {
    EXPECT_EQ(a.cells[k].outcome.label, b.cells[k].outcome.label);
    EXPECT_EQ(a.cells[k].outcome.N_end, b.cells[k].outcome.N_end);
    EXPECT_EQ(a.cells[k].outcome.N_end, c.cells[k].outcome.N_end);
  }
}

TEST(RunSweep, RejectsEmptyRanges) {
  EXPECT_THROW(run_sweep(base(), {}, {5.0}, small_setup(10)), DomainError);
  EXPECT_THROW(run_sweep(base(), {1e-3}, {}, small_setup(10)), DomainError);
  EXPECT_THROW(run_sweep(base(), {1e-3}, {500.0}, small_setup(10)), DomainError);
}

TEST(RunSweep, MonitorsAttachedWhenRequested) {
  auto setup = small_setup(20.0);
  setup.monitors = true;
  const auto r = run_sweep(base(), {5e-3}, {10.0}, setup);
  ASSERT_TRUE(r.at(0, 0).monitors.has_value());
  EXPECT_TRUE(r.at(0, 0).monitors->passed());
}

namespace {

CellResult cell(Outcome o) {
  CellResult c;
  c.outcome.label = o;
  return c;
}

}  // namespace

TEST(AlphaStar, SmallestAlphaOfAnAllExtinctTail) {
  SweepResult r;
  r.alpha_values = {1, 2, 3, 4, 5};
  r.L_values = {5, 10};
  using O = Outcome;
  const O rows[5][2] = {{O::Extinction, O::Persistence},
                        {O::Extinction, O::Extinction},  // isolated: not part of the tail
                        {O::ProbablePersistence, O::Extinction},
                        {O::Extinction, O::ProbableExtinction},
                        {O::Extinction, O::Extinction}};
  for (auto& row : rows)
    for (O o : row) r.cells.push_back(cell(o));
  EXPECT_EQ(empirical_alpha_star(r), 4.0);
  r.cells[9] = cell(O::Persistence);
  EXPECT_FALSE(empirical_alpha_star(r).has_value());
  r.cells[9] = cell(O::Extinction);
  r.cells[8].error = "StepUnderflow";
  EXPECT_FALSE(empirical_alpha_star(r).has_value());
  EXPECT_EQ(r.cells[8].label_name(), "Indeterminate");
}

TEST(TraitThreshold, MidpointOfFirstSwitch) {
  std::vector<TraitScanEntry> e;
  const Outcome labels[] = {Outcome::Persistence, Outcome::ProbablePersistence, Outcome::Extinction,
                            Outcome::Extinction};
  const double th[] = {0.25, 0.3, 0.35, 0.4};
  for (int k = 0; k < 4; ++k) e.push_back({th[k], cell(labels[k])});
  EXPECT_NEAR(*trait_threshold(e), 0.325, 1e-15);
  for (auto& x : e) x.cell = cell(Outcome::Extinction);
  EXPECT_FALSE(trait_threshold(e).has_value());
}

TEST(TraitScan, LowTraitPersistsHighTraitDies) {
  // Full grid, shortened horizon; the acceptance suite runs the complete scan.
  SimulationSetup s;
  s.integrator.t_end = 400;
  const auto r = run_trait_scan(base(), {0.25, 0.8}, 5.0, 0.1, s);
  ASSERT_EQ(r.entries.size(), 2u);
  EXPECT_TRUE(persistence_side(r.entries[0].cell.outcome.label)) << r.entries[0].cell.outcome.N_end;
  EXPECT_FALSE(persistence_side(r.entries[1].cell.outcome.label)) << r.entries[1].cell.outcome.N_end;
  ASSERT_TRUE(r.threshold.has_value());
  EXPECT_NEAR(*r.threshold, 0.525, 1e-15);
}

TEST(TraitScan, RejectsTraitOutsideTheta) {
  EXPECT_THROW(run_trait_scan(base(), {0.1}, 5.0, 0.1, small_setup(10)), DomainError);
}
