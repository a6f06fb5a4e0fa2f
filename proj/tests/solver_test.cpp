#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "acdr/solver.hpp"
#include "test_support.hpp"

using namespace acdr;
using namespace acdr::solver;

namespace {

// alpha = 0.5, gain = 10, outdoor 30, setpoint 24, start at 25, penalty weight 1.
UnitSubproblem two_period(double first_on_cost) {
  UnitSubproblem p;
  p.unit = testkit::make_unit();
  p.unit.theta_set = 24;
  p.unit.theta_min = 0;
  p.unit.theta_max = 50;
  p.periods = 2;
  p.on_cost = {first_on_cost, 1.0};
  p.theta_out = {30, 30};
  p.lo = {0, 0};
  p.hi = {50, 50};
  p.k = {0.5, 10};
  p.penalty_weight = 1;
  return p;
}

UnitSubproblem from_scenario(const Scenario& s, std::size_t g = 0) {
  return make_subproblem(s, g, robust::robust_bounds(s.units[g], s.horizon, s.forecast));
}

// First scenario at or after `seed` whose units are all individually feasible.
Scenario feasible_random_scenario(int units, int periods, std::uint64_t seed) {
  for (;; ++seed) {
    const auto s = testkit::random_scenario(units, periods, seed);
    bool ok = true;
    for (std::size_t g = 0; ok && g < s.units.size(); ++g)
      ok = solve_bnb(from_scenario(s, g)).report.status == Status::optimal;
    if (ok) return s;
  }
}

bool switching_ok(const AcUnit& u, const std::vector<int>& x) { return milp::first_switching_violation(u, x) == 0; }

}  // namespace

TEST(SequenceCost, HandValues) {
  const auto p = two_period(1.5);
  // off: |25-24| + |27.5-24|; on first: 1.5 + |25-24| + |22.5-24|
  EXPECT_DOUBLE_EQ(sequence_cost(p, std::vector<int>{0, 0}), 4.5);
  EXPECT_DOUBLE_EQ(sequence_cost(p, std::vector<int>{1, 0}), 4.0);
  EXPECT_DOUBLE_EQ(sequence_cost(p, std::vector<int>{1, 1}), 5.0);
}

TEST(Exhaustive, TwoLeafChoice) {
  auto cheap = solve_exhaustive(two_period(1.5));
  EXPECT_EQ(cheap.on_off, (std::vector<int>{1, 0}));
  EXPECT_DOUBLE_EQ(cheap.cost, 4.0);
  auto dear = solve_exhaustive(two_period(2.5));
  EXPECT_EQ(dear.on_off, (std::vector<int>{0, 0}));
  EXPECT_DOUBLE_EQ(dear.cost, 4.5);
  // a tie goes to the sequence that stays off earlier
  auto tie = solve_exhaustive(two_period(2.0));
  EXPECT_EQ(tie.on_off, (std::vector<int>{0, 0}));
  EXPECT_EQ(solve_bnb(two_period(1.5)).on_off, cheap.on_off);
  EXPECT_EQ(solve_bnb(two_period(2.5)).on_off, dear.on_off);
}

TEST(Exhaustive, OnlyOnIsFeasible) {
  // Any off period before the last one overshoots the upper band; the final
  // decision no longer moves a constrained temperature, so it stays off.
  auto s = testkit::tiny_scenario();
  s.horizon.periods = 8;
  s.forecast.theta_out_pre.assign(8, 30);
  s.prices.price.assign(8, 1);
  s.forecast.epsilon = 0;
  auto p = from_scenario(s);
  std::vector<int> on(8, 1);
  const auto th = thermal::simulate_trajectory(s.units[0], on, s.forecast.theta_out_pre, s.horizon.dt);
  for (int t = 1; t < 8; ++t) {
    p.hi[t] = th[t] + 1e-6;
    p.lo[t] = 0;
  }
  const std::vector<int> expected{1, 1, 1, 1, 1, 1, 1, 0};
  EXPECT_EQ(solve_exhaustive(p).on_off, expected);
  EXPECT_EQ(solve_bnb(p).on_off, expected);
}

TEST(Exhaustive, LongMinimumUpTime) {
  auto s = testkit::tiny_scenario();
  const int T = 6;
  s.horizon.periods = T;
  s.forecast.theta_out_pre.assign(T, 30);
  s.prices.price.assign(T, 1);
  s.forecast.epsilon = 0;
  s.units[0].min_up_periods = T;
  auto p = from_scenario(s);
  p.hi[1] = 25.0;  // staying off in period 1 would reach ~25.29
  const auto ex = solve_exhaustive(p);
  EXPECT_EQ(ex.on_off, std::vector<int>(T, 1));
  EXPECT_EQ(solve_bnb(p).on_off, ex.on_off);
}

TEST(Exhaustive, CapEnforced) {
  auto s = testkit::random_scenario(1, 17, 1);
  try {
    solve_exhaustive(from_scenario(s));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("16"), std::string::npos);
  }
  ClusterOptions opt;
  opt.method = Method::exhaustive;
  EXPECT_THROW(solve_cluster(s, testkit::flat_baseline(s, 0), milp::cluster_bounds(s), opt), ConfigError);
}

TEST(BranchAndBound, MatchesExhaustiveOnRandomInstances) {
  int feasible = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const int T = 2 + static_cast<int>(seed % 13);
    const auto s = testkit::random_scenario(1, T, 1000 + seed);
    const auto p = from_scenario(s);
    const auto ex = solve_exhaustive(p);
    const auto bb = solve_bnb(p);
    ASSERT_EQ(ex.report.status, bb.report.status) << "seed " << seed;
    EXPECT_LE(bb.report.nodes_explored, 1LL << (T + 1));
    if (ex.report.status != Status::optimal) continue;
    ++feasible;
    EXPECT_NEAR(bb.cost, ex.cost, 1e-9) << "seed " << seed;
    EXPECT_NEAR(sequence_cost(p, bb.on_off), bb.cost, 1e-9);
    EXPECT_TRUE(switching_ok(p.unit, bb.on_off));
  }
  EXPECT_GT(feasible, 150);
}

TEST(BranchAndBound, ZeroBetaAllOffIffFeasible) {
  int both = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto s = testkit::random_scenario(1, 48, 50 + seed);
    s.beta = 0;
    s.prices.price.assign(48, 1.2);
    const auto p = from_scenario(s);
    const std::vector<int> off(48, 0);
    const auto th = thermal::simulate_trajectory(s.units[0], off, s.forecast.theta_out_pre, s.horizon.dt);
    bool off_ok = switching_ok(s.units[0], off);
    for (int t = 0; t < 48; ++t) off_ok = off_ok && th[t] >= p.lo[t] && th[t] <= p.hi[t];
    const auto sol = solve_bnb(p);
    if (off_ok) {
      ++both;
      EXPECT_EQ(sol.on_off, off);
      EXPECT_EQ(sol.cost, 0.0);
    } else if (sol.report.status == Status::optimal) {
      EXPECT_GT(sol.cost, 0.0);
    }
  }
  EXPECT_GT(both, 0);
}

TEST(BranchAndBound, InfeasibleReportsPeriod) {
  auto s = testkit::tiny_scenario();
  s.forecast.theta_out_pre = {80, 80, 80};
  const auto p = from_scenario(s);
  const auto sol = solve_bnb(p);
  EXPECT_EQ(sol.report.status, Status::infeasible);
  EXPECT_EQ(sol.report.infeasible_period, 3);
  EXPECT_EQ(solve_exhaustive(p).report.status, Status::infeasible);
  try {
    solve_cluster(s, testkit::flat_baseline(s, 0), milp::cluster_bounds(s));
    FAIL();
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("unit 1"), std::string::npos) << e.what();
  }
}

TEST(BranchAndBound, IncumbentHistoryImproves) {
  const auto sol = solve_bnb(from_scenario(bundled_scenario(5, 3), 2));
  ASSERT_EQ(sol.report.status, Status::optimal);
  ASSERT_FALSE(sol.report.incumbent_history.empty());
  for (std::size_t i = 1; i < sol.report.incumbent_history.size(); ++i)
    EXPECT_LT(sol.report.incumbent_history[i].cost, sol.report.incumbent_history[i - 1].cost);
  EXPECT_NEAR(sol.report.incumbent_history.back().cost, sol.cost, 1e-12);
  EXPECT_LE(sol.report.nodes_explored, 1000000);
}

TEST(Cluster, DuplicateUnitsSolveIdentically) {
  auto s = feasible_random_scenario(1, 20, 5);
  s.units.push_back(s.units[0]);
  s.units[1].id = 2;
  auto one = s;
  one.units.resize(1);
  const auto b2 = testkit::flat_baseline(s, 1800);
  const auto b1 = testkit::flat_baseline(one, 1800);
  const auto two = solve_cluster(s, b2, milp::cluster_bounds(s));
  const auto single = solve_cluster(one, b1, milp::cluster_bounds(one));
  EXPECT_EQ(two.schedule.on_off[0], two.schedule.on_off[1]);
  EXPECT_NEAR(two.schedule.objective, 2 * single.schedule.objective, 1e-9);
}

TEST(Cluster, ObjectiveMatchesModel) {
  const auto s = feasible_random_scenario(4, 16, 21);
  const auto b = testkit::flat_baseline(s, 1400);
  const auto bounds = milp::cluster_bounds(s);
  const auto sol = solve_cluster(s, b, bounds, {Method::bnb, 3});
  const auto m = milp::build_model(s, b, bounds);
  const auto x = milp::assignment_from_schedule(m, sol.schedule, s);
  EXPECT_NEAR(milp::evaluate_objective(m, x), sol.schedule.objective, 1e-9);
  EXPECT_NO_THROW(milp::evaluate_schedule(sol.schedule, s, b, &bounds));
  double units = 0;
  for (const auto& r : sol.reports) units += r.objective;
  EXPECT_NEAR(sol.cost.baseline_electricity_cost - units, sol.schedule.objective, 1e-9);
}

TEST(Cluster, RobustRevenueNotAboveNominal) {
  auto s = bundled_scenario(20, 9);
  const auto b = run_baseline(s, {.threads = 4, .samples = 200});
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.0, 0.1, 0.2, 0.3}) {
    s.forecast.epsilon = eps;
    const auto sol = solve_cluster(s, b, milp::cluster_bounds(s), {Method::bnb, 4});
    EXPECT_LE(sol.schedule.objective, prev + 1e-9) << eps;
    prev = sol.schedule.objective;
  }
}

TEST(Cluster, DeterministicAcrossThreads) {
  const auto s = feasible_random_scenario(12, 24, 33);
  const auto b = testkit::flat_baseline(s, 1000);
  const auto bounds = milp::cluster_bounds(s);
  const auto a = solve_cluster(s, b, bounds, {Method::bnb, 1});
  const auto c = solve_cluster(s, b, bounds, {Method::bnb, 6});
  EXPECT_EQ(a.schedule.on_off, c.schedule.on_off);
  EXPECT_EQ(a.schedule.objective, c.schedule.objective);
}

TEST(Cluster, BeatsFeasibleBaselinePaths) {
  auto s = bundled_scenario(10, 4);
  s.horizon.periods = 24;
  s.forecast.theta_out_pre.resize(24);
  s.prices.price.resize(24);
  s.forecast.epsilon = 0;
  for (auto& u : s.units) u.min_up_periods = u.min_down_periods = u.initial_dwell_periods = 1;
  const auto bounds = milp::cluster_bounds(s);
  const auto b = testkit::flat_baseline(s, 0);
  const auto opt = solve_cluster(s, b, bounds);
  int compared = 0;
  for (std::uint64_t n = 0; n < 50; ++n) {
    const auto tr = simulate_sample(s, n);
    for (std::size_t g = 0; g < s.units.size(); ++g) {
      std::vector<int> u(24);
      for (int t = 0; t < 24; ++t) u[t] = tr.power(static_cast<int>(g), t) > 0;
      const auto p = make_subproblem(s, g, bounds[g]);
      const auto th = thermal::simulate_trajectory(s.units[g], u, p.theta_out, s.horizon.dt);
      bool ok = switching_ok(s.units[g], u);
      for (int t = 0; t < 24; ++t) ok = ok && th[t] >= p.lo[t] && th[t] <= p.hi[t];
      if (!ok) continue;
      ++compared;
      EXPECT_LE(opt.reports[g].objective, sequence_cost(p, u) + 1e-9);
    }
  }
  EXPECT_GT(compared, 0);
}

TEST(Method, Parse) {
  EXPECT_EQ(parse_method("bnb"), Method::bnb);
  EXPECT_EQ(parse_method("exhaustive"), Method::exhaustive);
  EXPECT_THROW(parse_method("simplex"), ConfigError);
}
