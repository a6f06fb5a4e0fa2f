#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "acdr/lp_format.hpp"
#include "acdr/solver.hpp"
#include "test_support.hpp"

using namespace acdr;
using namespace acdr::milp;

namespace {

MilpModel tiny_model() {
  const auto s = testkit::tiny_scenario();
  return build_model(s, testkit::flat_baseline(s, 500), cluster_bounds(s));
}

}  // namespace

TEST(LpWriter, MatchesGoldenFile) {
  EXPECT_EQ(to_lp_string(tiny_model()), testkit::read_text(testkit::fixture("tiny_model.lp")));
}

TEST(LpWriter, Deterministic) {
  const auto s = testkit::random_scenario(3, 10, 2);
  const auto b = testkit::flat_baseline(s, 900);
  EXPECT_EQ(to_lp_string(build_model(s, b, cluster_bounds(s))), to_lp_string(build_model(s, b, cluster_bounds(s))));
}

TEST(LpWriter, BinariesSectionListsEveryBinary) {
  const auto s = testkit::random_scenario(4, 7, 3);
  const auto text = to_lp_string(build_model(s, testkit::flat_baseline(s, 900), cluster_bounds(s)));
  const auto begin = text.find("\nBinaries\n");
  const auto end = text.find("\nEnd");
  ASSERT_NE(begin, std::string::npos);
  std::istringstream in(text.substr(begin + 10, end - begin - 10));
  std::string name;
  int n = 0;
  while (in >> name) ++n;
  EXPECT_EQ(n, 3 * 4 * 7);
}

TEST(LpWriter, NumberFormat) {
  EXPECT_EQ(format_number(0.1 + 0.2), "0.3");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(1e20), "1e+20");
}

TEST(LpRoundTrip, TinyModel) {
  const auto m = tiny_model();
  const auto back = parse_lp(to_lp_string(m));
  std::string why;
  EXPECT_TRUE(models_equivalent(m, back, 1e-11, &why)) << why;
  EXPECT_EQ(back.units.size(), 1u);
  EXPECT_GE(back.gamma, 0);
}

TEST(LpRoundTrip, RandomModels) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = testkit::random_scenario(1 + static_cast<int>(seed % 4), 6 + static_cast<int>(seed % 9), seed);
    if (seed % 3 == 0) s.forecast.norm_kind = NormKind::ellipsoid;
    const auto m = build_model(s, testkit::flat_baseline(s, 1200), cluster_bounds(s));
    const auto back = parse_lp(to_lp_string(m));
    std::string why;
    EXPECT_TRUE(models_equivalent(m, back, 1e-11, &why)) << seed << ": " << why;
  }
}

TEST(LpRoundTrip, FixtureFile) {
  const auto back = read_lp(testkit::fixture("tiny_model.lp"));
  std::string why;
  EXPECT_TRUE(models_equivalent(tiny_model(), back, 1e-11, &why)) << why;
}

TEST(LpRoundTrip, DetectsDifferences) {
  const auto m = tiny_model();
  auto changed = m;
  changed.constraints[3].rhs += 1e-3;
  std::string why;
  EXPECT_FALSE(models_equivalent(m, changed, 1e-11, &why));
  EXPECT_NE(why.find(m.constraints[3].name), std::string::npos);
  changed = m;
  changed.variables[10].upper = 99;
  EXPECT_FALSE(models_equivalent(m, changed, 1e-11));
}

TEST(LpFile, ExportCreatesDirectories) {
  const auto dir = testkit::scratch_dir("lp_export");
  const auto path = dir / "nested" / "model.lp";
  export_lp(tiny_model(), path);
  EXPECT_EQ(testkit::read_text(path), to_lp_string(tiny_model()));
}

TEST(LpFile, UnwritablePath) {
  const auto dir = testkit::scratch_dir("lp_unwritable");
  std::ofstream(dir / "file") << "x";
  EXPECT_THROW(export_lp(tiny_model(), dir / "file" / "model.lp"), IoError);
  EXPECT_THROW(read_lp(dir / "absent.lp"), IoError);
}

TEST(LpParser, RejectsMalformedInput) {
  EXPECT_THROW(parse_lp("Maximize\n obj: + 1 x\nSubject To\n c1: + 1 x <=\nEnd\n"), ParseError);
  EXPECT_THROW(parse_lp("Subject To\n c1: + 1 x <= 1\nEnd\n"), ParseError);
  EXPECT_THROW(parse_lp("Maximize\n obj: + 1 x\nSubject To\n c1: + 1 x <= 1\n"), ParseError);
}

TEST(Solution, FixtureValidates) {
  const auto s = testkit::tiny_scenario();
  const auto m = tiny_model();
  const auto values = solver::parse_solution_text(testkit::read_text(testkit::fixture("tiny_solution.txt")));
  const auto on_off = solver::schedule_from_solution(m, values);
  EXPECT_EQ(on_off, (std::vector<std::vector<int>>{{0, 1, 1}}));
}

TEST(Solution, RejectsFractionalBinary) {
  auto values = solver::parse_solution_text(testkit::read_text(testkit::fixture("tiny_solution.txt")));
  for (auto& [name, v] : values)
    if (name == "u_g1_t2") v = 0.5;
  try {
    solver::schedule_from_solution(tiny_model(), values);
    FAIL();
  } catch (const ExternalSolverError& e) {
    EXPECT_NE(std::string(e.what()).find("not integral"), std::string::npos) << e.what();
  }
}

TEST(Solution, RejectsConstraintViolation) {
  auto values = solver::parse_solution_text(testkit::read_text(testkit::fixture("tiny_solution.txt")));
  for (auto& [name, v] : values)
    if (name == "th_g1_t3") v = 29.5;
  EXPECT_THROW(solver::schedule_from_solution(tiny_model(), values), ExternalSolverError);
}

TEST(Solution, RejectsUnknownAndMissing) {
  auto values = solver::parse_solution_text(testkit::read_text(testkit::fixture("tiny_solution.txt")));
  auto extra = values;
  extra.emplace_back("w_g1_t1", 0.0);
  EXPECT_THROW(solver::schedule_from_solution(tiny_model(), extra), ExternalSolverError);
  values.pop_back();
  EXPECT_THROW(solver::schedule_from_solution(tiny_model(), values), ExternalSolverError);
  EXPECT_THROW(solver::parse_solution_text("u_g1_t1 zero\n"), ExternalSolverError);
}

TEST(External, StubSolverModes) {
  const auto s = testkit::tiny_scenario();
  const auto b = testkit::flat_baseline(s, 500);
  const auto m = tiny_model();
  const std::string stub = "bash " + testkit::fixture("stub_solver.sh").string();
  const auto dir = testkit::scratch_dir("external");
  const auto good = solver::solve_external(m, s, b, stub + " good", dir);
  EXPECT_EQ(good.schedule.on_off, (std::vector<std::vector<int>>{{0, 1, 1}}));
  EXPECT_NEAR(good.schedule.objective, -0.233161211309, 1e-11);
  EXPECT_EQ(testkit::read_text(dir / "model.lp"), to_lp_string(m));
  for (const char* bad : {" fractional", " infeasible", " missing", " fail"})
    EXPECT_THROW(solver::solve_external(m, s, b, stub + bad, dir), ExternalSolverError) << bad;
  EXPECT_THROW(solver::solve_external(m, s, b, "", dir), ExternalSolverError);
  EXPECT_THROW(solver::solve_external(m, s, b, "/nonexistent/solver", dir), ExternalSolverError);
}
