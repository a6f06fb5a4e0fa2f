#include <gtest/gtest.h>

#include <set>

#include "acdr/scenario.hpp"
#include "acdr/scenario_io.hpp"
#include "test_support.hpp"

using namespace acdr;

TEST(Population, Table2Ranges) {
  const auto units = generate_population(1000, PopulationSpec{}, 11);
  ASSERT_EQ(units.size(), 1000u);
  for (const auto& u : units) {
    EXPECT_GE(u.thermal_resistance, 0.001);
    EXPECT_LE(u.thermal_resistance, 0.00772);
    EXPECT_GE(u.thermal_capacity, 336140.0);
    EXPECT_LE(u.thermal_capacity, 3074600.0);
    EXPECT_TRUE(u.theta_set == 24 || u.theta_set == 25 || u.theta_set == 26 || u.theta_set == 27 ||
                u.theta_set == 28);
    EXPECT_EQ(u.theta_min, u.theta_set - 3);
    EXPECT_EQ(u.theta_max, u.theta_set + 3);
    EXPECT_NO_THROW(validate(u));
  }
}

TEST(Population, AllSetpointsAppear) {
  const auto units = generate_population(500, PopulationSpec{}, 3);
  std::set<double> seen;
  for (const auto& u : units) seen.insert(u.theta_set);
  EXPECT_EQ(seen.size(), 5u);
}

TEST(Population, DegenerateSpecGivesThatUnit) {
  PopulationSpec spec;
  spec.thermal_resistance = {0.004, 0.004};
  spec.thermal_capacity = {2e6, 2e6};
  spec.rated_power = {1500, 1500};
  spec.eer = {3.2, 3.2};
  spec.setpoints = {26};
  spec.initial_theta = {27, 27};
  const auto units = generate_population(1, spec, 5);
  ASSERT_EQ(units.size(), 1u);
  const auto& u = units[0];
  EXPECT_EQ(u.id, 1);
  EXPECT_EQ(u.thermal_resistance, 0.004);
  EXPECT_EQ(u.thermal_capacity, 2e6);
  EXPECT_EQ(u.rated_power, 1500);
  EXPECT_EQ(u.eer, 3.2);
  EXPECT_EQ(u.theta_set, 26);
  EXPECT_EQ(u.initial_theta, 27);
}

TEST(Population, DeterministicInSeed) {
  const auto a = generate_population(50, PopulationSpec{}, 9);
  const auto b = generate_population(50, PopulationSpec{}, 9);
  const auto c = generate_population(50, PopulationSpec{}, 10);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Population, InvariantsOverManyGenerations) {
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    for (const auto& u : generate_population(100, PopulationSpec{}, seed)) ASSERT_NO_THROW(validate(u)) << seed;
}

TEST(Population, MeanResistance) {
  const auto units = generate_population(100000, PopulationSpec{}, 1);
  double sum = 0;
  for (const auto& u : units) sum += u.thermal_resistance;
  const double expected = (0.001 + 0.00772) / 2;
  EXPECT_NEAR(sum / units.size(), expected, 0.01 * expected);
}

TEST(Population, Errors) {
  PopulationSpec bad;
  bad.rated_power = {3000, 1000};
  try {
    generate_population(3, bad, 1);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("rated_power"), std::string::npos);
  }
  EXPECT_THROW(generate_population(0, PopulationSpec{}, 1), ConfigError);
}

TEST(ScenarioIo, RoundTrip) {
  const auto s = bundled_scenario(12, 4);
  const auto text = scenario_to_json_text(s);
  const auto back = scenario_from_json_text(text);
  EXPECT_EQ(back, s);
  const auto dir = testkit::scratch_dir("scenario_io");
  save_scenario(s, dir / "s.json");
  EXPECT_EQ(load_scenario(dir / "s.json"), s);
  EXPECT_EQ(scenario_to_json_text(back), text);
}

TEST(ScenarioIo, MissingBeta) {
  auto j = nlohmann::json::parse(scenario_to_json_text(testkit::tiny_scenario()));
  j.erase("beta");
  try {
    scenario_from_json_text(j.dump(2), "s.json");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("missing field beta"), std::string::npos) << e.what();
  }
}

TEST(ScenarioIo, InvariantViolationNamesUnitAndLine) {
  auto s = testkit::tiny_scenario();
  s.units.push_back(testkit::make_unit(17));
  auto j = nlohmann::ordered_json::parse(scenario_to_json_text(s));
  j["units"][1]["theta_min"] = 26.0;
  const auto text = j.dump(2);
  try {
    scenario_from_json_text(text, "s.json");
    FAIL();
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("unit 17"), std::string::npos) << msg;
    EXPECT_EQ(msg.rfind("s.json:", 0), 0u) << msg;
    const int line = std::stoi(msg.substr(7));
    std::istringstream in(text);
    std::string l;
    for (int i = 0; i < line; ++i) std::getline(in, l);
    EXPECT_NE(l.find("theta_min"), std::string::npos) << "line " << line << ": " << l;
  }
}

TEST(ScenarioIo, UnknownField) {
  auto j = nlohmann::json::parse(scenario_to_json_text(testkit::tiny_scenario()));
  j["horizon"]["colour"] = 1;
  try {
    scenario_from_json_text(j.dump(2), "s.json");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos);
  }
}

TEST(ScenarioIo, WrongType) {
  auto j = nlohmann::json::parse(scenario_to_json_text(testkit::tiny_scenario()));
  j["beta"] = "three";
  EXPECT_THROW(scenario_from_json_text(j.dump(2), "s.json"), ParseError);
  EXPECT_THROW(scenario_from_json_text("{not json", "s.json"), ParseError);
}

TEST(ScenarioIo, VectorLengthMismatch) {
  auto j = nlohmann::json::parse(scenario_to_json_text(testkit::tiny_scenario()));
  j["prices"]["price"] = {1.0, 2.0};
  EXPECT_THROW(scenario_from_json_text(j.dump(2), "s.json"), ParseError);
}

TEST(Bundled, Shape) {
  const auto s = bundled_scenario(100, 42);
  EXPECT_NO_THROW(validate(s));
  EXPECT_EQ(s.horizon.periods, 48);
  EXPECT_EQ(s.horizon.dt, 300);
  const double lo = *std::min_element(s.prices.price.begin(), s.prices.price.end());
  const double hi = *std::max_element(s.prices.price.begin(), s.prices.price.end());
  EXPECT_GE(hi, 10 * lo);
  for (double x : s.forecast.theta_out_pre) {
    EXPECT_GE(x, 25.4);
    EXPECT_LE(x, 26.6);
  }
}
