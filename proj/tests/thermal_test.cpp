#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "acdr/robust.hpp"
#include "acdr/thermal.hpp"
#include "test_support.hpp"

using namespace acdr;
using acdr::testkit::make_unit;

TEST(DecayFactor, OneTimeConstant) {
  const auto u = make_unit();
  EXPECT_NEAR(thermal::decay_factor(u, u.thermal_resistance * u.thermal_capacity), 0.367879441171442, 1e-15);
}

TEST(DecayFactor, ZeroStep) { EXPECT_EQ(thermal::decay_factor(make_unit(), 0.0), 1.0); }

TEST(DecayFactor, FiveMinutes) {
  // exp(-0.06) to 21 digits
  EXPECT_NEAR(thermal::decay_factor(make_unit(), 300.0), 0.941764533584248709537, 1e-15);
}

TEST(DecayFactor, StrictlyDecreasing) {
  const auto u = make_unit();
  double prev = 1.0;
  for (double dt = 10; dt <= 3000; dt += 10) {
    const double a = thermal::decay_factor(u, dt);
    EXPECT_LT(a, prev);
    prev = a;
  }
}

TEST(StepTemperature, OffAtOutdoorIsFixedPoint) {
  const auto u = make_unit();
  EXPECT_DOUBLE_EQ(thermal::step_temperature(31.5, 31.5, 0.0, u, 300), 31.5);
}

TEST(StepTemperature, FullOnEquilibrium) {
  const auto u = make_unit();
  const double gain = u.thermal_resistance * u.eer * u.rated_power;
  const double eq = 30.0 - gain;
  EXPECT_NEAR(thermal::step_temperature(eq, 30.0, u.rated_power, u, 300), eq, 1e-12);
}

TEST(StepTemperature, HalfDecayHandValue) {
  // alpha = 0.5 needs dt = R C ln 2; gain R eta P = 10.
  auto u = make_unit();
  u.thermal_resistance = 0.01;
  u.eer = 1.0;
  u.rated_power = 1000.0;
  const double dt = u.thermal_resistance * u.thermal_capacity * std::log(2.0);
  EXPECT_NEAR(thermal::step_temperature(26, 32, u.rated_power, u, dt), 24.0, 1e-12);
}

TEST(StepTemperature, ContractionSlope) {
  const auto u = make_unit();
  const double a = thermal::decay_factor(u, 300);
  for (double t1 : {20.0, 24.0, 27.5})
    for (double t2 : {21.0, 25.5, 30.0}) {
      const double d = thermal::step_temperature(t1, 30, u.rated_power, u, 300) -
                       thermal::step_temperature(t2, 30, u.rated_power, u, 300);
      EXPECT_NEAR(std::abs(d), a * std::abs(t1 - t2), 1e-12);
    }
}

TEST(StepTemperature, Monotone) {
  const auto u = make_unit();
  EXPECT_LT(thermal::step_temperature(25, 30, 0, u, 300), thermal::step_temperature(25, 30.1, 0, u, 300));
  EXPECT_GT(thermal::step_temperature(25, 30, 0, u, 300), thermal::step_temperature(25, 30, u.rated_power, u, 300));
}

TEST(StepTemperature, SharedStepMatches) {
  const auto u = make_unit();
  const auto k = thermal::coeffs(u, 300);
  EXPECT_EQ(thermal::step(k, 24.3, 29.1, 1), thermal::step_temperature(24.3, 29.1, u.rated_power, u, 300));
  EXPECT_EQ(thermal::step(k, 24.3, 29.1, 0), thermal::step_temperature(24.3, 29.1, 0.0, u, 300));
}

TEST(Trajectory, ConstantWhenOffAtOutdoor) {
  const auto u = make_unit();
  const std::vector<int> on_off{0, 0};
  const std::vector<double> out{25, 25};
  const auto th = thermal::simulate_trajectory(u, on_off, out, 300);
  EXPECT_EQ(th, (std::vector<double>{25, 25}));
}

TEST(Trajectory, ToggleHandValues) {
  // 30 degC outside, gain 15, u = (1, 0, 1); high-precision reference values.
  const auto u = make_unit();
  const std::vector<int> on_off{1, 0, 1};
  const std::vector<double> out{30, 30, 30};
  const auto th = thermal::simulate_trajectory(u, on_off, out, 300);
  ASSERT_EQ(th.size(), 3u);
  EXPECT_EQ(th[0], 25.0);
  EXPECT_NEAR(th[1], 24.4176453358424871, 1e-12);
  EXPECT_NEAR(th[2], 24.7427363634078445, 1e-12);
}

TEST(Trajectory, MonotoneInEachOutdoorEntry) {
  const auto u = make_unit();
  const std::vector<int> on_off{1, 0, 1, 1, 0, 0};
  std::vector<double> out{29, 30, 31, 30, 29, 28};
  const auto base = thermal::simulate_trajectory(u, on_off, out, 300);
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto bumped = out;
    bumped[k] += 0.01;
    const auto th = thermal::simulate_trajectory(u, on_off, bumped, 300);
    for (std::size_t t = 0; t < th.size(); ++t) {
      EXPECT_GE(th[t], base[t]);
      if (t > k) {
        EXPECT_GT(th[t], base[t]);
      }
    }
  }
}

TEST(Trajectory, MatchesClosedFormUnroll) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = testkit::random_scenario(3, 24, seed);
    rng::Stream r(seed, 5);
    for (const auto& u : s.units) {
      std::vector<int> on_off(24);
      for (auto& x : on_off) x = r.uniform() < 0.5;
      const auto sim = thermal::simulate_trajectory(u, on_off, s.forecast.theta_out_pre, s.horizon.dt);
      const auto map = robust::unroll_affine(u, s.horizon);
      const auto aff = map.evaluate(s.forecast.theta_out_pre, on_off);
      const auto k = thermal::coeffs(u, s.horizon.dt);
      for (int t = 0; t < 24; ++t) {
        double closed = std::pow(k.alpha, t) * u.initial_theta;
        for (int j = 0; j < t; ++j)
          closed += std::pow(k.alpha, t - 1 - j) * (1 - k.alpha) * (s.forecast.theta_out_pre[j] - k.gain * on_off[j]);
        EXPECT_NEAR(sim[t], closed, 1e-9);
        EXPECT_NEAR(aff[t], closed, 1e-9);
      }
    }
  }
}
