#pragma once

// Domain inputs: air-conditioner units, horizon, weather forecast, prices,
// and the randomized population generator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "acdr/error.hpp"
#include "acdr/rng.hpp"

namespace acdr {

/// Unit conversions. Power in W, time in s, energy billed in kWh.
inline constexpr double kJoulesPerKwh = 3.6e6;
inline constexpr double kSecondsPerHour = 3600.0;

/// Sigmoid parameters of the on/off transition probabilities.
struct TransitionParams {
  double a = -2.0;
  double b = -1.0;
  double c = 1.5;
  double d = -0.5;

  bool operator==(const TransitionParams&) const = default;
};

enum class UnitState { off = 0, on = 1 };

inline const char* to_string(UnitState s) { return s == UnitState::on ? "on" : "off"; }

struct AcUnit {
  int id = 0;
  double rated_power = 2000.0;         // W
  double eer = 3.0;                    // cooling W per electrical W
  double thermal_resistance = 0.004;   // degC / W
  double thermal_capacity = 1.0e6;     // J / degC
  double theta_set = 26.0;
  double theta_min = 23.0;
  double theta_max = 29.0;
  int min_up_periods = 2;
  int min_down_periods = 2;
  TransitionParams markov;
  UnitState initial_state = UnitState::on;
  int initial_dwell_periods = 2;
  double initial_theta = 26.0;

  bool operator==(const AcUnit&) const = default;
};

struct Horizon {
  int periods = 48;
  double dt = 300.0;                 // s
  double start_clock_time = 36000.0;  // seconds since midnight, labels only

  double dt_hours() const { return dt / kSecondsPerHour; }
  bool operator==(const Horizon&) const = default;
};

enum class NormKind { box, ellipsoid };

inline const char* to_string(NormKind k) { return k == NormKind::box ? "box" : "ellipsoid"; }

inline NormKind parse_norm_kind(const std::string& s) {
  if (s == "box") return NormKind::box;
  if (s == "ellipsoid") return NormKind::ellipsoid;
  throw ConfigError("unsupported norm kind '" + s + "' (expected box or ellipsoid)");
}

struct Forecast {
  std::vector<double> theta_out_pre;  // nominal outdoor temperature per period
  double epsilon = 0.3;
  NormKind norm_kind = NormKind::box;

  bool operator==(const Forecast&) const = default;
};

struct PriceSchedule {
  std::vector<double> price;  // CNY / kWh per period

  bool operator==(const PriceSchedule&) const = default;
};

struct Scenario {
  std::vector<AcUnit> units;
  Horizon horizon;
  Forecast forecast;
  PriceSchedule prices;
  double beta = 3.0;  // CNY / (degC h)
  int mc_samples = 1000;
  std::uint64_t master_seed = 1;

  bool operator==(const Scenario&) const = default;
};

/// Throws ConfigError naming the offending unit when an invariant fails.
inline void validate(const AcUnit& u) {
  const std::string who = "unit " + std::to_string(u.id) + ": ";
  auto finite = [](double x) { return std::isfinite(x); };
  if (!(u.rated_power > 0) || !finite(u.rated_power)) throw ConfigError(who + "rated_power must be > 0");
  if (!(u.eer > 0) || !finite(u.eer)) throw ConfigError(who + "eer must be > 0");
  if (!(u.thermal_resistance > 0) || !finite(u.thermal_resistance))
    throw ConfigError(who + "thermal_resistance must be > 0");
  if (!(u.thermal_capacity > 0) || !finite(u.thermal_capacity))
    throw ConfigError(who + "thermal_capacity must be > 0");
  if (!(u.theta_min <= u.theta_set && u.theta_set <= u.theta_max))
    throw ConfigError(who + "requires theta_min <= theta_set <= theta_max");
  if (!(u.theta_min <= u.initial_theta && u.initial_theta <= u.theta_max))
    throw ConfigError(who + "initial_theta outside [theta_min, theta_max]");
  if (u.min_up_periods < 1 || u.min_down_periods < 1)
    throw ConfigError(who + "min_up_periods and min_down_periods must be >= 1");
  if (u.initial_dwell_periods < 0) throw ConfigError(who + "initial_dwell_periods must be >= 0");
  const auto& m = u.markov;
  if (!finite(m.a) || !finite(m.b) || !finite(m.c) || !finite(m.d))
    throw ConfigError(who + "markov parameters must be finite");
}

inline void validate(const Scenario& s) {
  if (s.units.empty()) throw ConfigError("scenario needs at least one unit");
  if (s.horizon.periods < 2) throw ConfigError("horizon.periods must be >= 2");
  if (!(s.horizon.dt > 0)) throw ConfigError("horizon.dt must be > 0");
  const auto T = static_cast<std::size_t>(s.horizon.periods);
  if (s.forecast.theta_out_pre.size() != T)
    throw ConfigError("forecast.theta_out_pre length " + std::to_string(s.forecast.theta_out_pre.size()) +
                      " != horizon.periods " + std::to_string(T));
  if (!(s.forecast.epsilon >= 0)) throw ConfigError("forecast.epsilon must be >= 0");
  if (s.prices.price.size() != T)
    throw ConfigError("prices.price length " + std::to_string(s.prices.price.size()) + " != horizon.periods " +
                      std::to_string(T));
  for (double p : s.prices.price)
    if (!(p >= 0)) throw ConfigError("prices must be >= 0");
  if (!(s.beta >= 0)) throw ConfigError("beta must be >= 0");
  if (s.mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
  for (const auto& u : s.units) validate(u);
}

struct Range {
  double lo = 0;
  double hi = 0;
};

/// Parameter distributions for generated populations. Every range is sampled
/// uniformly and independently per unit.
struct PopulationSpec {
  Range thermal_resistance{0.001, 0.00772};
  Range thermal_capacity{336140.0, 3074600.0};
  std::vector<double> setpoints{24, 25, 26, 27, 28};
  double comfort_half_band = 3.0;
  Range rated_power{1000.0, 3000.0};
  Range eer{2.5, 4.0};
  Range initial_theta{25.0, 28.0};  // clipped to each unit's comfort band
  int min_up_periods = 2;
  int min_down_periods = 2;
  TransitionParams markov{};
  UnitState initial_state = UnitState::on;
};

namespace detail {

inline void check_range(const Range& r, const char* name, bool positive) {
  if (!(r.lo <= r.hi)) throw ConfigError(std::string("invalid range for ") + name + ": min > max");
  if (positive && !(r.lo > 0)) throw ConfigError(std::string("range for ") + name + " must be positive");
}

// Stream tags keep the population draws disjoint from the baseline simulation.
inline constexpr std::uint64_t kPopulationTag = 0x706f70756c617469ull;

}  // namespace detail

inline std::vector<AcUnit> generate_population(int count, const PopulationSpec& spec, std::uint64_t seed) {
  if (count < 1) throw ConfigError("population count must be >= 1");
  detail::check_range(spec.thermal_resistance, "thermal_resistance", true);
  detail::check_range(spec.thermal_capacity, "thermal_capacity", true);
  detail::check_range(spec.rated_power, "rated_power", true);
  detail::check_range(spec.eer, "eer", true);
  detail::check_range(spec.initial_theta, "initial_theta", false);
  if (spec.setpoints.empty()) throw ConfigError("setpoint list is empty");
  if (!(spec.comfort_half_band >= 0)) throw ConfigError("comfort_half_band must be >= 0");
  if (spec.min_up_periods < 1 || spec.min_down_periods < 1) throw ConfigError("min up/down periods must be >= 1");

  std::vector<AcUnit> units;
  units.reserve(static_cast<std::size_t>(count));
  const std::uint64_t key = rng::splitmix64(seed ^ detail::kPopulationTag);
  for (int i = 0; i < count; ++i) {
    rng::Stream s(key, static_cast<std::uint64_t>(i));
    AcUnit u;
    u.id = i + 1;
    u.thermal_resistance = s.uniform(spec.thermal_resistance.lo, spec.thermal_resistance.hi);
    u.thermal_capacity = s.uniform(spec.thermal_capacity.lo, spec.thermal_capacity.hi);
    const auto n_set = spec.setpoints.size();
    const auto pick = std::min(n_set - 1, static_cast<std::size_t>(s.uniform() * static_cast<double>(n_set)));
    u.theta_set = spec.setpoints[pick];
    u.theta_min = u.theta_set - spec.comfort_half_band;
    u.theta_max = u.theta_set + spec.comfort_half_band;
    u.rated_power = s.uniform(spec.rated_power.lo, spec.rated_power.hi);
    u.eer = s.uniform(spec.eer.lo, spec.eer.hi);
    const double lo = std::max(spec.initial_theta.lo, u.theta_min);
    const double hi = std::min(spec.initial_theta.hi, u.theta_max);
    const double draw = s.uniform();
    u.initial_theta = lo <= hi ? lo + (hi - lo) * draw : std::clamp(spec.initial_theta.lo, u.theta_min, u.theta_max);
    u.min_up_periods = spec.min_up_periods;
    u.min_down_periods = spec.min_down_periods;
    u.markov = spec.markov;
    u.initial_state = spec.initial_state;
    u.initial_dwell_periods = std::min(u.min_up_periods, u.min_down_periods);
    units.push_back(u);
  }
  return units;
}

/// Four-hour window starting 10:00 with 5-minute periods: warming through the
/// first quarter, slower over the middle half, faster again in the last
/// quarter. Values stay inside [25.4, 26.6] so every setpoint in 24..28 with a
/// 3 degC band and 0.3 degC uncertainty can coast with the unit off.
inline std::vector<double> bundled_outdoor_temperature(int periods) {
  std::vector<double> out(static_cast<std::size_t>(periods));
  const int q = std::max(1, periods / 4);
  const int plateau_end = periods - q;
  const int middle = std::max(1, plateau_end - q);
  for (int k = 0; k < periods; ++k) {
    double v = 0;
    if (k < q)
      v = 25.4 + 0.6 * static_cast<double>(k) / q;
    else if (k < plateau_end)
      v = 26.0 + 0.2 * static_cast<double>(k - q) / middle;
    else
      v = 26.2 + 0.4 * static_cast<double>(k - plateau_end + 1) / q;
    out[static_cast<std::size_t>(k)] = std::round(v * 100.0) / 100.0;
  }
  return out;
}

/// Time-of-use price: the middle half of the horizon is the peak block.
inline std::vector<double> bundled_prices(int periods, double off_peak = 0.3, double peak = 3.6) {
  std::vector<double> p(static_cast<std::size_t>(periods), off_peak);
  const int first = periods / 4;
  const int last = periods - periods / 4;
  for (int k = first; k < last; ++k) p[static_cast<std::size_t>(k)] = peak;
  return p;
}

/// Defaults for the bundled scenario: uncontrolled users let the room warm
/// well past the setpoint before switching on, and every unit starts off at
/// its setpoint.
inline PopulationSpec bundled_population_spec() {
  PopulationSpec spec;
  spec.markov = TransitionParams{-2.0, -4.0, 1.5, 1.0};
  spec.initial_state = UnitState::off;
  return spec;
}

inline Scenario bundled_scenario(int count, std::uint64_t seed, const PopulationSpec& spec = bundled_population_spec()) {
  Scenario s;
  s.horizon = Horizon{48, 300.0, 36000.0};
  s.forecast.theta_out_pre = bundled_outdoor_temperature(s.horizon.periods);
  s.forecast.epsilon = 0.3;
  s.forecast.norm_kind = NormKind::box;
  s.prices.price = bundled_prices(s.horizon.periods);
  s.beta = 0.1;
  s.mc_samples = 10000;
  s.master_seed = seed;
  s.units = generate_population(count, spec, seed);
  for (auto& u : s.units) u.initial_theta = u.theta_set;
  return s;
}

}  // namespace acdr
