#pragma once

// First-order room model with the outdoor temperature held constant over
// each period, integrated exactly.

#include <cassert>
#include <cmath>
#include <span>
#include <vector>

#include "acdr/scenario.hpp"

namespace acdr::thermal {

struct ThermalCoeffs {
  double alpha = 1.0;  // exp(-dt / (R C))
  double gain = 0.0;   // R * eer * rated_power, full-on temperature depression (degC)
};

inline double decay_factor(const AcUnit& unit, double dt) {
  return std::exp(-dt / (unit.thermal_resistance * unit.thermal_capacity));
}

inline ThermalCoeffs coeffs(const AcUnit& unit, double dt) {
  return {decay_factor(unit, dt), unit.thermal_resistance * unit.eer * unit.rated_power};
}

/// One period with the unit on (u = 1) or off (u = 0). All solvers and
/// simulators share this expression so their temperatures agree bit-for-bit.
inline double step(const ThermalCoeffs& k, double theta, double theta_out, int u) {
  return k.alpha * theta + (1.0 - k.alpha) * (theta_out - k.gain * u);
}

/// Same map for an arbitrary electrical power level (W).
inline double step_temperature(double theta, double theta_out, double power, const AcUnit& unit, double dt) {
  const double alpha = decay_factor(unit, dt);
  const double drive = theta_out - unit.thermal_resistance * unit.eer * power;
  return alpha * theta + (1.0 - alpha) * drive;
}

/// trajectory[0] = initial_theta; trajectory[t+1] = step(trajectory[t], theta_out[t], on_off[t]).
inline std::vector<double> simulate_trajectory(const AcUnit& unit, std::span<const int> on_off,
                                               std::span<const double> theta_out, double dt) {
  assert(on_off.size() == theta_out.size());
  const auto k = coeffs(unit, dt);
  std::vector<double> theta(on_off.size());
  if (theta.empty()) return theta;
  theta[0] = unit.initial_theta;
  for (std::size_t t = 0; t + 1 < theta.size(); ++t) theta[t + 1] = step(k, theta[t], theta_out[t], on_off[t]);
  return theta;
}

}  // namespace acdr::thermal
