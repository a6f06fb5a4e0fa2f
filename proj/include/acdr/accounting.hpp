#pragma once

// Settlement arithmetic shared by the model evaluator and the report writers.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "acdr/baseline.hpp"
#include "acdr/scenario.hpp"

namespace acdr {

/// Optimized plan for the whole cluster. Row g belongs to scenario.units[g].
struct Schedule {
  std::vector<int> unit_ids;
  std::vector<std::vector<int>> on_off;  // G x T, 0/1
  Grid power;                            // W
  Grid theta_nominal;                    // degC under the nominal forecast
  double gamma = 0;                      // comfort penalty, CNY
  double objective = 0;                  // aggregator revenue, CNY

  int units() const { return static_cast<int>(on_off.size()); }
  int periods() const { return on_off.empty() ? 0 : static_cast<int>(on_off.front().size()); }
};

struct CostReport {
  double baseline_electricity_cost = 0;    // CNY
  double controlled_electricity_cost = 0;  // CNY
  double penalty_cost = 0;                 // CNY
  double controlled_total = 0;
  double aggregator_revenue = 0;
};

/// Electricity cost of a power trajectory (W) at the scenario prices.
inline double electricity_cost(std::span<const double> power, const Scenario& s) {
  double c = 0;
  for (std::size_t t = 0; t < power.size(); ++t) c += power[t] * s.prices.price[t];
  return c * s.horizon.dt / kJoulesPerKwh;
}

/// beta * sum_t |theta_t - theta_set| * dt in hours.
inline double comfort_penalty(std::span<const double> theta, double theta_set, const Scenario& s) {
  double dev = 0;
  for (double th : theta) dev += std::abs(th - theta_set);
  return s.beta * dev * s.horizon.dt_hours();
}

inline CostReport cost_report(const BaselineResult& baseline, const Schedule& schedule, const Scenario& s) {
  CostReport r;
  for (int g = 0; g < schedule.units(); ++g) {
    r.baseline_electricity_cost += electricity_cost(baseline.mean_power.row(g), s);
    r.controlled_electricity_cost += electricity_cost(schedule.power.row(g), s);
    r.penalty_cost += comfort_penalty(schedule.theta_nominal.row(g), s.units[static_cast<std::size_t>(g)].theta_set, s);
  }
  r.controlled_total = r.controlled_electricity_cost + r.penalty_cost;
  r.aggregator_revenue = r.baseline_electricity_cost - r.controlled_total;
  return r;
}

/// Integer-cent view used for serialization: totals are formed from the rounded
/// parts so the printed columns add up exactly.
struct CostReportCents {
  long long baseline_electricity = 0;
  long long controlled_electricity = 0;
  long long penalty = 0;
  long long controlled_total = 0;
  long long revenue = 0;
};

inline long long to_cents(double cny) { return std::llround(cny * 100.0); }

inline CostReportCents in_cents(const CostReport& r) {
  CostReportCents c;
  c.baseline_electricity = to_cents(r.baseline_electricity_cost);
  c.controlled_electricity = to_cents(r.controlled_electricity_cost);
  c.penalty = to_cents(r.penalty_cost);
  c.controlled_total = c.controlled_electricity + c.penalty;
  c.revenue = c.baseline_electricity - c.controlled_total;
  return c;
}

}  // namespace acdr
