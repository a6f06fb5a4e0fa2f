#pragma once

// Deterministic-equivalent mixed-integer linear model of the aggregator's
// problem after robust tightening, plus schedule validation and evaluation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "acdr/accounting.hpp"
#include "acdr/baseline.hpp"
#include "acdr/error.hpp"
#include "acdr/robust.hpp"
#include "acdr/scenario.hpp"
#include "acdr/thermal.hpp"

namespace acdr::milp {

enum class VarKind { binary, continuous };
enum class Relation { le, eq, ge };
enum class Sense { maximize, minimize };

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Variable {
  std::string name;
  VarKind kind = VarKind::continuous;
  double lower = 0;
  double upper = kInf;
};

struct Term {
  int var = 0;
  double coef = 0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Relation rel = Relation::le;
  double rhs = 0;
};

struct Objective {
  Sense sense = Sense::maximize;
  std::vector<Term> terms;
  double constant = 0;
};

/// Variable indices of one unit, each of length T (period t at index t-1).
struct UnitIndex {
  int unit_id = 0;
  std::vector<int> u, y, v, th, d;
};

struct MilpModel {
  std::vector<Variable> variables;
  std::vector<Constraint> constraints;
  Objective objective;
  std::vector<UnitIndex> units;
  int gamma = -1;
  int periods = 0;

  int add_variable(std::string name, VarKind kind, double lower, double upper) {
    variables.push_back({std::move(name), kind, lower, upper});
    return static_cast<int>(variables.size()) - 1;
  }

  std::optional<int> find(const std::string& name) const {
    for (std::size_t i = 0; i < variables.size(); ++i)
      if (variables[i].name == name) return static_cast<int>(i);
    return std::nullopt;
  }
};

inline std::string var_name(const char* prefix, int unit_id, int t) {
  return std::string(prefix) + "_g" + std::to_string(unit_id) + "_t" + std::to_string(t);
}

/// Throws ValidationError on dangling references, bad binary bounds or duplicate names.
inline void validate(const MilpModel& m) {
  std::set<std::string> names;
  for (const auto& v : m.variables) {
    if (!names.insert(v.name).second) throw ValidationError("duplicate variable name " + v.name);
    if (v.kind == VarKind::binary && (v.lower != 0 || v.upper != 1))
      throw ValidationError("binary variable " + v.name + " must have bounds [0, 1]");
  }
  const int n = static_cast<int>(m.variables.size());
  auto check_terms = [&](const std::vector<Term>& terms, const std::string& where) {
    for (const auto& t : terms)
      if (t.var < 0 || t.var >= n) throw ValidationError(where + " references an undeclared variable");
  };
  for (const auto& c : m.constraints) check_terms(c.terms, "constraint " + c.name);
  check_terms(m.objective.terms, "objective");
}

/// Linear model of the cluster. `bounds[g]` holds the (tightened) comfort band
/// of unit g; period 1 keeps the raw band.
inline MilpModel build_model(const Scenario& s, const BaselineResult& baseline,
                             const std::vector<robust::ComfortBounds>& bounds) {
  const int G = static_cast<int>(s.units.size());
  const int T = s.horizon.periods;
  if (baseline.mean_power.rows != G || baseline.mean_power.cols != T)
    throw ConfigError("baseline dimensions do not match the scenario");
  if (static_cast<int>(bounds.size()) != G) throw ConfigError("need one comfort band per unit");

  const double energy = s.horizon.dt / kJoulesPerKwh;  // W -> kWh over one period
  MilpModel m;
  m.periods = T;
  m.objective.sense = Sense::maximize;

  for (int g = 0; g < G; ++g) {
    const AcUnit& unit = s.units[static_cast<std::size_t>(g)];
    const auto& b = bounds[static_cast<std::size_t>(g)];
    if (static_cast<int>(b.lo.size()) != T || static_cast<int>(b.hi.size()) != T)
      throw ConfigError("comfort band length does not match horizon");
    UnitIndex ix;
    ix.unit_id = unit.id;
    for (int t = 1; t <= T; ++t) ix.u.push_back(m.add_variable(var_name("u", unit.id, t), VarKind::binary, 0, 1));
    for (int t = 1; t <= T; ++t) ix.y.push_back(m.add_variable(var_name("y", unit.id, t), VarKind::binary, 0, 1));
    for (int t = 1; t <= T; ++t) ix.v.push_back(m.add_variable(var_name("v", unit.id, t), VarKind::binary, 0, 1));
    for (int t = 1; t <= T; ++t) {
      const auto k = static_cast<std::size_t>(t - 1);
      const double lo = t == 1 ? unit.theta_min : b.lo[k];
      const double hi = t == 1 ? unit.theta_max : b.hi[k];
      ix.th.push_back(m.add_variable(var_name("th", unit.id, t), VarKind::continuous, lo, hi));
    }
    for (int t = 1; t <= T; ++t) ix.d.push_back(m.add_variable(var_name("d", unit.id, t), VarKind::continuous, 0, kInf));
    m.units.push_back(std::move(ix));
  }
  m.gamma = m.add_variable("gamma", VarKind::continuous, 0, kInf);

  auto add = [&](std::string name, std::vector<Term> terms, Relation rel, double rhs) {
    m.constraints.push_back({std::move(name), std::move(terms), rel, rhs});
  };

  for (int g = 0; g < G; ++g) {
    const AcUnit& unit = s.units[static_cast<std::size_t>(g)];
    const auto& ix = m.units[static_cast<std::size_t>(g)];
    const auto k = thermal::coeffs(unit, s.horizon.dt);
    const int id = unit.id;
    const int u0 = unit.initial_state == UnitState::on ? 1 : 0;

    add(var_name("init", id, 1), {{ix.th[0], 1.0}}, Relation::eq, unit.initial_theta);
    // nominal dynamics: th_{t+1} - alpha th_t + (1-alpha) gain u_t = (1-alpha) theta_out_t
    for (int t = 1; t < T; ++t) {
      const auto i = static_cast<std::size_t>(t - 1);
      add(var_name("dyn", id, t),
          {{ix.th[i + 1], 1.0}, {ix.th[i], -k.alpha}, {ix.u[i], (1.0 - k.alpha) * k.gain}}, Relation::eq,
          (1.0 - k.alpha) * s.forecast.theta_out_pre[i]);
    }
    // |th - theta_set| <= d
    for (int t = 1; t <= T; ++t) {
      const auto i = static_cast<std::size_t>(t - 1);
      add(var_name("absp", id, t), {{ix.d[i], 1.0}, {ix.th[i], -1.0}}, Relation::ge, -unit.theta_set);
    }
    for (int t = 1; t <= T; ++t) {
      const auto i = static_cast<std::size_t>(t - 1);
      add(var_name("absn", id, t), {{ix.d[i], 1.0}, {ix.th[i], 1.0}}, Relation::ge, unit.theta_set);
    }
    // y_t - v_t = u_t - u_{t-1}
    for (int t = 1; t <= T; ++t) {
      const auto i = static_cast<std::size_t>(t - 1);
      std::vector<Term> terms{{ix.y[i], 1.0}, {ix.v[i], -1.0}, {ix.u[i], -1.0}};
      double rhs = 0;
      if (t == 1)
        rhs = -u0;
      else
        terms.push_back({ix.u[i - 1], 1.0});
      add(var_name("sw", id, t), std::move(terms), Relation::eq, rhs);
    }
    for (int t = 1; t <= T; ++t) {
      const auto i = static_cast<std::size_t>(t - 1);
      add(var_name("yv", id, t), {{ix.y[i], 1.0}, {ix.v[i], 1.0}}, Relation::le, 1.0);
    }
    // minimum up / down windows, clipped at period 1
    for (int t = 1; t <= T; ++t) {
      std::vector<Term> terms;
      for (int q = std::max(1, t - unit.min_up_periods + 1); q <= t; ++q)
        terms.push_back({ix.y[static_cast<std::size_t>(q - 1)], 1.0});
      terms.push_back({ix.u[static_cast<std::size_t>(t - 1)], -1.0});
      add(var_name("up", id, t), std::move(terms), Relation::le, 0.0);
    }
    for (int t = 1; t <= T; ++t) {
      std::vector<Term> terms;
      for (int q = std::max(1, t - unit.min_down_periods + 1); q <= t; ++q)
        terms.push_back({ix.v[static_cast<std::size_t>(q - 1)], 1.0});
      terms.push_back({ix.u[static_cast<std::size_t>(t - 1)], 1.0});
      add(var_name("dn", id, t), std::move(terms), Relation::le, 1.0);
    }
    // remaining part of the initial dwell requirement
    const int need = u0 ? unit.min_up_periods : unit.min_down_periods;
    const int hold = std::min(T, std::max(0, need - unit.initial_dwell_periods));
    for (int t = 1; t <= hold; ++t)
      add(var_name("hold", id, t), {{ix.u[static_cast<std::size_t>(t - 1)], 1.0}}, Relation::eq, u0);
  }

  // gamma = beta * dt_hours * sum d
  {
    std::vector<Term> terms{{m.gamma, 1.0}};
    const double w = s.beta * s.horizon.dt_hours();
    for (const auto& ix : m.units)
      for (int d : ix.d) terms.push_back({d, -w});
    add("gamma_def", std::move(terms), Relation::eq, 0.0);
  }

  // objective: sum (P_ori - P_rated u) price dt - gamma
  for (int g = 0; g < G; ++g) {
    const AcUnit& unit = s.units[static_cast<std::size_t>(g)];
    const auto& ix = m.units[static_cast<std::size_t>(g)];
    for (int t = 0; t < T; ++t) {
      const double price = s.prices.price[static_cast<std::size_t>(t)];
      m.objective.constant += baseline.mean_power(g, t) * price * energy;
      m.objective.terms.push_back({ix.u[static_cast<std::size_t>(t)], -unit.rated_power * price * energy});
    }
  }
  m.objective.terms.push_back({m.gamma, -1.0});
  return m;
}

/// Robust bands for every unit at the scenario's epsilon and norm.
inline std::vector<robust::ComfortBounds> cluster_bounds(const Scenario& s) {
  std::vector<robust::ComfortBounds> out;
  out.reserve(s.units.size());
  for (const auto& u : s.units) out.push_back(robust::robust_bounds(u, s.horizon, s.forecast));
  return out;
}

inline double evaluate_objective(const MilpModel& m, std::span<const double> x) {
  double v = m.objective.constant;
  for (const auto& t : m.objective.terms) v += t.coef * x[static_cast<std::size_t>(t.var)];
  return v;
}

/// Names of violated constraints, bounds and integrality requirements.
inline std::vector<std::string> violations(const MilpModel& m, std::span<const double> x, double tol = 1e-6) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < m.variables.size(); ++i) {
    const auto& v = m.variables[i];
    const double val = x[i];
    if (!std::isfinite(val)) {
      out.push_back(v.name + " is not finite");
      continue;
    }
    if (val < v.lower - tol || val > v.upper + tol) out.push_back("bound " + v.name);
    if (v.kind == VarKind::binary && std::abs(val - std::round(val)) > tol) out.push_back("integrality " + v.name);
  }
  for (const auto& c : m.constraints) {
    double lhs = 0;
    for (const auto& t : c.terms) lhs += t.coef * x[static_cast<std::size_t>(t.var)];
    const double scale = std::max(1.0, std::abs(c.rhs));
    const bool ok = c.rel == Relation::le   ? lhs <= c.rhs + tol * scale
                    : c.rel == Relation::ge ? lhs >= c.rhs - tol * scale
                                            : std::abs(lhs - c.rhs) <= tol * scale;
    if (!ok) out.push_back(c.name);
  }
  return out;
}

/// Rows whose variables belong to more than one unit. The gamma definition is
/// the only expected entry: it aggregates penalties for the objective.
inline std::vector<std::string> coupled_rows(const MilpModel& m) {
  std::vector<int> owner(m.variables.size(), -1);
  for (std::size_t g = 0; g < m.units.size(); ++g)
    for (const auto* list : {&m.units[g].u, &m.units[g].y, &m.units[g].v, &m.units[g].th, &m.units[g].d})
      for (int i : *list) owner[static_cast<std::size_t>(i)] = static_cast<int>(g);
  std::vector<std::string> out;
  for (const auto& c : m.constraints) {
    std::set<int> seen;
    for (const auto& t : c.terms) {
      const int o = owner[static_cast<std::size_t>(t.var)];
      if (o >= 0) seen.insert(o);
    }
    if (seen.size() > 1) out.push_back(c.name);
  }
  return out;
}

/// Full variable assignment implied by a schedule (switch indicators, nominal
/// temperatures, absolute deviations and gamma).
inline std::vector<double> assignment_from_schedule(const MilpModel& m, const Schedule& sched, const Scenario& s) {
  std::vector<double> x(m.variables.size(), 0.0);
  double dev = 0;
  for (std::size_t g = 0; g < m.units.size(); ++g) {
    const auto& ix = m.units[g];
    const AcUnit& unit = s.units[g];
    const auto& u = sched.on_off[g];
    const auto theta = thermal::simulate_trajectory(unit, u, s.forecast.theta_out_pre, s.horizon.dt);
    int prev = unit.initial_state == UnitState::on ? 1 : 0;
    for (std::size_t t = 0; t < u.size(); ++t) {
      x[static_cast<std::size_t>(ix.u[t])] = u[t];
      x[static_cast<std::size_t>(ix.y[t])] = u[t] > prev ? 1 : 0;
      x[static_cast<std::size_t>(ix.v[t])] = u[t] < prev ? 1 : 0;
      x[static_cast<std::size_t>(ix.th[t])] = theta[t];
      const double d = std::abs(theta[t] - unit.theta_set);
      x[static_cast<std::size_t>(ix.d[t])] = d;
      dev += d;
      prev = u[t];
    }
  }
  x[static_cast<std::size_t>(m.gamma)] = s.beta * dev * s.horizon.dt_hours();
  return x;
}

/// Minimum up/down rules as window sums over switch indicators, with the
/// initial dwell honoured. Returns the 1-based period of the first violation or 0.
inline int first_switching_violation(const AcUnit& unit, std::span<const int> u) {
  const int T = static_cast<int>(u.size());
  const int u0 = unit.initial_state == UnitState::on ? 1 : 0;
  std::vector<int> y(static_cast<std::size_t>(T)), v(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    const int prev = t == 0 ? u0 : u[static_cast<std::size_t>(t - 1)];
    y[static_cast<std::size_t>(t)] = u[static_cast<std::size_t>(t)] > prev;
    v[static_cast<std::size_t>(t)] = u[static_cast<std::size_t>(t)] < prev;
  }
  const int need = u0 ? unit.min_up_periods : unit.min_down_periods;
  const int hold = std::max(0, need - unit.initial_dwell_periods);
  for (int t = 0; t < T; ++t) {
    int ys = 0, vs = 0;
    for (int q = std::max(0, t - unit.min_up_periods + 1); q <= t; ++q) ys += y[static_cast<std::size_t>(q)];
    for (int q = std::max(0, t - unit.min_down_periods + 1); q <= t; ++q) vs += v[static_cast<std::size_t>(q)];
    const int ut = u[static_cast<std::size_t>(t)];
    if (ys > ut || vs > 1 - ut) return t + 1;
    if (t < hold && ut != u0) return t + 1;
  }
  return 0;
}

/// Checks power, nominal dynamics, comfort bands (raw, or the given tightened
/// bands) and switching rules. Throws ValidationError listing every problem.
inline void validate_schedule(const Schedule& sched, const Scenario& s,
                              const std::vector<robust::ComfortBounds>* bounds = nullptr, double tol = 1e-9) {
  std::vector<std::string> problems;
  const int G = static_cast<int>(s.units.size());
  const int T = s.horizon.periods;
  if (sched.units() != G || sched.periods() != T || sched.power.rows != G || sched.power.cols != T ||
      sched.theta_nominal.rows != G || sched.theta_nominal.cols != T)
    throw ValidationError("schedule dimensions do not match the scenario");
  for (int g = 0; g < G; ++g) {
    const AcUnit& unit = s.units[static_cast<std::size_t>(g)];
    const auto& u = sched.on_off[static_cast<std::size_t>(g)];
    const std::string who = "unit " + std::to_string(unit.id);
    bool binary = true;
    for (int t = 0; t < T; ++t) {
      const int ut = u[static_cast<std::size_t>(t)];
      if (ut != 0 && ut != 1) {
        problems.push_back(who + " period " + std::to_string(t + 1) + ": on/off value is not binary");
        binary = false;
      } else if (sched.power(g, t) != ut * unit.rated_power) {
        problems.push_back(who + " period " + std::to_string(t + 1) + ": power != u * rated_power");
      }
    }
    if (!binary) continue;
    const auto theta = thermal::simulate_trajectory(unit, u, s.forecast.theta_out_pre, s.horizon.dt);
    for (int t = 0; t < T; ++t) {
      const double th = sched.theta_nominal(g, t);
      if (std::abs(th - theta[static_cast<std::size_t>(t)]) > tol)
        problems.push_back(who + " period " + std::to_string(t + 1) + ": temperature inconsistent with dynamics");
      double lo = unit.theta_min, hi = unit.theta_max;
      if (bounds && t > 0) {
        lo = (*bounds)[static_cast<std::size_t>(g)].lo[static_cast<std::size_t>(t)];
        hi = (*bounds)[static_cast<std::size_t>(g)].hi[static_cast<std::size_t>(t)];
      }
      if (th < lo - tol || th > hi + tol)
        problems.push_back(who + " period " + std::to_string(t + 1) + ": temperature outside comfort band");
    }
    if (const int p = first_switching_violation(unit, u))
      problems.push_back(who + " period " + std::to_string(p) + ": minimum up/down time violated");
  }
  if (!problems.empty()) {
    std::ostringstream os;
    os << "schedule infeasible (" << problems.size() << " violations):";
    for (std::size_t i = 0; i < problems.size() && i < 20; ++i) os << "\n  " << problems[i];
    throw ValidationError(os.str());
  }
}

/// Fills power, nominal temperatures, gamma and the revenue objective for a
/// given on/off plan.
inline Schedule make_schedule(const Scenario& s, const BaselineResult& baseline, std::vector<std::vector<int>> on_off) {
  const int G = static_cast<int>(s.units.size());
  const int T = s.horizon.periods;
  Schedule sched;
  sched.on_off = std::move(on_off);
  sched.power = Grid(G, T);
  sched.theta_nominal = Grid(G, T);
  for (int g = 0; g < G; ++g) {
    const AcUnit& unit = s.units[static_cast<std::size_t>(g)];
    sched.unit_ids.push_back(unit.id);
    const auto& u = sched.on_off[static_cast<std::size_t>(g)];
    const auto theta = thermal::simulate_trajectory(unit, u, s.forecast.theta_out_pre, s.horizon.dt);
    for (int t = 0; t < T; ++t) {
      sched.power(g, t) = u[static_cast<std::size_t>(t)] * unit.rated_power;
      sched.theta_nominal(g, t) = theta[static_cast<std::size_t>(t)];
    }
  }
  const auto r = cost_report(baseline, sched, s);
  sched.gamma = r.penalty_cost;
  sched.objective = r.aggregator_revenue;
  return sched;
}

/// Validated settlement of a schedule against the baseline.
inline CostReport evaluate_schedule(const Schedule& sched, const Scenario& s, const BaselineResult& baseline,
                                    const std::vector<robust::ComfortBounds>* bounds = nullptr) {
  validate_schedule(sched, s, bounds);
  return cost_report(baseline, sched, s);
}

}  // namespace acdr::milp
