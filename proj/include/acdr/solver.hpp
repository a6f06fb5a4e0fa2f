#pragma once

// Exact per-unit scheduling. Units only meet in the objective sum, so the
// cluster optimum is the collection of per-unit optima.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "acdr/accounting.hpp"
#include "acdr/baseline.hpp"
#include "acdr/error.hpp"
#include "acdr/lp_format.hpp"
#include "acdr/milp.hpp"
#include "acdr/parallel.hpp"
#include "acdr/robust.hpp"
#include "acdr/scenario.hpp"
#include "acdr/thermal.hpp"

namespace acdr::solver {

inline constexpr int kExhaustiveCap = 16;
inline constexpr double kTieTolerance = 1e-9;

/// One unit's cost view: minimize sum_t on_cost[t] u_t + penalty_weight |theta_t - theta_set|.
struct UnitSubproblem {
  AcUnit unit;
  int periods = 0;
  std::vector<double> on_cost;    // CNY if on in period t
  std::vector<double> theta_out;  // nominal forecast
  std::vector<double> lo, hi;     // comfort band per period (raw at period 1)
  thermal::ThermalCoeffs k;
  double penalty_weight = 0;      // beta * dt in hours, CNY per degC per period
};

inline UnitSubproblem make_subproblem(const Scenario& s, std::size_t g, const robust::ComfortBounds& b) {
  const AcUnit& unit = s.units.at(g);
  const int T = s.horizon.periods;
  UnitSubproblem p;
  p.unit = unit;
  p.periods = T;
  p.k = thermal::coeffs(unit, s.horizon.dt);
  p.penalty_weight = s.beta * s.horizon.dt_hours();
  p.theta_out = s.forecast.theta_out_pre;
  const double energy = s.horizon.dt / kJoulesPerKwh;
  for (int t = 0; t < T; ++t) {
    const auto i = static_cast<std::size_t>(t);
    p.on_cost.push_back(s.prices.price[i] * unit.rated_power * energy);
    p.lo.push_back(t == 0 ? unit.theta_min : b.lo[i]);
    p.hi.push_back(t == 0 ? unit.theta_max : b.hi[i]);
  }
  return p;
}

enum class Status { optimal, infeasible };

inline const char* to_string(Status s) { return s == Status::optimal ? "optimal" : "infeasible"; }

struct Incumbent {
  long long node = 0;
  double cost = 0;
};

struct SolveReport {
  Status status = Status::infeasible;
  double objective = 0;  // minimized unit cost, CNY
  long long nodes_explored = 0;
  double wall_time = 0;  // seconds
  std::vector<Incumbent> incumbent_history;
  int infeasible_period = 0;  // 1-based, set when infeasible
};

struct UnitSolution {
  std::vector<int> on_off;
  double cost = 0;
  SolveReport report;
};

/// Cost of a plan, or +inf if it leaves the band. Temperature bounds are
/// checked exactly; switching rules are not checked here.
inline double sequence_cost(const UnitSubproblem& p, std::span<const int> u) {
  double theta = p.unit.initial_theta;
  double c = 0;
  for (int t = 0; t < p.periods; ++t) {
    const auto i = static_cast<std::size_t>(t);
    if (theta < p.lo[i] || theta > p.hi[i]) return std::numeric_limits<double>::infinity();
    c += p.penalty_weight * std::abs(theta - p.unit.theta_set) + p.on_cost[i] * u[i];
    theta = thermal::step(p.k, theta, p.theta_out[i], u[i]);
  }
  return c;
}

namespace detail {

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// First period (1-based) at which the interval hull of reachable
/// temperatures leaves the band, ignoring switching rules; 0 if it never does.
inline int hull_infeasible_period(const UnitSubproblem& p) {
  double a = p.unit.initial_theta, b = a;
  for (int t = 0; t < p.periods; ++t) {
    const auto i = static_cast<std::size_t>(t);
    a = std::max(a, p.lo[i]);
    b = std::min(b, p.hi[i]);
    if (a > b) return t + 1;
    const double na = thermal::step(p.k, a, p.theta_out[i], 1);
    const double nb = thermal::step(p.k, b, p.theta_out[i], 0);
    a = na;
    b = nb;
  }
  return 0;
}

}  // namespace detail

/// Enumerates all 2^T plans in lexicographic order (off before on in early
/// periods); a later plan replaces the best only when cheaper by more than the
/// tie tolerance.
inline UnitSolution solve_exhaustive(const UnitSubproblem& p, int cap = kExhaustiveCap) {
  const int T = p.periods;
  if (T > cap)
    throw ConfigError("exhaustive solver is limited to " + std::to_string(cap) + " periods (got " +
                      std::to_string(T) + ")");
  detail::Clock clock;
  UnitSolution best;
  best.cost = std::numeric_limits<double>::infinity();
  std::vector<int> u(static_cast<std::size_t>(T));
  const std::uint64_t total = std::uint64_t{1} << T;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    for (int t = 0; t < T; ++t) u[static_cast<std::size_t>(t)] = static_cast<int>((mask >> (T - 1 - t)) & 1u);
    ++best.report.nodes_explored;
    if (milp::first_switching_violation(p.unit, u) != 0) continue;
    const double c = sequence_cost(p, u);
    if (c < best.cost - kTieTolerance) {
      best.cost = c;
      best.on_off = u;
      best.report.incumbent_history.push_back({best.report.nodes_explored, c});
    }
  }
  best.report.wall_time = clock.seconds();
  if (best.on_off.empty() && T > 0) {
    best.report.status = Status::infeasible;
    const int hull = detail::hull_infeasible_period(p);
    best.report.infeasible_period = hull > 0 ? hull : T;
    best.cost = 0;
    return best;
  }
  best.report.status = Status::optimal;
  best.report.objective = best.cost;
  return best;
}

/// Relaxed cost-to-go over a temperature grid: switching rules are dropped and
/// each cell takes the cheapest temperature it contains, so every entry is a
/// lower bound on the true remaining cost from any temperature in the cell.
class CostToGoBound {
 public:
  explicit CostToGoBound(const UnitSubproblem& p, int cells = 1200) : T_(p.periods), n_(cells) {
    lo_ = p.unit.initial_theta;
    hi_ = p.unit.initial_theta;
    for (int t = 0; t < T_; ++t) {
      const auto i = static_cast<std::size_t>(t);
      if (std::isfinite(p.lo[i])) lo_ = std::min(lo_, p.lo[i]);
      if (std::isfinite(p.hi[i])) hi_ = std::max(hi_, p.hi[i]);
    }
    lo_ -= kSlack;
    hi_ += kSlack;
    width_ = (hi_ - lo_) / n_;
    const double inf = std::numeric_limits<double>::infinity();
    table_.assign(static_cast<std::size_t>(T_ + 1), std::vector<double>(static_cast<std::size_t>(n_), inf));
    std::fill(table_[static_cast<std::size_t>(T_)].begin(), table_[static_cast<std::size_t>(T_)].end(), 0.0);
    for (int t = T_ - 1; t >= 0; --t) {
      const auto i = static_cast<std::size_t>(t);
      for (int c = 0; c < n_; ++c) {
        const double a = std::max(cell_lo(c), p.lo[i]);
        const double b = std::min(cell_hi(c), p.hi[i]);
        if (a > b) continue;
        const double set = p.unit.theta_set;
        const double dist = set < a ? a - set : set > b ? set - b : 0.0;
        double best = inf;
        for (int u = 0; u <= 1; ++u) {
          double future = 0;
          if (t + 1 < T_)
            future = range_min(t + 1, thermal::step(p.k, a, p.theta_out[i], u) - kDelta,
                               thermal::step(p.k, b, p.theta_out[i], u) + kDelta);
          best = std::min(best, p.on_cost[i] * u + future);
        }
        table_[i][static_cast<std::size_t>(c)] = p.penalty_weight * dist + best;
      }
    }
  }

  /// Lower bound on the cost of periods t..T-1 starting from temperature theta at t.
  double at(int t, double theta) const {
    if (t >= T_) return 0.0;
    return range_min(t, theta - kDelta, theta + kDelta);
  }

 private:
  static constexpr double kDelta = 1e-9;
  static constexpr double kSlack = 1e-6;

  double cell_lo(int c) const { return lo_ + c * width_; }
  double cell_hi(int c) const { return c + 1 == n_ ? hi_ : lo_ + (c + 1) * width_; }

  double range_min(int t, double a, double b) const {
    if (b < lo_ || a > hi_) return std::numeric_limits<double>::infinity();
    const int ca = std::clamp(static_cast<int>(std::floor((a - lo_) / width_)) - 1, 0, n_ - 1);
    const int cb = std::clamp(static_cast<int>(std::floor((b - lo_) / width_)) + 1, 0, n_ - 1);
    const auto& row = table_[static_cast<std::size_t>(t)];
    double m = std::numeric_limits<double>::infinity();
    for (int c = ca; c <= cb; ++c) m = std::min(m, row[static_cast<std::size_t>(c)]);
    return m;
  }

  int T_;
  int n_;
  double lo_ = 0, hi_ = 0, width_ = 1;
  std::vector<std::vector<double>> table_;
};

namespace detail {

class BranchAndBound {
 public:
  explicit BranchAndBound(const UnitSubproblem& p) : p_(p), bound_(p), u_(static_cast<std::size_t>(p.periods)) {}

  UnitSolution run() {
    Clock clock;
    const int u0 = p_.unit.initial_state == UnitState::on ? 1 : 0;
    const int need = u0 ? p_.unit.min_up_periods : p_.unit.min_down_periods;
    const int hold = std::max(0, need - p_.unit.initial_dwell_periods);
    const double theta = p_.unit.initial_theta;
    if (p_.periods > 0 && theta >= p_.lo[0] && theta <= p_.hi[0] && bound_.at(0, theta) < best_cost_)
      dfs(0, theta, u0, hold, 0.0);
    sol_.report.wall_time = clock.seconds();
    if (p_.periods > 0 && sol_.on_off.empty()) {
      sol_.report.status = Status::infeasible;
      const int hull = hull_infeasible_period(p_);
      sol_.report.infeasible_period = hull > 0 ? hull : deepest_ + 1;
      return sol_;
    }
    sol_.report.status = Status::optimal;
    sol_.cost = best_cost_ == std::numeric_limits<double>::infinity() ? 0.0 : best_cost_;
    sol_.report.objective = sol_.cost;
    return sol_;
  }

 private:
  static constexpr double kPruneSlack = 1e-10;

  struct Child {
    int u;
    double theta;
    double key;
  };

  /// theta is the temperature at period t and lies in the band; acc covers periods before t.
  void dfs(int t, double theta, int prev, int lock, double acc) {
    ++sol_.report.nodes_explored;
    deepest_ = std::max(deepest_, t);
    const auto i = static_cast<std::size_t>(t);
    const double here = acc + p_.penalty_weight * std::abs(theta - p_.unit.theta_set);
    Child kids[2];
    int n = 0;
    for (int u = 0; u <= 1; ++u) {
      if (lock > 0 && u != prev) continue;
      const double next = thermal::step(p_.k, theta, p_.theta_out[i], u);
      double lb = 0;
      if (t + 1 < p_.periods) {
        if (next < p_.lo[i + 1] || next > p_.hi[i + 1]) continue;
        lb = bound_.at(t + 1, next);
      }
      kids[n++] = {u, next, p_.on_cost[i] * u + lb};
    }
    if (n == 2 && kids[1].key < kids[0].key) std::swap(kids[0], kids[1]);
    for (int c = 0; c < n; ++c) {
      const Child& k = kids[c];
      if (here + k.key >= best_cost_ - kPruneSlack) continue;
      u_[i] = k.u;
      const double acc_next = here + p_.on_cost[i] * k.u;
      if (t + 1 == p_.periods) {
        if (acc_next < best_cost_) {
          best_cost_ = acc_next;
          sol_.on_off = u_;
          sol_.report.incumbent_history.push_back({sol_.report.nodes_explored, acc_next});
        }
        continue;
      }
      const int need = k.u ? p_.unit.min_up_periods : p_.unit.min_down_periods;
      const int lock_next = k.u != prev ? need - 1 : std::max(0, lock - 1);
      dfs(t + 1, k.theta, k.u, lock_next, acc_next);
    }
  }

  const UnitSubproblem& p_;
  CostToGoBound bound_;
  std::vector<int> u_;
  UnitSolution sol_;
  double best_cost_ = std::numeric_limits<double>::infinity();
  int deepest_ = 0;
};

}  // namespace detail

/// Depth-first branch-and-bound over periods. Node state is (period,
/// temperature, previous decision, remaining dwell lock, accumulated cost).
inline UnitSolution solve_bnb(const UnitSubproblem& p) { return detail::BranchAndBound(p).run(); }

enum class Method { bnb, exhaustive };

inline Method parse_method(const std::string& s) {
  if (s == "bnb") return Method::bnb;
  if (s == "exhaustive") return Method::exhaustive;
  throw ConfigError("unknown solver '" + s + "' (expected bnb or exhaustive)");
}

struct ClusterOptions {
  Method method = Method::bnb;
  unsigned threads = 1;
  int exhaustive_cap = kExhaustiveCap;
};

struct ClusterSolution {
  Schedule schedule;
  CostReport cost;
  std::vector<SolveReport> reports;  // one per unit, scenario order
};

/// Solves every unit independently and assembles the cluster schedule in unit order.
inline ClusterSolution solve_cluster(const Scenario& s, const BaselineResult& baseline,
                                     const std::vector<robust::ComfortBounds>& bounds, const ClusterOptions& opt = {}) {
  const std::size_t G = s.units.size();
  if (bounds.size() != G) throw ConfigError("need one comfort band per unit");
  if (opt.method == Method::exhaustive && s.horizon.periods > opt.exhaustive_cap)
    throw ConfigError("exhaustive solver is limited to " + std::to_string(opt.exhaustive_cap) +
                      " periods (got " + std::to_string(s.horizon.periods) + ")");
  std::vector<UnitSolution> sols(G);
  parallel_for(G, opt.threads, [&](std::size_t g) {
    const auto sub = make_subproblem(s, g, bounds[g]);
    sols[g] = opt.method == Method::bnb ? solve_bnb(sub) : solve_exhaustive(sub, opt.exhaustive_cap);
  });
  std::vector<std::string> bad;
  for (std::size_t g = 0; g < G; ++g)
    if (sols[g].report.status == Status::infeasible)
      bad.push_back("unit " + std::to_string(s.units[g].id) + " (period " +
                    std::to_string(sols[g].report.infeasible_period) + ")");
  if (!bad.empty()) {
    std::string msg = "cluster infeasible:";
    for (const auto& b : bad) msg += " " + b;
    throw InfeasibleError(msg);
  }
  ClusterSolution out;
  std::vector<std::vector<int>> on_off;
  on_off.reserve(G);
  for (auto& sol : sols) {
    on_off.push_back(std::move(sol.on_off));
    out.reports.push_back(std::move(sol.report));
  }
  out.schedule = milp::make_schedule(s, baseline, std::move(on_off));
  out.cost = cost_report(baseline, out.schedule, s);
  return out;
}

/// `name value` lines; blank lines and lines starting with '#' are ignored.
inline std::vector<std::pair<std::string, double>> parse_solution_text(const std::string& text,
                                                                       const std::string& source = "<solution>") {
  std::vector<std::pair<std::string, double>> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string name, value, extra;
    ls >> name >> value;
    if (value.empty() || (ls >> extra))
      throw ExternalSolverError(source + ":" + std::to_string(lineno) + ": expected 'name value'");
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size())
      throw ExternalSolverError(source + ":" + std::to_string(lineno) + ": value '" + value + "' is not a number");
    out.emplace_back(name, x);
  }
  return out;
}

/// Checks a full assignment against the model and returns the on/off plan.
inline std::vector<std::vector<int>> schedule_from_solution(const milp::MilpModel& m,
                                                            const std::vector<std::pair<std::string, double>>& values) {
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < m.variables.size(); ++i) index.emplace(m.variables[i].name, static_cast<int>(i));
  std::vector<double> x(m.variables.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& [name, value] : values) {
    auto it = index.find(name);
    if (it == index.end()) throw ExternalSolverError("solution names unknown variable " + name);
    x[static_cast<std::size_t>(it->second)] = value;
  }
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::isnan(x[i])) throw ExternalSolverError("solution is missing variable " + m.variables[i].name);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& v = m.variables[i];
    if (v.kind == milp::VarKind::binary && std::abs(x[i] - std::round(x[i])) > 1e-6) {
      std::ostringstream os;
      os << "solution value " << x[i] << " for binary " << v.name << " is not integral";
      throw ExternalSolverError(os.str());
    }
  }
  const auto bad = milp::violations(m, x);
  if (!bad.empty()) {
    std::string msg = "solution violates " + std::to_string(bad.size()) + " constraints:";
    for (std::size_t i = 0; i < bad.size() && i < 10; ++i) msg += " " + bad[i];
    throw ExternalSolverError(msg);
  }
  std::vector<std::vector<int>> on_off;
  for (const auto& ix : m.units) {
    std::vector<int> row;
    for (int var : ix.u) row.push_back(static_cast<int>(std::lround(x[static_cast<std::size_t>(var)])));
    on_off.push_back(std::move(row));
  }
  return on_off;
}

struct ExternalResult {
  Schedule schedule;
  CostReport cost;
  SolveReport report;
};

/// Writes `model.lp` into workdir, runs `command model.lp solution.txt` and
/// reads the solution back.
inline ExternalResult solve_external(const milp::MilpModel& m, const Scenario& s, const BaselineResult& baseline,
                                     const std::string& command, const std::filesystem::path& workdir) {
  if (command.empty()) throw ExternalSolverError("external solver not configured (pass --external-cmd)");
  detail::Clock clock;
  std::filesystem::create_directories(workdir);
  const auto lp = workdir / "model.lp";
  const auto sol = workdir / "solution.txt";
  std::filesystem::remove(sol);
  milp::export_lp(m, lp);
  const std::string cmd = command + " \"" + lp.string() + "\" \"" + sol.string() + "\"";
  const int rc = std::system(cmd.c_str());
  if (rc != 0) {
    std::string msg = "external solver '" + command + "' failed with status " + std::to_string(rc);
    if (rc == 127 * 256 || rc == 127) msg += " (command not found)";
    throw ExternalSolverError(msg);
  }
  std::ifstream in(sol);
  if (!in) throw ExternalSolverError("external solver produced no solution file " + sol.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  auto on_off = schedule_from_solution(m, parse_solution_text(buf.str(), sol.string()));
  if (on_off.size() != s.units.size()) throw ExternalSolverError("solution does not cover the scenario's units");
  ExternalResult r;
  r.schedule = milp::make_schedule(s, baseline, std::move(on_off));
  r.cost = cost_report(baseline, r.schedule, s);
  r.report.status = Status::optimal;
  r.report.objective = r.schedule.objective;
  r.report.wall_time = clock.seconds();
  return r;
}

}  // namespace acdr::solver
