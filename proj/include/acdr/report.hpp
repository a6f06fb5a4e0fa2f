#pragma once

// Settlement, penalty sensitivity and peak-shaving summaries, and the CSV
// files the command-line tool writes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "acdr/accounting.hpp"
#include "acdr/baseline.hpp"
#include "acdr/error.hpp"
#include "acdr/lp_format.hpp"
#include "acdr/parallel.hpp"
#include "acdr/scenario.hpp"
#include "acdr/solver.hpp"

namespace acdr::report {

inline CostReport settle(const BaselineResult& baseline, const Schedule& schedule, const Scenario& s) {
  if (baseline.mean_power.rows != schedule.units() || baseline.mean_power.cols != schedule.periods() ||
      schedule.units() != static_cast<int>(s.units.size()) || schedule.periods() != s.horizon.periods)
    throw ConfigError("baseline, schedule and scenario dimensions differ");
  return cost_report(baseline, schedule, s);
}

/// Half-open range of 0-based periods [first, last).
struct PeriodWindow {
  int first = 0;
  int last = 0;

  int size() const { return last - first; }
};

/// The first maximal run of periods at the highest price.
inline PeriodWindow peak_window_from_prices(const std::vector<double>& price) {
  if (price.empty()) return {};
  const double top = *std::max_element(price.begin(), price.end());
  int first = 0;
  while (price[static_cast<std::size_t>(first)] != top) ++first;
  int last = first;
  while (last < static_cast<int>(price.size()) && price[static_cast<std::size_t>(last)] == top) ++last;
  return {first, last};
}

/// Energy (kWh) drawn by all rows of `power` inside the window.
inline double window_energy(const Grid& power, PeriodWindow w, double dt) {
  double e = 0;
  for (int g = 0; g < power.rows; ++g)
    for (int t = w.first; t < w.last; ++t) e += power(g, t);
  return e * dt / kJoulesPerKwh;
}

/// 1 - controlled / baseline energy in the window; 1 when nothing is drawn.
inline double peak_shaving_summary(const BaselineResult& baseline, const Schedule& schedule, PeriodWindow w,
                                   double dt) {
  if (w.first < 0 || w.last > schedule.periods() || w.first > w.last) throw ConfigError("peak window outside horizon");
  const double controlled = window_energy(schedule.power, w, dt);
  if (controlled == 0) return 1.0;
  const double base = window_energy(baseline.mean_power, w, dt);
  if (base <= 0) return 0.0;
  return 1.0 - controlled / base;
}

struct SensitivityRow {
  double beta = 0;
  double revenue = 0;
  double penalty = 0;
  double peak_power_reduction_fraction = 0;
};

/// Re-solves the cluster for each penalty coefficient; baseline and comfort
/// bands are shared since neither depends on beta. Rows are sorted by beta.
inline std::vector<SensitivityRow> sweep_beta(const Scenario& s, const BaselineResult& baseline,
                                              const std::vector<robust::ComfortBounds>& bounds,
                                              const std::vector<double>& betas, unsigned threads = 1) {
  if (betas.empty()) throw ConfigError("beta list is empty");
  for (double b : betas)
    if (!(b >= 0)) throw ConfigError("beta values must be >= 0");
  std::vector<SensitivityRow> rows(betas.size());
  const auto window = peak_window_from_prices(s.prices.price);
  parallel_for(betas.size(), threads, [&](std::size_t i) {
    Scenario sb = s;
    sb.beta = betas[i];
    const auto sol = solver::solve_cluster(sb, baseline, bounds);
    rows[i] = {betas[i], sol.cost.aggregator_revenue, sol.cost.penalty_cost,
               std::clamp(peak_shaving_summary(baseline, sol.schedule, window, s.horizon.dt), 0.0, 1.0)};
  });
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.beta < b.beta; });
  return rows;
}

// ---- CSV output -----------------------------------------------------------

inline std::string cents_text(long long cents) {
  const bool neg = cents < 0;
  const long long a = neg ? -cents : cents;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", neg ? "-" : "", a / 100, a % 100);
  return buf;
}

inline std::string cny_text(double cny) { return cents_text(to_cents(cny)); }

/// "HH:MM" label of a period start.
inline std::string clock_label(const Horizon& h, int t) {
  const long long secs = std::llround(h.start_clock_time + t * h.dt);
  const long long day = 24 * 3600;
  const long long s = ((secs % day) + day) % day;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld", s / 3600, (s / 60) % 60);
  return buf;
}

inline void write_report_csv(std::ostream& os, const CostReport& r) {
  const auto c = in_cents(r);
  os << "case,electricity_cost_cny,penalty_cost_cny,total_cost_cny,revenue_cny\n";
  os << "uncontrolled," << cents_text(c.baseline_electricity) << ",0.00," << cents_text(c.baseline_electricity)
     << ",0.00\n";
  os << "controlled," << cents_text(c.controlled_electricity) << ',' << cents_text(c.penalty) << ','
     << cents_text(c.controlled_total) << ',' << cents_text(c.revenue) << '\n';
}

inline void write_sensitivity_csv(std::ostream& os, const std::vector<SensitivityRow>& rows) {
  os << "beta,revenue_cny,penalty_cny,peak_power_reduction_fraction\n";
  for (const auto& r : rows)
    os << milp::format_number(r.beta) << ',' << cny_text(r.revenue) << ',' << cny_text(r.penalty) << ','
       << milp::format_number(r.peak_power_reduction_fraction) << '\n';
}

inline void write_baseline_csv(std::ostream& os, const BaselineResult& b, const Scenario& s) {
  os << "t,clock,total_power_W,total_power_se_W,mean_theta_C\n";
  const int G = b.mean_theta.rows;
  for (int t = 0; t < b.mean_theta.cols; ++t) {
    double th = 0;
    for (int g = 0; g < G; ++g) th += b.mean_theta(g, t);
    os << t + 1 << ',' << clock_label(s.horizon, t) << ',' << milp::format_number(b.total_power[static_cast<std::size_t>(t)])
       << ',' << milp::format_number(b.total_power_std_error[static_cast<std::size_t>(t)]) << ','
       << milp::format_number(G > 0 ? th / G : 0.0) << '\n';
  }
}

inline void write_baseline_units_csv(std::ostream& os, const BaselineResult& b, const Scenario& s) {
  os << "unit_id,t,power_W,theta_C\n";
  for (int g = 0; g < b.mean_power.rows; ++g)
    for (int t = 0; t < b.mean_power.cols; ++t)
      os << s.units[static_cast<std::size_t>(g)].id << ',' << t + 1 << ',' << milp::format_number(b.mean_power(g, t))
         << ',' << milp::format_number(b.mean_theta(g, t)) << '\n';
}

inline void write_schedule_csv(std::ostream& os, const Schedule& sched, const Scenario& s) {
  os << "unit_id,t,u,power_W,theta_C,d_C\n";
  for (int g = 0; g < sched.units(); ++g) {
    const double set = s.units[static_cast<std::size_t>(g)].theta_set;
    for (int t = 0; t < sched.periods(); ++t)
      os << sched.unit_ids[static_cast<std::size_t>(g)] << ',' << t + 1 << ','
         << sched.on_off[static_cast<std::size_t>(g)][static_cast<std::size_t>(t)] << ','
         << milp::format_number(sched.power(g, t)) << ',' << milp::format_number(sched.theta_nominal(g, t)) << ','
         << milp::format_number(std::abs(sched.theta_nominal(g, t) - set)) << '\n';
  }
}

/// Reads the on/off column of a schedule CSV, ordered like the scenario's units.
inline std::vector<std::vector<int>> read_schedule_csv(std::istream& in, const Scenario& s,
                                                      const std::string& source = "<schedule>") {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ":1: empty schedule file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "unit_id,t,u,power_W,theta_C,d_C") throw ParseError(source + ":1: unexpected header '" + line + "'");
  std::map<int, std::size_t> row_of;
  for (std::size_t g = 0; g < s.units.size(); ++g) row_of[s.units[g].id] = g;
  const int T = s.horizon.periods;
  std::vector<std::vector<int>> on_off(s.units.size(), std::vector<int>(static_cast<std::size_t>(T), -1));
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = source + ":" + std::to_string(lineno) + ": ";
    std::istringstream ls(line);
    std::string f[3];
    for (auto& x : f)
      if (!std::getline(ls, x, ',')) throw ParseError(where + "expected at least 3 columns");
    int id = 0, t = 0, u = 0;
    try {
      std::size_t n0 = 0, n1 = 0, n2 = 0;
      id = std::stoi(f[0], &n0);
      t = std::stoi(f[1], &n1);
      u = std::stoi(f[2], &n2);
      if (n0 != f[0].size() || n1 != f[1].size() || n2 != f[2].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ParseError(where + "malformed integer field");
    }
    auto it = row_of.find(id);
    if (it == row_of.end()) throw ParseError(where + "unit " + std::to_string(id) + " is not in the scenario");
    if (t < 1 || t > T) throw ParseError(where + "period " + std::to_string(t) + " outside horizon");
    if (u != 0 && u != 1) throw ParseError(where + "u must be 0 or 1");
    on_off[it->second][static_cast<std::size_t>(t - 1)] = u;
  }
  for (std::size_t g = 0; g < on_off.size(); ++g)
    for (int t = 0; t < T; ++t)
      if (on_off[g][static_cast<std::size_t>(t)] < 0)
        throw ParseError(source + ": no entry for unit " + std::to_string(s.units[g].id) + " period " +
                         std::to_string(t + 1));
  return on_off;
}

inline std::vector<std::vector<int>> load_schedule_csv(const std::filesystem::path& path, const Scenario& s) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schedule file " + path.string());
  return read_schedule_csv(in, s, path.string());
}

/// Baseline vs controlled cluster power, one row per period.
inline void write_power_series_csv(std::ostream& os, const BaselineResult& b, const Schedule& sched, const Scenario& s) {
  os << "t,clock,baseline_W,controlled_W\n";
  for (int t = 0; t < sched.periods(); ++t) {
    double c = 0;
    for (int g = 0; g < sched.units(); ++g) c += sched.power(g, t);
    os << t + 1 << ',' << clock_label(s.horizon, t) << ',' << milp::format_number(b.total_power[static_cast<std::size_t>(t)])
       << ',' << milp::format_number(c) << '\n';
  }
}

/// Temperature of one unit: baseline mean, controlled nominal, comfort band.
inline void write_unit_theta_series_csv(std::ostream& os, const BaselineResult& b, const Schedule& sched,
                                        const Scenario& s, std::size_t g) {
  const AcUnit& unit = s.units.at(g);
  os << "t,clock,unit_id,baseline_theta_C,controlled_theta_C,theta_min_C,theta_max_C\n";
  for (int t = 0; t < sched.periods(); ++t)
    os << t + 1 << ',' << clock_label(s.horizon, t) << ',' << unit.id << ','
       << milp::format_number(b.mean_theta(static_cast<int>(g), t)) << ','
       << milp::format_number(sched.theta_nominal(static_cast<int>(g), t)) << ',' << milp::format_number(unit.theta_min)
       << ',' << milp::format_number(unit.theta_max) << '\n';
}

template <class Writer>
void write_file(const std::filesystem::path& path, Writer&& w) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  w(out);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace acdr::report
