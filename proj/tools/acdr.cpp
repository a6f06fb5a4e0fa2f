// Command-line front end: scenario generation, baseline simulation,
// optimization, penalty sweeps and robustness verification.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "acdr/acdr.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Manifest {
  std::string command;
  std::string scenario;
  ordered_json flags = ordered_json::object();
  std::uint64_t master_seed = 0;
  std::vector<std::string> outputs;

  void write(const fs::path& path) const {
    ordered_json j;
    j["command"] = command;
    j["scenario"] = scenario;
    j["flags"] = flags;
    j["master_seed"] = master_seed;
    j["outputs"] = outputs;
    j["tool_version"] = acdr::kVersion;
    acdr::report::write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }
};

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("ACDR_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    const auto seed = std::stoull(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument(v);
    return seed;
  } catch (const std::exception&) {
    throw acdr::ConfigError(std::string("ACDR_SEED is not an unsigned integer: ") + v);
  }
}

/// Output file inside `dir`, recorded in the manifest.
fs::path output(Manifest& m, const fs::path& dir, const std::string& name) {
  m.outputs.push_back((dir / name).string());
  return dir / name;
}

struct ScenarioFlags {
  std::string path;
  std::optional<double> epsilon;
  std::optional<double> beta;
  std::optional<std::string> norm;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;

  void add_to(CLI::App* cmd, bool robust_overrides, bool beta_override, bool mc_samples = true) {
    cmd->add_option("--scenario", path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    if (mc_samples)
      cmd->add_option("--samples", samples, "Monte Carlo samples (default: scenario mc_samples)")
          ->check(CLI::Range(1, 100000000));
    cmd->add_option("--seed", seed, "Master seed override (default: scenario master_seed)");
    cmd->add_option("--threads", threads, "Worker threads; results do not depend on it")
        ->check(CLI::Range(1u, 1024u));
    if (robust_overrides) {
      cmd->add_option("--epsilon", epsilon, "Outdoor temperature uncertainty radius (degC)")
          ->check(CLI::Range(0.0, 1e6));
      cmd->add_option("--norm", norm, "Uncertainty set shape")->check(CLI::IsMember({"box", "ellipsoid"}));
    }
    if (beta_override)
      cmd->add_option("--beta", beta, "Comfort penalty coefficient (CNY per degC hour)")->check(CLI::Range(0.0, 1e12));
  }

  /// Loads the scenario, applies overrides and records the resolved values.
  acdr::Scenario load(Manifest& m) const {
    auto s = acdr::load_scenario(path);
    if (epsilon) s.forecast.epsilon = *epsilon;
    if (norm) s.forecast.norm_kind = acdr::parse_norm_kind(*norm);
    if (beta) s.beta = *beta;
    if (samples) s.mc_samples = *samples;
    if (seed) s.master_seed = *seed;
    acdr::validate(s);
    m.scenario = path;
    m.master_seed = s.master_seed;
    m.flags["epsilon"] = s.forecast.epsilon;
    m.flags["norm"] = acdr::to_string(s.forecast.norm_kind);
    m.flags["beta"] = s.beta;
    m.flags["samples"] = s.mc_samples;
    m.flags["threads"] = threads;
    return s;
  }

  acdr::BaselineResult baseline(const acdr::Scenario& s) const {
    acdr::BaselineOptions opt;
    opt.threads = threads;
    return acdr::run_baseline(s, opt);
  }
};

int cmd_gen_scenario(int count, std::optional<std::uint64_t> seed, const std::string& out) {
  Manifest m;
  m.command = "gen-scenario";
  const std::uint64_t resolved = seed ? *seed : env_seed().value_or(1);
  const auto s = acdr::bundled_scenario(count, resolved);
  const fs::path path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  acdr::save_scenario(s, path);
  m.scenario = out;
  m.master_seed = resolved;
  m.flags["count"] = count;
  m.flags["seed"] = resolved;
  m.outputs.push_back(out);
  fs::path manifest = path;
  manifest.replace_extension(".manifest.json");
  m.write(manifest);
  std::cout << "wrote " << out << " (" << count << " units, seed " << resolved << ")\n";
  return 0;
}

int cmd_simulate_baseline(const ScenarioFlags& f, const std::string& out, bool per_unit) {
  Manifest m;
  m.command = "simulate-baseline";
  const auto s = f.load(m);
  m.flags["per_unit"] = per_unit;
  const auto b = f.baseline(s);
  const fs::path dir(out);
  acdr::report::write_file(output(m, dir, "baseline.csv"),
                           [&](std::ostream& os) { acdr::report::write_baseline_csv(os, b, s); });
  if (per_unit)
    acdr::report::write_file(output(m, dir, "baseline_units.csv"),
                             [&](std::ostream& os) { acdr::report::write_baseline_units_csv(os, b, s); });
  m.write(dir / "manifest.json");
  double energy = 0;
  for (double p : b.total_power) energy += p * s.horizon.dt / acdr::kJoulesPerKwh;
  std::cout << "baseline: " << s.units.size() << " units, " << s.horizon.periods << " periods, " << b.samples
            << " samples, expected energy " << acdr::milp::format_number(energy) << " kWh\n";
  return 0;
}

struct OptimizeFlags {
  std::string solver = "bnb";
  std::string external_cmd;
  std::string export_lp;
  std::string out = "out";
  int series_unit = 0;
};

int cmd_optimize(const ScenarioFlags& f, const OptimizeFlags& o) {
  Manifest m;
  m.command = "optimize";
  const auto s = f.load(m);
  m.flags["solver"] = o.solver;
  if (!o.external_cmd.empty()) m.flags["external_cmd"] = o.external_cmd;
  if (o.solver == "exhaustive" && s.horizon.periods > acdr::solver::kExhaustiveCap)
    throw acdr::ConfigError("exhaustive solver is limited to " + std::to_string(acdr::solver::kExhaustiveCap) +
                            " periods (got " + std::to_string(s.horizon.periods) + ")");
  const fs::path dir(o.out);
  const auto b = f.baseline(s);
  const auto bounds = acdr::milp::cluster_bounds(s);

  acdr::Schedule schedule;
  acdr::CostReport cost;
  long long nodes = 0;
  if (!o.export_lp.empty() || o.solver == "external") {
    const auto model = acdr::milp::build_model(s, b, bounds);
    if (!o.export_lp.empty()) {
      acdr::milp::export_lp(model, o.export_lp);
      m.outputs.push_back(o.export_lp);
    }
    if (o.solver == "external") {
      const auto r = acdr::solver::solve_external(model, s, b, o.external_cmd, dir / "external");
      schedule = r.schedule;
      cost = r.cost;
    }
  }
  if (o.solver != "external") {
    acdr::solver::ClusterOptions opt;
    opt.method = acdr::solver::parse_method(o.solver);
    opt.threads = f.threads;
    const auto sol = acdr::solver::solve_cluster(s, b, bounds, opt);
    schedule = sol.schedule;
    cost = sol.cost;
    for (const auto& r : sol.reports) nodes += r.nodes_explored;
  }
  acdr::milp::validate_schedule(schedule, s, &bounds);

  std::size_t unit_row = 0;
  if (o.series_unit != 0) {
    bool found = false;
    for (std::size_t g = 0; g < s.units.size(); ++g)
      if (s.units[g].id == o.series_unit) {
        unit_row = g;
        found = true;
      }
    if (!found) throw acdr::ConfigError("--series-unit " + std::to_string(o.series_unit) + " is not in the scenario");
  }
  m.flags["series_unit"] = s.units[unit_row].id;
  namespace rep = acdr::report;
  rep::write_file(output(m, dir, "schedule.csv"), [&](std::ostream& os) { rep::write_schedule_csv(os, schedule, s); });
  rep::write_file(output(m, dir, "report.csv"), [&](std::ostream& os) { rep::write_report_csv(os, cost); });
  rep::write_file(output(m, dir, "series_total_power.csv"),
                  [&](std::ostream& os) { rep::write_power_series_csv(os, b, schedule, s); });
  rep::write_file(output(m, dir, "series_unit_theta.csv"),
                  [&](std::ostream& os) { rep::write_unit_theta_series_csv(os, b, schedule, s, unit_row); });
  m.write(dir / "manifest.json");

  const auto c = acdr::in_cents(cost);
  const auto window = rep::peak_window_from_prices(s.prices.price);
  std::cout << "baseline electricity " << rep::cents_text(c.baseline_electricity) << " CNY\n"
            << "controlled electricity " << rep::cents_text(c.controlled_electricity) << " CNY\n"
            << "penalty " << rep::cents_text(c.penalty) << " CNY\n"
            << "revenue " << rep::cents_text(c.revenue) << " CNY\n"
            << "peak shaving " << acdr::milp::format_number(rep::peak_shaving_summary(b, schedule, window, s.horizon.dt))
            << '\n';
  if (o.solver != "external") std::cout << "nodes explored " << nodes << '\n';
  return 0;
}

int cmd_sweep_beta(const ScenarioFlags& f, const std::vector<double>& betas, const std::string& out) {
  Manifest m;
  m.command = "sweep-beta";
  const auto s = f.load(m);
  m.flags.erase("beta");
  m.flags["betas"] = betas;
  const auto b = f.baseline(s);
  const auto bounds = acdr::milp::cluster_bounds(s);
  const auto rows = acdr::report::sweep_beta(s, b, bounds, betas, f.threads);
  const fs::path dir(out);
  acdr::report::write_file(output(m, dir, "sensitivity.csv"),
                           [&](std::ostream& os) { acdr::report::write_sensitivity_csv(os, rows); });
  m.write(dir / "manifest.json");
  acdr::report::write_sensitivity_csv(std::cout, rows);
  return 0;
}

int cmd_verify(const ScenarioFlags& f, const std::string& schedule_path, int samples, const std::string& out,
               bool fail_on_violation) {
  Manifest m;
  m.command = "verify";
  const auto s = f.load(m);
  m.flags["schedule"] = schedule_path;
  m.flags["check_samples"] = samples;
  const auto on_off = acdr::report::load_schedule_csv(schedule_path, s);
  std::vector<acdr::robust::Violation> worst(s.units.size()), sampled(s.units.size());
  std::vector<int> switching(s.units.size());
  acdr::parallel_for(s.units.size(), f.threads, [&](std::size_t g) {
    const auto& unit = s.units[g];
    worst[g] = acdr::robust::worst_case_check(unit, on_off[g], s.forecast, s.horizon);
    sampled[g] = acdr::robust::sampled_check(unit, on_off[g], s.forecast, s.horizon, samples, s.master_seed);
    switching[g] = acdr::milp::first_switching_violation(unit, on_off[g]);
  });
  int bad_units = 0;
  double max_worst = 0, max_sampled = 0;
  std::ostringstream csv;
  csv << "unit_id,worst_case_violation_C,worst_case_period,sampled_violation_C,switching_violation_period\n";
  for (std::size_t g = 0; g < s.units.size(); ++g) {
    const bool bad = worst[g].amount > 0 || sampled[g].amount > 0 || switching[g] != 0;
    bad_units += bad;
    max_worst = std::max(max_worst, worst[g].amount);
    max_sampled = std::max(max_sampled, sampled[g].amount);
    csv << s.units[g].id << ',' << acdr::milp::format_number(worst[g].amount) << ',' << worst[g].period << ','
        << acdr::milp::format_number(sampled[g].amount) << ',' << switching[g] << '\n';
    if (bad)
      std::cout << "unit " << s.units[g].id << ": worst-case violation " << acdr::milp::format_number(worst[g].amount)
                << " degC at period " << worst[g].period << ", sampled " << acdr::milp::format_number(sampled[g].amount)
                << " degC" << (switching[g] ? ", minimum up/down violated" : "") << '\n';
  }
  if (!out.empty()) {
    const fs::path dir(out);
    acdr::report::write_file(output(m, dir, "verify.csv"), [&](std::ostream& os) { os << csv.str(); });
    m.write(dir / "manifest.json");
  }
  std::cout << "units checked " << s.units.size() << ", units with violations " << bad_units
            << ", max worst-case violation " << acdr::milp::format_number(max_worst) << " degC, max sampled violation "
            << acdr::milp::format_number(max_sampled) << " degC\n";
  if (fail_on_violation && bad_units > 0) {
    std::cerr << "error: " << bad_units << " units violate comfort or switching rules\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust demand-response scheduling for fixed-frequency air-conditioner clusters"};
  app.set_version_flag("--version", std::string(acdr::kVersion));
  app.require_subcommand(1);

  int count = 100;
  std::optional<std::uint64_t> gen_seed;
  std::string gen_out = "scenario.json";
  auto* gen = app.add_subcommand("gen-scenario", "Generate a randomized scenario");
  gen->add_option("--count", count, "Number of units")->check(CLI::Range(1, 10000000));
  gen->add_option("--seed", gen_seed, "Population and master seed (fallback: ACDR_SEED, then 1)");
  gen->add_option("--out", gen_out, "Output scenario file");

  ScenarioFlags base_flags;
  std::string base_out = "out";
  bool per_unit = false;
  auto* sim = app.add_subcommand("simulate-baseline", "Monte Carlo baseline of the uncontrolled cluster");
  base_flags.add_to(sim, false, false);
  sim->add_option("--out", base_out, "Output directory");
  sim->add_flag("--per-unit", per_unit, "Also write per-unit expected power and temperature");

  ScenarioFlags opt_flags;
  OptimizeFlags opt;
  auto* optim = app.add_subcommand("optimize", "Solve the robust scheduling problem");
  opt_flags.add_to(optim, true, true);
  optim->add_option("--solver", opt.solver, "Solver")->check(CLI::IsMember({"bnb", "exhaustive", "external"}));
  optim->add_option("--external-cmd", opt.external_cmd, "Command run as: CMD model.lp solution.txt");
  optim->add_option("--export-lp", opt.export_lp, "Also write the model in LP format to this path");
  optim->add_option("--out", opt.out, "Output directory");
  optim->add_option("--series-unit", opt.series_unit, "Unit id for the temperature series (default: first unit)");

  ScenarioFlags sweep_flags;
  std::vector<double> betas{0, 15, 30, 45};
  std::string sweep_out = "out";
  auto* sweep = app.add_subcommand("sweep-beta", "Re-solve for several penalty coefficients");
  sweep_flags.add_to(sweep, true, false);
  sweep->add_option("--betas", betas, "Penalty coefficients")->delimiter(',')->check(CLI::Range(0.0, 1e12));
  sweep->add_option("--out", sweep_out, "Output directory");

  ScenarioFlags verify_flags;
  std::string schedule_path;
  int verify_samples = 1000;
  std::string verify_out;
  bool fail_on_violation = false;
  auto* verify = app.add_subcommand("verify", "Check a schedule against the uncertainty set");
  verify_flags.add_to(verify, true, false, false);
  verify->add_option("--schedule", schedule_path, "schedule.csv written by optimize")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_option("--samples,-k", verify_samples, "Random in-set outdoor realizations per unit")
      ->check(CLI::Range(0, 100000000));
  verify->add_option("--out", verify_out, "Output directory for verify.csv");
  verify->add_flag("--fail-on-violation", fail_on_violation, "Exit with status 1 if any unit is violated");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*gen) return cmd_gen_scenario(count, gen_seed, gen_out);
    if (*sim) return cmd_simulate_baseline(base_flags, base_out, per_unit);
    if (*optim) return cmd_optimize(opt_flags, opt);
    if (*sweep) return cmd_sweep_beta(sweep_flags, betas, sweep_out);
    if (*verify) return cmd_verify(verify_flags, schedule_path, verify_samples, verify_out, fail_on_violation);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
