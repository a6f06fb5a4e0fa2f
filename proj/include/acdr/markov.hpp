#pragma once

// Probabilistic on/off behaviour of an uncontrolled unit: sigmoid transition
// probabilities in (setpoint - indoor temperature), sampling, and
// maximum-likelihood fitting of the sigmoid parameters.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "acdr/error.hpp"
#include "acdr/scenario.hpp"

namespace acdr::markov {

/// Numerically stable logistic function; exact 0 or 1 once exp under/overflows.
inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double turn_on_probability(double theta, const AcUnit& unit) {
  return sigmoid(unit.markov.a * (unit.theta_set - theta) + unit.markov.b);
}

inline double turn_off_probability(double theta, const AcUnit& unit) {
  return sigmoid(unit.markov.c * (unit.theta_set - theta) + unit.markov.d);
}

struct TransitionMatrix {
  double p_stay_off = 0.5;
  double p_off_to_on = 0.5;
  double p_on_to_off = 0.5;
  double p_stay_on = 0.5;
};

inline TransitionMatrix transition_matrix(double theta, const AcUnit& unit) {
  TransitionMatrix m;
  m.p_off_to_on = turn_on_probability(theta, unit);
  m.p_on_to_off = turn_off_probability(theta, unit);
  m.p_stay_off = 1.0 - m.p_off_to_on;
  m.p_stay_on = 1.0 - m.p_on_to_off;
  return m;
}

/// u in [0, 1). From off: switch on iff u < p_off_to_on; from on: switch off iff u < p_on_to_off.
inline UnitState sample_next_state(UnitState state, const TransitionMatrix& m, double u) {
  if (state == UnitState::off) return u < m.p_off_to_on ? UnitState::on : UnitState::off;
  return u < m.p_on_to_off ? UnitState::off : UnitState::on;
}

struct Observation {
  double theta = 0;
  double theta_set = 0;
  UnitState state = UnitState::off;
  UnitState next_state = UnitState::off;
};

/// One logistic regression: outcome ~ sigmoid(slope * feature + intercept).
struct LogisticFit {
  double slope = 0;
  double intercept = 0;
  bool slope_identifiable = true;
  bool converged = false;
  int iterations = 0;
  std::size_t observations = 0;
};

struct FitResult {
  TransitionParams params;
  LogisticFit turn_on;   // off-origin rows, outcome = switched on
  LogisticFit turn_off;  // on-origin rows, outcome = switched off
};

struct FitOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 10000;
};

namespace detail {

struct Sample {
  double x;
  double y;
};

inline double mean_log_likelihood(std::span<const Sample> data, double w, double c) {
  double ll = 0;
  for (const auto& s : data) {
    const double z = w * s.x + c;
    // log sigmoid(z) = -log1p(exp(-z)), computed stably
    const double log_p = z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
    const double log_q = log_p - z;
    ll += s.y * log_p + (1.0 - s.y) * log_q;
  }
  return ll / static_cast<double>(data.size());
}

/// Damped Newton ascent on the mean log-likelihood (2x2 Hessian, backtracking).
inline LogisticFit fit_logistic(std::span<const Sample> data, const FitOptions& opt, const char* side) {
  LogisticFit fit;
  fit.observations = data.size();
  double ones = 0;
  for (const auto& s : data) ones += s.y;
  if (ones == 0 || ones == static_cast<double>(data.size()))
    throw ConfigError(std::string("degenerate ") + side +
                      " data: all outcomes identical, maximum-likelihood fit lies on the boundary");

  double xmin = data.front().x, xmax = data.front().x;
  for (const auto& s : data) {
    xmin = std::min(xmin, s.x);
    xmax = std::max(xmax, s.x);
  }
  if (xmax - xmin < 1e-12) {
    // Constant feature: only the intercept is identifiable; its MLE is the logit of the rate.
    const double rate = ones / static_cast<double>(data.size());
    fit.slope = 0;
    fit.intercept = std::log(rate / (1.0 - rate));
    fit.slope_identifiable = false;
    fit.converged = true;
    return fit;
  }

  const double n = static_cast<double>(data.size());
  double w = 0, c = 0;
  double ll = mean_log_likelihood(data, w, c);
  for (int it = 0; it < opt.max_iterations; ++it) {
    double gw = 0, gc = 0, hww = 0, hwc = 0, hcc = 0;
    for (const auto& s : data) {
      const double p = sigmoid(w * s.x + c);
      const double r = s.y - p;
      const double q = p * (1.0 - p);
      gw += r * s.x;
      gc += r;
      hww += q * s.x * s.x;
      hwc += q * s.x;
      hcc += q;
    }
    gw /= n;
    gc /= n;
    hww /= n;
    hwc /= n;
    hcc /= n;
    fit.iterations = it;
    if (std::max(std::abs(gw), std::abs(gc)) < opt.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    // Newton direction solves (-H) d = g; fall back to the gradient when -H is near singular.
    const double det = hww * hcc - hwc * hwc;
    double dw = gw, dc = gc;
    if (det > 1e-14 * std::max(1.0, hww * hcc)) {
      dw = (hcc * gw - hwc * gc) / det;
      dc = (hww * gc - hwc * gw) / det;
    }
    const double slope = gw * dw + gc * dc;
    double step = 1.0;
    for (;;) {
      const double nw = w + step * dw;
      const double nc = c + step * dc;
      const double nll = mean_log_likelihood(data, nw, nc);
      if (nll >= ll + 1e-4 * step * slope || step < 1e-12) {
        w = nw;
        c = nc;
        ll = nll;
        break;
      }
      step *= 0.5;
    }
  }
  fit.slope = w;
  fit.intercept = c;
  return fit;
}

}  // namespace detail

/// Maximum-likelihood estimate of (a, b) from off-origin rows and (c, d) from
/// on-origin rows, both against the feature (theta_set - theta).
inline FitResult fit_params(std::span<const Observation> observations, const FitOptions& opt = {}) {
  std::vector<detail::Sample> from_off, from_on;
  for (const auto& o : observations) {
    const double x = o.theta_set - o.theta;
    if (o.state == UnitState::off)
      from_off.push_back({x, o.next_state == UnitState::on ? 1.0 : 0.0});
    else
      from_on.push_back({x, o.next_state == UnitState::off ? 1.0 : 0.0});
  }
  if (from_off.empty() || from_on.empty())
    throw ConfigError("fit_params needs at least one observation starting from each state");
  FitResult r;
  r.turn_on = detail::fit_logistic(from_off, opt, "off-origin");
  r.turn_off = detail::fit_logistic(from_on, opt, "on-origin");
  r.params = {r.turn_on.slope, r.turn_on.intercept, r.turn_off.slope, r.turn_off.intercept};
  return r;
}

/// CSV with header `theta,theta_set,state,next_state`, states 0/1.
inline std::vector<Observation> read_observations_csv(std::istream& in, const std::string& source = "<csv>") {
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r"));
    s.erase(s.find_last_not_of(" \t\r") + 1);
    return s;
  };
  if (!std::getline(in, line)) throw ParseError(source + ": empty observation file");
  ++lineno;
  if (trim(line) != "theta,theta_set,state,next_state")
    throw ParseError(source + ":1: expected header theta,theta_set,state,next_state");
  std::vector<Observation> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string f[4];
    for (auto& cell : f)
      if (!std::getline(ss, cell, ','))
        throw ParseError(source + ":" + std::to_string(lineno) + ": expected 4 columns");
    try {
      Observation o;
      std::size_t used = 0;
      o.theta = std::stod(f[0], &used);
      o.theta_set = std::stod(f[1]);
      const auto s0 = trim(f[2]), s1 = trim(f[3]);
      if ((s0 != "0" && s0 != "1") || (s1 != "0" && s1 != "1")) throw std::invalid_argument("state");
      o.state = s0 == "1" ? UnitState::on : UnitState::off;
      o.next_state = s1 == "1" ? UnitState::on : UnitState::off;
      out.push_back(o);
    } catch (const std::logic_error&) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": malformed observation row");
    }
  }
  return out;
}

inline std::vector<Observation> load_observations_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_observations_csv(in, path.string());
}

}  // namespace acdr::markov
