#pragma once

// Robust comfort constraints under a norm-ball uncertainty set around the
// outdoor forecast. The room temperature is unrolled into an affine function of
// the outdoor temperature and the on/off decisions; each bound row then needs
// the dual norm of its outdoor-temperature coefficients as a safety margin.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <sstream>
#include <vector>

#include "acdr/error.hpp"
#include "acdr/rng.hpp"
#include "acdr/scenario.hpp"
#include "acdr/thermal.hpp"

namespace acdr::robust {

/// theta[t] = const_term[t] + sum_k xi_coeffs[t][k] * xi[k] + sum_k u_coeffs[t][k] * u[k]
/// (0-based periods; both coefficient matrices are strictly lower triangular).
struct AffineStateMap {
  int periods = 0;
  std::vector<double> const_term;
  std::vector<std::vector<double>> xi_coeffs;
  std::vector<std::vector<double>> u_coeffs;

  std::vector<double> evaluate(std::span<const double> xi, std::span<const int> u) const {
    std::vector<double> theta(static_cast<std::size_t>(periods));
    for (int t = 0; t < periods; ++t) {
      double v = const_term[static_cast<std::size_t>(t)];
      for (int k = 0; k < t; ++k)
        v += xi_coeffs[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] * xi[static_cast<std::size_t>(k)] +
             u_coeffs[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] * u[static_cast<std::size_t>(k)];
      theta[static_cast<std::size_t>(t)] = v;
    }
    return theta;
  }
};

inline AffineStateMap unroll_affine(const AcUnit& unit, const Horizon& horizon) {
  const int T = horizon.periods;
  const auto k = thermal::coeffs(unit, horizon.dt);
  AffineStateMap m;
  m.periods = T;
  m.const_term.resize(static_cast<std::size_t>(T));
  m.xi_coeffs.assign(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(T), 0.0));
  m.u_coeffs.assign(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(T), 0.0));
  double alpha_pow = 1.0;  // alpha^t
  for (int t = 0; t < T; ++t) {
    m.const_term[static_cast<std::size_t>(t)] = alpha_pow * unit.initial_theta;
    double w = 1.0 - k.alpha;  // alpha^(t-1-j) (1-alpha), j from t-1 downwards
    for (int j = t - 1; j >= 0; --j) {
      m.xi_coeffs[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] = w;
      m.u_coeffs[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] = -k.gain * w;
      w *= k.alpha;
    }
    alpha_pow *= k.alpha;
  }
  return m;
}

/// Norm evaluator; the dual of the sup-norm ball is the 1-norm and the
/// Euclidean ball is self-dual.
using NormFn = std::function<double(std::span<const double>)>;

inline NormFn dual_norm_of(NormKind kind) {
  switch (kind) {
    case NormKind::box:
      return [](std::span<const double> row) {
        double s = 0;
        for (double x : row) s += std::abs(x);
        return s;
      };
    case NormKind::ellipsoid:
      return [](std::span<const double> row) {
        double s = 0;
        for (double x : row) s += x * x;
        return std::sqrt(s);
      };
  }
  throw ConfigError("unsupported norm kind");
}

inline NormFn dual_norm_of(const std::string& kind) { return dual_norm_of(parse_norm_kind(kind)); }

/// Per-period tightening epsilon * ||row_t||_*; margin[0] is 0 because the
/// initial temperature does not depend on the forecast.
struct RobustMargin {
  std::vector<double> margin;
  std::vector<double> dual_norms;  // ||row_t||_*, i.e. margin per unit epsilon
};

inline RobustMargin robust_margins(const AffineStateMap& map, double epsilon, NormKind kind) {
  if (!(epsilon >= 0)) throw ConfigError("epsilon must be >= 0");
  const auto norm = dual_norm_of(kind);
  RobustMargin r;
  r.margin.resize(static_cast<std::size_t>(map.periods));
  r.dual_norms.resize(static_cast<std::size_t>(map.periods));
  for (int t = 0; t < map.periods; ++t) {
    const double dn = norm(map.xi_coeffs[static_cast<std::size_t>(t)]);
    r.dual_norms[static_cast<std::size_t>(t)] = dn;
    r.margin[static_cast<std::size_t>(t)] = epsilon * dn;
  }
  return r;
}

struct ComfortBounds {
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Raw band at the first period, tightened band afterwards. Throws
/// InfeasibleError when the tightened band is empty.
inline ComfortBounds tighten_comfort(const AcUnit& unit, const RobustMargin& m) {
  const auto T = m.margin.size();
  ComfortBounds b{std::vector<double>(T), std::vector<double>(T)};
  const double half_band = 0.5 * (unit.theta_max - unit.theta_min);
  std::size_t first_bad = T;
  double max_dual = 0;
  for (std::size_t t = 0; t < T; ++t) {
    const double mg = t == 0 ? 0.0 : m.margin[t];
    b.lo[t] = unit.theta_min + mg;
    b.hi[t] = unit.theta_max - mg;
    if (t > 0) max_dual = std::max(max_dual, m.dual_norms.empty() ? 0.0 : m.dual_norms[t]);
    if (b.lo[t] > b.hi[t] && first_bad == T) first_bad = t;
  }
  if (first_bad != T) {
    std::ostringstream os;
    os << "unit " << unit.id << ": robust comfort band is empty at period " << first_bad + 1 << " (margin "
       << m.margin[first_bad] << " degC exceeds half band " << half_band << " degC)";
    double epsilon = -1.0;
    for (std::size_t t = 0; t < T && t < m.dual_norms.size(); ++t)
      if (m.dual_norms[t] > 0) {
        epsilon = m.margin[t] / m.dual_norms[t];
        break;
      }
    if (max_dual > 0 && epsilon >= 0) {
      const double eps_max = half_band / max_dual;
      os << "; reduce epsilon by at least " << epsilon - eps_max << " to " << eps_max;
    }
    throw InfeasibleError(os.str());
  }
  return b;
}

/// Convenience: margins and tightened bounds for one unit at the scenario's epsilon.
inline ComfortBounds robust_bounds(const AcUnit& unit, const Horizon& h, const Forecast& f) {
  const auto map = unroll_affine(unit, h);
  return tighten_comfort(unit, robust_margins(map, f.epsilon, f.norm_kind));
}

struct Violation {
  double amount = 0;  // degC beyond the comfort band, 0 when satisfied
  int period = 0;     // 1-based, 0 when no violation
  bool above = true;
};

namespace detail {

inline void record(Violation& v, double amount, int period, bool above) {
  if (amount > v.amount) v = {amount, period, above};
}

inline void check_trajectory(const AcUnit& unit, std::span<const double> theta, Violation& v, bool check_hi,
                             bool check_lo, int only_period = -1) {
  for (std::size_t t = 0; t < theta.size(); ++t) {
    if (only_period >= 0 && static_cast<int>(t) != only_period) continue;
    if (check_hi) record(v, theta[t] - unit.theta_max, static_cast<int>(t) + 1, true);
    if (check_lo) record(v, unit.theta_min - theta[t], static_cast<int>(t) + 1, false);
  }
}

}  // namespace detail

/// Largest comfort violation over the whole uncertainty set. For the box set
/// the temperature is monotone in every outdoor entry, so the all-high and
/// all-low corners are the worst cases. For the Euclidean ball each period's
/// extreme point is xi_hat +/- epsilon * row / ||row||.
inline Violation worst_case_check(const AcUnit& unit, std::span<const int> on_off, const Forecast& f,
                                  const Horizon& h) {
  const auto T = static_cast<std::size_t>(h.periods);
  if (on_off.size() != T) throw ConfigError("schedule length does not match horizon");
  Violation v;
  std::vector<double> xi(f.theta_out_pre.begin(), f.theta_out_pre.end());
  if (f.norm_kind == NormKind::box) {
    for (auto& x : xi) x += f.epsilon;
    detail::check_trajectory(unit, thermal::simulate_trajectory(unit, on_off, xi, h.dt), v, true, false);
    for (std::size_t k = 0; k < T; ++k) xi[k] = f.theta_out_pre[k] - f.epsilon;
    detail::check_trajectory(unit, thermal::simulate_trajectory(unit, on_off, xi, h.dt), v, false, true);
    return v;
  }
  const auto map = unroll_affine(unit, h);
  detail::check_trajectory(unit, thermal::simulate_trajectory(unit, on_off, f.theta_out_pre, h.dt), v, true, true, 0);
  for (std::size_t t = 1; t < T; ++t) {
    const auto& row = map.xi_coeffs[t];
    double n2 = 0;
    for (double c : row) n2 += c * c;
    const double n = std::sqrt(n2);
    for (int sign : {+1, -1}) {
      for (std::size_t k = 0; k < T; ++k)
        xi[k] = f.theta_out_pre[k] + (n > 0 ? sign * f.epsilon * row[k] / n : 0.0);
      const auto theta = thermal::simulate_trajectory(unit, on_off, xi, h.dt);
      detail::check_trajectory(unit, theta, v, sign > 0, sign < 0, static_cast<int>(t));
    }
  }
  return v;
}

/// Draws a point of the uncertainty set uniformly (cube or ball).
inline std::vector<double> sample_in_set(const Forecast& f, rng::Stream& stream) {
  const auto T = f.theta_out_pre.size();
  std::vector<double> xi(T);
  if (f.norm_kind == NormKind::box) {
    for (std::size_t k = 0; k < T; ++k) xi[k] = f.theta_out_pre[k] + f.epsilon * (2.0 * stream.uniform() - 1.0);
    return xi;
  }
  std::normal_distribution<double> normal;
  std::vector<double> dir(T);
  double n2 = 0;
  for (auto& d : dir) {
    d = normal(stream);
    n2 += d * d;
  }
  const double radius = f.epsilon * std::pow(stream.uniform(), 1.0 / static_cast<double>(T));
  const double scale = n2 > 0 ? radius / std::sqrt(n2) : 0.0;
  for (std::size_t k = 0; k < T; ++k) xi[k] = f.theta_out_pre[k] + scale * dir[k];
  return xi;
}

/// Largest violation across `samples` random outdoor realizations in the set.
inline Violation sampled_check(const AcUnit& unit, std::span<const int> on_off, const Forecast& f, const Horizon& h,
                               int samples, std::uint64_t seed) {
  Violation v;
  rng::Stream stream(seed, static_cast<std::uint64_t>(static_cast<std::uint32_t>(unit.id)) | (0x7665726966ull << 32));
  for (int n = 0; n < samples; ++n) {
    const auto xi = sample_in_set(f, stream);
    detail::check_trajectory(unit, thermal::simulate_trajectory(unit, on_off, xi, h.dt), v, true, true);
  }
  return v;
}

}  // namespace acdr::robust
