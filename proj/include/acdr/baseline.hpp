#pragma once

// Monte Carlo estimate of the uncontrolled cluster: every unit follows its
// temperature-dependent Markov chain under the nominal outdoor forecast.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "acdr/markov.hpp"
#include "acdr/parallel.hpp"
#include "acdr/rng.hpp"
#include "acdr/scenario.hpp"
#include "acdr/thermal.hpp"

namespace acdr {

/// Row-major G x T matrix.
struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Grid() = default;
  Grid(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::span<const double> row(int r) const { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
  bool operator==(const Grid&) const = default;
};

struct SampleTrajectories {
  Grid power;  // W
  Grid theta;  // degC
};

struct BaselineResult {
  Grid mean_power;                  // P^ori per unit and period
  Grid mean_theta;
  std::vector<double> total_power;  // sum over units of mean_power
  std::vector<double> total_power_std_error;  // standard error of the per-period total
  int samples = 0;
  std::uint64_t master_seed = 0;
};

namespace baseline_detail {
inline constexpr std::uint32_t kBaselineTag = 0x62617365u;
}

/// Uniform draw for (sample, unit, period); a pure function of the master seed.
inline double baseline_uniform(std::uint64_t master_seed, std::uint64_t sample_index, int unit_id, int period) {
  const rng::Counter ctr{static_cast<std::uint32_t>(period), static_cast<std::uint32_t>(unit_id),
                         static_cast<std::uint32_t>(sample_index),
                         static_cast<std::uint32_t>(sample_index >> 32) ^ baseline_detail::kBaselineTag};
  return rng::uniform_at(rng::key_from_seed(master_seed), ctr);
}

/// One realization. `draw(unit_index, period)` supplies the uniform used for
/// the transition out of `period` (0-based).
template <class UniformSource>
SampleTrajectories simulate_sample_with(const Scenario& s, UniformSource&& draw) {
  const int G = static_cast<int>(s.units.size());
  const int T = s.horizon.periods;
  SampleTrajectories out{Grid(G, T), Grid(G, T)};
  for (int g = 0; g < G; ++g) {
    const AcUnit& unit = s.units[static_cast<std::size_t>(g)];
    const auto k = thermal::coeffs(unit, s.horizon.dt);
    UnitState state = unit.initial_state;
    double theta = unit.initial_theta;
    for (int t = 0; t < T; ++t) {
      const int on = state == UnitState::on ? 1 : 0;
      out.power(g, t) = on * unit.rated_power;
      out.theta(g, t) = theta;
      if (t + 1 == T) break;
      const auto m = markov::transition_matrix(theta, unit);
      const UnitState next = markov::sample_next_state(state, m, draw(g, t));
      theta = thermal::step(k, theta, s.forecast.theta_out_pre[static_cast<std::size_t>(t)], on);
      state = next;
    }
  }
  return out;
}

inline SampleTrajectories simulate_sample(const Scenario& s, std::uint64_t sample_index) {
  return simulate_sample_with(s, [&](int g, int t) {
    return baseline_uniform(s.master_seed, sample_index, s.units[static_cast<std::size_t>(g)].id, t);
  });
}

struct BaselineOptions {
  unsigned threads = 1;
  int samples = 0;  // 0: use scenario.mc_samples
};

/// Sample means over N realizations. Samples are split into a fixed number of
/// contiguous chunks reduced in chunk order, so the result does not depend on
/// the thread count.
inline BaselineResult run_baseline(const Scenario& s, const BaselineOptions& opt = {}) {
  const int N = opt.samples > 0 ? opt.samples : s.mc_samples;
  const int G = static_cast<int>(s.units.size());
  const int T = s.horizon.periods;
  constexpr int kMaxChunks = 32;
  const int chunks = std::min(N, kMaxChunks);

  struct Partial {
    Grid power, theta;
    std::vector<double> total_sum, total_sq;
  };
  std::vector<Partial> partial(static_cast<std::size_t>(chunks));

  parallel_for(static_cast<std::size_t>(chunks), opt.threads, [&](std::size_t c) {
    const long long begin = static_cast<long long>(N) * static_cast<long long>(c) / chunks;
    const long long end = static_cast<long long>(N) * static_cast<long long>(c + 1) / chunks;
    Partial p{Grid(G, T), Grid(G, T), std::vector<double>(static_cast<std::size_t>(T), 0.0),
              std::vector<double>(static_cast<std::size_t>(T), 0.0)};
    std::vector<double> total(static_cast<std::size_t>(T));
    for (long long n = begin; n < end; ++n) {
      const auto traj = simulate_sample(s, static_cast<std::uint64_t>(n));
      std::fill(total.begin(), total.end(), 0.0);
      for (int g = 0; g < G; ++g)
        for (int t = 0; t < T; ++t) {
          p.power(g, t) += traj.power(g, t);
          p.theta(g, t) += traj.theta(g, t);
          total[static_cast<std::size_t>(t)] += traj.power(g, t);
        }
      for (int t = 0; t < T; ++t) {
        const double x = total[static_cast<std::size_t>(t)];
        p.total_sum[static_cast<std::size_t>(t)] += x;
        p.total_sq[static_cast<std::size_t>(t)] += x * x;
      }
    }
    partial[c] = std::move(p);
  });

  BaselineResult r;
  r.samples = N;
  r.master_seed = s.master_seed;
  r.mean_power = Grid(G, T);
  r.mean_theta = Grid(G, T);
  std::vector<double> sum(static_cast<std::size_t>(T), 0.0), sq(static_cast<std::size_t>(T), 0.0);
  for (const auto& p : partial) {
    for (std::size_t i = 0; i < r.mean_power.data.size(); ++i) {
      r.mean_power.data[i] += p.power.data[i];
      r.mean_theta.data[i] += p.theta.data[i];
    }
    for (int t = 0; t < T; ++t) {
      sum[static_cast<std::size_t>(t)] += p.total_sum[static_cast<std::size_t>(t)];
      sq[static_cast<std::size_t>(t)] += p.total_sq[static_cast<std::size_t>(t)];
    }
  }
  const double n = static_cast<double>(N);
  for (auto& x : r.mean_power.data) x /= n;
  for (auto& x : r.mean_theta.data) x /= n;
  r.total_power.assign(static_cast<std::size_t>(T), 0.0);
  r.total_power_std_error.assign(static_cast<std::size_t>(T), 0.0);
  for (int t = 0; t < T; ++t) {
    double tot = 0;
    for (int g = 0; g < G; ++g) tot += r.mean_power(g, t);
    r.total_power[static_cast<std::size_t>(t)] = tot;
    if (N > 1) {
      const double mean = sum[static_cast<std::size_t>(t)] / n;
      const double var = std::max(0.0, (sq[static_cast<std::size_t>(t)] - n * mean * mean) / (n - 1.0));
      r.total_power_std_error[static_cast<std::size_t>(t)] = std::sqrt(var / n);
    }
  }
  return r;
}

}  // namespace acdr
