#include "subcrit/sim.hpp"

#include <algorithm>
#include <cmath>

#include "subcrit/error.hpp"
#include "subcrit/parallel.hpp"

namespace subcrit {

Count simulate_segment(const ModelParams& params, Count z0, double t_start, double t_end, Rng& rng,
                       std::vector<Event>& out) {
  const double lambda = params.lambda();
  const double total_rate = lambda + params.mu();
  const double birth_share = lambda / total_rate;
  const OffspringLaw& law = params.offspring();
  Count z = z0;
  double s = t_start;
  while (z > 0) {
    s += exponential(rng, total_rate * static_cast<double>(z));
    if (s > t_end) break;
    Event e;
    e.time = s;
    e.state_before = z;
    if (uniform01(rng) < birth_share) {
      e.kind = EventKind::Birth;
      e.size = law.sample(uniform01(rng));
    } else {
      e.kind = EventKind::Death;
    }
    out.push_back(e);
    z = e.state_after();
  }
  return z;
}

Trajectory simulate(const ModelParams& params, Count z0, double horizon, Rng& rng) {
  if (z0 < 1) throw Error(ErrorKind::DomainError, "z0 must be positive");
  if (!(horizon >= 0)) throw Error(ErrorKind::DomainError, "horizon must be nonnegative");
  Trajectory traj;
  traj.z0 = z0;
  traj.horizon = horizon;
  simulate_segment(params, z0, 0.0, horizon, rng, traj.events);
  return traj;
}

Trajectory simulate(const ModelParams& params, Count z0, double horizon, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return simulate(params, z0, horizon, rng);
}

std::vector<MeanRow> mean_curve(const ModelParams& params, Count z0, std::span<const double> t_grid,
                                std::size_t n_reps, std::uint64_t seed, unsigned threads) {
  if (n_reps < 1) throw Error(ErrorKind::DomainError, "n_reps must be at least 1");
  if (t_grid.empty()) return {};
  const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  if (!(t_grid.front() >= 0) || !(t_max >= 0)) throw Error(ErrorKind::DomainError, "negative time in grid");

  // values[rep * grid + g]
  std::vector<double> values(n_reps * t_grid.size());
  parallel_for(n_reps, threads, [&](std::size_t rep) {
    Rng rng = make_rng(seed, rep);
    const Trajectory traj = simulate(params, z0, t_max, rng);
    for (std::size_t g = 0; g < t_grid.size(); ++g) {
      values[rep * t_grid.size() + g] = static_cast<double>(traj.state_at(t_grid[g]));
    }
  });

  std::vector<MeanRow> rows;
  rows.reserve(t_grid.size());
  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    double sum = 0;
    for (std::size_t rep = 0; rep < n_reps; ++rep) sum += values[rep * t_grid.size() + g];
    const double mean = sum / static_cast<double>(n_reps);
    double ss = 0;
    for (std::size_t rep = 0; rep < n_reps; ++rep) {
      const double d = values[rep * t_grid.size() + g] - mean;
      ss += d * d;
    }
    const double se = n_reps > 1 ? std::sqrt(ss / static_cast<double>(n_reps - 1) / static_cast<double>(n_reps)) : 0.0;
    rows.push_back({t_grid[g], mean, se});
  }
  return rows;
}

}  // namespace subcrit
