#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "subcrit/model.hpp"
#include "subcrit/rng.hpp"
#include "subcrit/trajectory.hpp"

namespace subcrit {

/// Exact event-driven simulation of Z on [0, horizon] from z0 individuals.
/// Holding times are Exp(z(λ+μ)); the event is a birth with probability
/// λ/(λ+μ), in which case its size is drawn from the offspring law.
Trajectory simulate(const ModelParams& params, Count z0, double horizon, std::uint64_t seed);
Trajectory simulate(const ModelParams& params, Count z0, double horizon, Rng& rng);

/// Appends events of Z started from z0 at time t_start and run to t_end.
/// Returns the state at t_end.
Count simulate_segment(const ModelParams& params, Count z0, double t_start, double t_end, Rng& rng,
                       std::vector<Event>& out);

struct MeanRow {
  double t = 0;
  double mean = 0;
  double se = 0;  ///< standard error of the mean; 0 for a single replication
};

/// Monte Carlo mean of Z_t over a time grid, one path per replication run to
/// the largest grid time. Replication i uses stream derive_seed(seed, i).
std::vector<MeanRow> mean_curve(const ModelParams& params, Count z0, std::span<const double> t_grid,
                                std::size_t n_reps, std::uint64_t seed, unsigned threads = 1);

}  // namespace subcrit
