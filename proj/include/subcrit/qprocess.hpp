#pragma once

#include <cstdint>
#include <vector>

#include "subcrit/model.hpp"
#include "subcrit/rng.hpp"
#include "subcrit/trajectory.hpp"

namespace subcrit {

/// Simulates the Q-process (Z conditioned on survival in the distant future)
/// from its generator. From state i:
///   death            at rate (i-1)μ
///   birth of size k  at rate (i-1)λp_k + λ k p_k
/// The chain never reaches 0.
Trajectory simulate_generator(const ModelParams& params, Count z0, double horizon, std::uint64_t seed);
Trajectory simulate_generator(const ModelParams& params, Count z0, double horizon, Rng& rng);

/// Spine bookkeeping of a spine-based Q-process path.
struct SpineRecord {
  std::vector<double> birth_times;   ///< T_i, i = 1..N_t
  std::vector<int> offspring_counts; ///< size-biased ξ̃_i
  /// One unconditioned path per non-spine child, each started from a single
  /// individual at its parent's birth time (times are absolute).
  std::vector<Trajectory> subtrees;
  /// Index into birth_times for each subtree.
  std::vector<std::size_t> subtree_parent;

  std::size_t spine_births() const noexcept { return birth_times.size(); }
};

struct SpinePath {
  Trajectory path;  ///< merged population process
  SpineRecord spine;
};

/// Spine construction: an immortal individual gives birth at rate λm with
/// size-biased offspring counts; of the ξ̃ children one continues the spine
/// and the other ξ̃-1 found independent copies of Z. For z0 > 1 the remaining
/// z0-1 founders evolve as independent copies of Z. All event logs are merged
/// by time.
SpinePath simulate_spine(const ModelParams& params, double horizon, std::uint64_t seed, Count z0 = 1);
SpinePath simulate_spine(const ModelParams& params, double horizon, Rng& rng, Count z0 = 1);

/// Immigration view: Z↑ - 1 evolves as Z plus immigration at rate λm, with
/// ℓ immigrants arriving with probability p̃_{ℓ+1}. Returns the path of Z↑.
Trajectory simulate_immigration(const ModelParams& params, Count z0, double horizon, Rng& rng);

/// Same replay as `stats`; Q-process paths carry no special structure.
SufficientStats qprocess_stats(const Trajectory& traj, double t);

struct ErgodicAverages {
  double tau_over_t = 0;
  double births_over_t = 0;
  double deaths_over_t = 0;
};

/// Ratios τ↑/t, b↑/t, d↑/t from one generator path started at 1.
ErgodicAverages ergodic_averages(const ModelParams& params, double horizon, std::uint64_t seed);

}  // namespace subcrit
