#pragma once

#include <cstdint>
#include <vector>

#include "subcrit/model.hpp"
#include "subcrit/rng.hpp"
#include "subcrit/trajectory.hpp"

namespace subcrit {

/// Extinction probability F(s) = P(Z_s = 0 | Z_0 = 1) on [0, t_max].
///
/// F solves dF/ds = μ - (λ+μ)F + λP(F), F(0) = 0. Since 1 - F decays like
/// e^{ρs}, F itself rounds to 1 after a few dozen time units, so the curve
/// is integrated and stored as L(s) = log(1 - F(s)). L is smooth and almost
/// linear, and queries between nodes use cubic Hermite interpolation with
/// slopes taken from the ODE itself.
class ExtinctionCurve {
 public:
  ExtinctionCurve(const ModelParams& params, double t_max, double tol);

  double t_max() const noexcept { return t_max_; }
  const ModelParams& params() const noexcept { return params_; }

  /// F(s). Throws Error{DomainError} outside [0, t_max].
  double extinction(double s) const;
  /// 1 - F(s), accurate even when F rounds to 1.
  double survival(double s) const;
  double log_survival(double s) const;

  const std::vector<double>& grid() const noexcept { return grid_; }

  /// Right-hand side of the ODE for L = log(1 - F).
  static double log_survival_slope(const ModelParams& params, double log_g);

 private:
  ModelParams params_;
  double t_max_;
  double step_;
  std::vector<double> grid_;
  std::vector<double> log_g_;
  std::vector<double> slope_;
};

ExtinctionCurve extinction_prob(const ModelParams& params, double t_max, double tol = 1e-10);

/// Rates of Z^{(t)} (Z conditioned on Z_t > 0) at time s and state z.
struct ConditionedRates {
  std::vector<double> birth;  ///< indexed by offspring size k
  double total_birth = 0;
  double death = 0;
};

/// λ*_z(s;t) split by offspring size and μ*_z(s;t):
///   birth k: λ p_k z (1 - F^{z-1+k}) / (1 - F^z)
///   death:   μ z (1 - F^{z-1}) / (1 - F^z)
/// with F = F(t - s).
ConditionedRates conditioned_rates(const ModelParams& params, const ExtinctionCurve& curve, Count z,
                                   double s, double t);

/// Exact sample of (Z_u)_{0<=u<=t} given Z_t > 0, by thinning the
/// time-inhomogeneous conditioned chain. The birth rate is nonincreasing and
/// the death rate nondecreasing in s, so λ*_z(s;t) + μz dominates the total
/// rate from s onward while the state stays at z.
Trajectory simulate_conditioned_exact(const ModelParams& params, Count z0, double t, std::uint64_t seed);
/// `curve` must cover [0, t].
Trajectory simulate_conditioned_exact(const ExtinctionCurve& curve, Count z0, double t, Rng& rng);

struct RejectionSample {
  Trajectory path;
  std::size_t attempts = 0;
};

/// Simulates Z until a path with Z_t > 0 appears. Throws
/// Error{AttemptsExhausted} after max_attempts failures.
RejectionSample simulate_conditioned_rejection(const ModelParams& params, Count z0, double t,
                                               std::uint64_t seed, std::size_t max_attempts);
RejectionSample simulate_conditioned_rejection(const ModelParams& params, Count z0, double t, Rng& rng,
                                               std::size_t max_attempts);

enum class ResampleRule { Multinomial };

/// Fixed-effort multilevel splitting configuration.
struct SplittingConfig {
  std::vector<double> level_times;  ///< strictly increasing, last = target horizon
  std::size_t particles_per_level = 100;
  ResampleRule rule = ResampleRule::Multinomial;

  std::size_t n_levels() const noexcept { return level_times.size(); }

  /// Levels at spacing, 2·spacing, ... and finally t.
  static SplittingConfig equally_spaced(double t, double spacing, std::size_t particles);

  /// Throws Error{ConfigError} when the invariants fail for horizon t.
  void check(double t) const;
};

struct SplittingSample {
  Trajectory path;
  /// Fraction of particles alive at each level.
  std::vector<double> level_survival;
  /// Product of level survival fractions: unbiased for P(Z_t > 0 | Z_0 = z0).
  double survival_estimate = 0;
};

/// Approximate sample from the law of Z on [0, t] given Z_t > 0. Particles
/// evolve as unconditioned copies of Z between level times; at each level
/// the extinct ones are discarded and the survivors are resampled with
/// replacement back to the fixed particle count. Each particle keeps its
/// full ancestry, so the returned path (a uniformly chosen final survivor)
/// is a genuine trajectory. Throws Error{ParticleCollapse} if every particle
/// dies between two levels.
SplittingSample simulate_conditioned_splitting(const ModelParams& params, Count z0, double t,
                                               const SplittingConfig& cfg, std::uint64_t seed);
SplittingSample simulate_conditioned_splitting(const ModelParams& params, Count z0, double t,
                                               const SplittingConfig& cfg, Rng& rng);

}  // namespace subcrit
