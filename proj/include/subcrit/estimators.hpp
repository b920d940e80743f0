#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "subcrit/model.hpp"
#include "subcrit/trajectory.hpp"

namespace subcrit {

enum class EstimatorId {
  MleClassic,
  CConsistent,
  PkHat,
  PkTilde,
  PkTildePlugin,
  PkMultinomial,
  Skeleton,
  QmleFixedPoint,
  QmleFiniteSupport,
};

std::string_view to_string(EstimatorId id);

struct ParameterEstimate {
  std::string name;
  std::optional<double> value;  ///< empty when undefined on this sample
  std::optional<double> se;
  std::optional<double> lower;
  std::optional<double> upper;
};

struct EstimateReport {
  EstimatorId id = EstimatorId::MleClassic;
  double t = 0;
  std::vector<ParameterEstimate> estimates;
  std::map<std::string, double> diagnostics;

  const ParameterEstimate* find(std::string_view name) const noexcept;
  /// Value of a defined estimate; throws Error{BadInput} otherwise.
  double value(std::string_view name) const;
};

/// One row per parameter:
/// estimator_id,t,parameter,value,se,ci_lower,ci_upper,diagnostics
/// Undefined fields are written as NA; diagnostics as key=value;key=value.
void write_report_csv_header(std::ostream& out);
void write_report_csv(std::ostream& out, const EstimateReport& report);

// --- classical and bias-corrected rates -------------------------------

struct RateEstimate {
  double lambda = 0;
  double mu = 0;
};

/// λ̂ = b/τ, μ̂ = d/τ. Throws Error{ZeroExposure} when τ = 0.
RateEstimate mle_classic(const SufficientStats& stats);

struct CConsistentEstimate {
  double lambda = 0;
  std::optional<double> mu;  ///< undefined when τ <= t
};

/// λ̃ = b/(τ + (m-1)t), μ̃ = d/(τ - t). Throws Error{ZeroExposure} when the
/// birth exposure is not positive.
CConsistentEstimate c_consistent(const SufficientStats& stats, double m);

// --- offspring probabilities -------------------------------------------

struct KnownLambda {
  double lambda;
};
/// λ replaced by λ̃ computed with the known offspring mean m.
struct PluginLambda {
  double m;
};
using LambdaMode = std::variant<KnownLambda, PluginLambda>;

struct PkEstimate {
  double hat = 0;    ///< p̂_k = b_k / b
  double tilde = 0;  ///< p̃_k = b_k / (λ (τ + (k-1)t))
};

/// Throws Error{NoBirths} when b = 0 and Error{ZeroExposure} when the size-k
/// exposure is not positive.
PkEstimate pk_estimators(const SufficientStats& stats, int k, const LambdaMode& mode);

/// Normalized ("multinomial") version over a finite support:
/// p̄_k ∝ b_k / (τ + (k-1)t). Throws Error{NoBirths}.
std::map<int, double> pk_multinomial(const SufficientStats& stats, const std::vector<int>& support);

// --- δ-skeleton --------------------------------------------------------

struct SkeletonMoments {
  double m_star = 0;
  double sigma2_star = 0;
  std::size_t pairs = 0;
};

/// Offspring mean and variance of the δ-skeleton implied by the model:
/// m* = e^{ρδ}, σ²* = m*(1 - m*) π↑.
SkeletonMoments skeleton_moments_exact(const ModelParams& params, double delta);

/// Conditional least squares on skeleton pairs (z_n, z_{n+1}) of a path that
/// is observed conditioned on survival. Along such a path the conditional
/// mean of z_{n+1} is m* z_n + σ²*/m*, so the regression slope estimates m*
/// and slope × intercept estimates σ²*. Throws Error{SkeletonDegenerate}
/// when fewer than two pairs exist or the skeleton never moves.
SkeletonMoments skeleton_moments(const Trajectory& traj, double delta);

/// Binary-case inversion of (m*, σ²*) to (λ, μ). Throws
/// Error{SkeletonDegenerate} unless 0 < m* < 1.
RateEstimate binary_skeleton_rates(double m_star, double sigma2_star, double delta);

struct SkeletonSolution {
  double lambda = 0;
  double mu = 0;
  double m = 0;
  double sigma2 = 0;
};

/// Solves m* = e^{ρδ}, σ²* = m*(1-m*)π↑, λ↑ = lambda_up, μ↑ = mu_up for
/// (λ, μ, m, σ²). The system is triangular: ρ and π↑ follow from the
/// skeleton moments, μ from μ↑, then λ, m and σ². Throws
/// Error{SkeletonDegenerate} if the inputs admit no solution with
/// π↑ > 1, λ > 0, μ > 0 and m > 1.
SkeletonSolution general_skeleton_solve(double m_star, double sigma2_star, double lambda_up, double mu_up,
                                        double delta);

enum class SkeletonMode { Binary, General };

EstimateReport skeleton_estimators(const Trajectory& traj, double delta, SkeletonMode mode);

// --- Q-process likelihood ----------------------------------------------

struct QmleFixedPoint {
  double lambda = 0;
  double mu = 0;
  double m = 0;
  double residual = 0;  ///< |m - F(m)|
  std::size_t iterations = 0;
};

/// F(x) = 1 - τ/t + b / Σ_r b_r/(r-1+x) for the offspring mean.
double qmle_map(const SufficientStats& stats, double x);

/// Solves x = F(x) by bisection on a bracket followed by Newton polish.
/// Throws Error{DegenerateExposure} when τ <= t and Error{NoFixedPoint}
/// when no root exists (e.g. all births occur from state 1).
QmleFixedPoint qmle_fixed_point(const SufficientStats& stats);

struct QmleFiniteSupport {
  double lambda = 0;
  double mu = 0;
  std::map<int, double> pk;
  double m = 0;
};

/// Throws Error{DegenerateExposure} when τ <= t and Error{NoBirths}.
QmleFiniteSupport qmle_finite_support(const SufficientStats& stats, const std::vector<int>& support);

// --- asymptotic confidence intervals -----------------------------------

/// Two-sided standard normal quantile for the given coverage level.
double normal_quantile(double level);

struct Interval {
  double lower = 0;
  double upper = 0;
  double se = 0;
};

Interval asymptotic_ci(double point, double se, double level);

/// Asymptotic standard errors conditional on survival.
double se_lambda_tilde(double lambda, double pi_up, double m, double t);
double se_mu_tilde(double mu, double pi_up, double t);
double se_pk_tilde(double pk, double lambda, double pi_up, int k, double t);

// --- combined reports --------------------------------------------------

struct EstimateOptions {
  double m = 2;                       ///< known offspring mean
  std::optional<double> lambda;       ///< known λ for p̃_k; plug-in λ̃ otherwise
  std::vector<int> support{2};        ///< finite offspring support
  std::vector<double> skeleton_deltas;
  SkeletonMode skeleton_mode = SkeletonMode::General;
  double level = 0.95;
};

/// Every estimator on one path observed on [0, t]. Standard errors use the
/// plug-in π̂↑ = τ_t / t. Estimators that fail on this sample are skipped
/// and listed in the `failures` output.
std::vector<EstimateReport> estimate_all(const Trajectory& traj, double t, const EstimateOptions& options,
                                         std::vector<std::string>* failures = nullptr);

}  // namespace subcrit
