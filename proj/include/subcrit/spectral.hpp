#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "subcrit/model.hpp"

namespace subcrit {

/// Sub-generator of Z restricted to states 1..N. State j lives at index
/// j-1. Row i carries the death rate iμ to i-1 (leaking out of the space
/// from row 1) and birth rates iλp_k to i-1+k when that state is <= N;
/// births beyond N are dropped. The diagonal is -i(λ+μ).
struct TruncatedGenerator {
  ModelParams params;
  std::size_t n = 0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> q;

  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(q); }
  /// max_i |Q_ii|
  double uniformization_rate() const noexcept;
};

/// Throws Error{TruncationTooSmall} when n < max offspring size + 1.
TruncatedGenerator build(const ModelParams& params, std::size_t n);

/// Dominant (Perron-Frobenius) eigentriple of Q_N.
struct SpectralTriple {
  std::size_t n = 0;
  double rho_star = 0;
  Eigen::VectorXd u;  ///< left eigenvector, u·1 = 1 (quasi-stationary law)
  Eigen::VectorXd v;  ///< right eigenvector, u·v = 1
  double left_residual = 0;   ///< ||uᵀQ - ρ* uᵀ||_∞
  double right_residual = 0;  ///< ||Q v - ρ* v||_∞
  std::size_t iterations = 0;

  /// Stationary law of the Q-process: u_j v_j.
  Eigen::VectorXd qprocess_stationary() const;
  /// Σ_j j u_j v_j.
  double stationary_mean() const;
};

/// Inverse iteration on -Q_N (a nonsingular M-matrix, whose inverse is
/// entrywise nonnegative): power iteration on (-Q_N)^{-1} converges to the
/// Perron vector, and ρ* is its reciprocal eigenvalue with sign flipped.
/// Throws Error{NoConvergence} after max_iterations.
SpectralTriple pf_triple(const TruncatedGenerator& gen, double tol = 1e-10, std::size_t max_iterations = 100000);

/// Quasi-stationary distribution (left PF vector normalized to sum 1).
Eigen::VectorXd qsd(const TruncatedGenerator& gen, double tol = 1e-10);

/// exp(Q_N t) by scaling and squaring (Padé), dense.
Eigen::MatrixXd expm_dense(const TruncatedGenerator& gen, double t);

/// exp(Q_N t) x by uniformization. All terms are nonnegative for
/// nonnegative x, so small entries keep their relative accuracy.
Eigen::VectorXd expm_apply(const TruncatedGenerator& gen, double t, const Eigen::VectorXd& x);
/// xᵀ exp(Q_N t) by uniformization, returned as a column vector.
Eigen::VectorXd expm_apply_left(const TruncatedGenerator& gen, double t, const Eigen::VectorXd& x);

/// e_iᵀ exp(Q_N t) 1 = P_i(Z_t > 0 within the truncation).
double survival_mass(const TruncatedGenerator& gen, std::size_t i, double t);

/// Compares survival mass at N and 2N; throws Error{TruncationTooSmall} when
/// the relative change exceeds rel_tol.
void certify_truncation(const TruncatedGenerator& gen, std::size_t i, double t, double rel_tol = 1e-8);

/// P(Z_u = j | Z_0 = i, Z_t > 0) for j = 1..N (index j-1):
///   P_ij(u) e_jᵀP(t-u)1 / e_iᵀP(t)1.
Eigen::VectorXd conditioned_distribution(const TruncatedGenerator& gen, std::size_t i, double u, double t,
                                         bool certify = true);
double conditioned_marginal(const TruncatedGenerator& gen, std::size_t i, std::size_t j, double u, double t);

/// Q-process transition probabilities P↑_ij(u) = P_ij(u) (j/i) e^{-ρu},
/// j = 1..N (index j-1).
Eigen::VectorXd qprocess_distribution(const TruncatedGenerator& gen, std::size_t i, double u,
                                      bool certify = true);
double qprocess_marginal(const TruncatedGenerator& gen, std::size_t i, std::size_t j, double u);

struct TvRow {
  double ell = 0;  ///< headroom t - u
  double tv = 0;   ///< TV distance between Z^{(t)}_u and Z↑_u, u = t - ell
};

/// Marginal total-variation distance between the conditioned process and the
/// Q-process at times u = t - ℓ. A numerical diagnostic of how fast the two
/// laws merge; it says nothing about path-level couplings.
std::vector<TvRow> tv_decay(const TruncatedGenerator& gen, std::size_t i, double t, std::span<const double> ell_grid);

/// Total-variation distance between two probability vectors (padded with 0).
double tv_distance(std::span<const double> a, std::span<const double> b);

}  // namespace subcrit
