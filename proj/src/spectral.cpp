#include "subcrit/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/MatrixFunctions>

#include "subcrit/error.hpp"

namespace subcrit {

namespace {

using SparseCol = Eigen::SparseMatrix<double, Eigen::ColMajor>;

// Largest Poisson mean handled in one uniformization step; e^{-400} is
// still a normal double.
constexpr double kMaxStepMean = 400.0;

void check_state(const TruncatedGenerator& gen, std::size_t i) {
  if (i < 1 || i > gen.n) {
    throw Error(ErrorKind::TruncationTooSmall,
                "state " + std::to_string(i) + " outside truncation 1.." + std::to_string(gen.n));
  }
}

// exp(A t) x for A = Q or Qᵀ by uniformization with Λ = max |diag|.
template <typename Mat>
Eigen::VectorXd uniformize(const Mat& a, double rate, double t, const Eigen::VectorXd& x) {
  if (!(t >= 0)) throw Error(ErrorKind::DomainError, "negative time in matrix exponential");
  if (t == 0 || rate == 0) return x;
  const double total = rate * t;
  const auto steps = static_cast<std::size_t>(std::ceil(total / kMaxStepMean));
  const double theta = total / static_cast<double>(steps);
  Eigen::VectorXd current = x;
  Eigen::VectorXd term(x.size());
  Eigen::VectorXd acc(x.size());
  for (std::size_t step = 0; step < steps; ++step) {
    term = current;
    double weight = std::exp(-theta);
    acc = weight * term;
    for (std::size_t k = 1;; ++k) {
      term += (a * term) / rate;
      weight *= theta / static_cast<double>(k);
      acc += weight * term;
      if (static_cast<double>(k) > theta && weight < 1e-20) break;
    }
    current = acc;
  }
  return current;
}

}  // namespace

double TruncatedGenerator::uniformization_rate() const noexcept {
  return static_cast<double>(n) * (params.lambda() + params.mu());
}

TruncatedGenerator build(const ModelParams& params, std::size_t n) {
  const auto min_n = static_cast<std::size_t>(params.offspring().max_size()) + 1;
  if (n < min_n) {
    throw Error(ErrorKind::TruncationTooSmall,
                "N = " + std::to_string(n) + " < max offspring size + 1 = " + std::to_string(min_n));
  }
  const double lambda = params.lambda();
  const double mu = params.mu();
  const auto& p = params.offspring().table();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(n * (p.size() + 2));
  for (std::size_t i = 1; i <= n; ++i) {
    const auto id = static_cast<double>(i);
    const auto row = static_cast<Eigen::Index>(i - 1);
    entries.emplace_back(row, row, -id * (lambda + mu));
    if (i >= 2) entries.emplace_back(row, row - 1, id * mu);
    for (std::size_t k = 2; k < p.size(); ++k) {
      const std::size_t j = i - 1 + k;
      if (p[k] > 0 && j <= n) entries.emplace_back(row, static_cast<Eigen::Index>(j - 1), id * lambda * p[k]);
    }
  }
  TruncatedGenerator gen{params, n, {}};
  gen.q.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  gen.q.setFromTriplets(entries.begin(), entries.end());
  gen.q.makeCompressed();
  return gen;
}

Eigen::VectorXd SpectralTriple::qprocess_stationary() const {
  Eigen::VectorXd w = u.cwiseProduct(v);
  return w / w.sum();
}

double SpectralTriple::stationary_mean() const {
  const Eigen::VectorXd w = qprocess_stationary();
  double mean = 0;
  for (Eigen::Index j = 0; j < w.size(); ++j) mean += static_cast<double>(j + 1) * w[j];
  return mean;
}

namespace {

// Power iteration on (-A)^{-1}; returns the iterate normalized to max 1.
Eigen::VectorXd perron_vector(const SparseCol& neg_a, double tol, std::size_t max_iterations,
                              std::size_t& iterations) {
  Eigen::SparseLU<SparseCol> lu;
  lu.compute(neg_a);
  if (lu.info() != Eigen::Success) throw Error(ErrorKind::NoConvergence, "LU factorization failed");
  Eigen::VectorXd x = Eigen::VectorXd::Ones(neg_a.rows());
  // Once below tol, keep iterating until the change stops shrinking: each
  // extra solve is cheap and drives the eigen-residual down to roundoff.
  double last = INFINITY;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd y = lu.solve(x);
    // one step of iterative refinement: LU roundoff otherwise dominates the
    // eigen-residual in the far tail of the vector
    y += lu.solve(x - neg_a * y);
    y /= y.maxCoeff();
    const double change = (y - x).cwiseAbs().maxCoeff();
    x = std::move(y);
    if (change < tol && (change >= last || change < 1e-15)) {
      iterations = std::max(iterations, it);
      return x;
    }
    last = change;
  }
  throw Error(ErrorKind::NoConvergence,
              "inverse iteration did not converge in " + std::to_string(max_iterations) + " iterations");
}

}  // namespace

SpectralTriple pf_triple(const TruncatedGenerator& gen, double tol, std::size_t max_iterations) {
  const SparseCol neg_q = -SparseCol(gen.q);
  const SparseCol neg_qt = SparseCol(neg_q.transpose());
  SpectralTriple out;
  out.n = gen.n;
  Eigen::VectorXd v = perron_vector(neg_q, tol, max_iterations, out.iterations);
  Eigen::VectorXd u = perron_vector(neg_qt, tol, max_iterations, out.iterations);
  if ((u.array() <= 0).any() || (v.array() <= 0).any()) {
    throw Error(ErrorKind::NoConvergence, "Perron vectors are not strictly positive");
  }
  u /= u.sum();
  v /= u.dot(v);
  const Eigen::VectorXd qv = gen.q * v;
  out.rho_star = u.dot(qv);  // uᵀQv with uᵀv = 1
  const Eigen::VectorXd utq = gen.q.transpose() * u;
  out.right_residual = (qv - out.rho_star * v).cwiseAbs().maxCoeff();
  out.left_residual = (utq - out.rho_star * u).cwiseAbs().maxCoeff();
  out.u = std::move(u);
  out.v = std::move(v);
  return out;
}

Eigen::VectorXd qsd(const TruncatedGenerator& gen, double tol) { return pf_triple(gen, tol).u; }

Eigen::MatrixXd expm_dense(const TruncatedGenerator& gen, double t) {
  if (!(t >= 0)) throw Error(ErrorKind::DomainError, "negative time in matrix exponential");
  const Eigen::MatrixXd a = gen.dense() * t;
  return a.exp();
}

Eigen::VectorXd expm_apply(const TruncatedGenerator& gen, double t, const Eigen::VectorXd& x) {
  return uniformize(gen.q, gen.uniformization_rate(), t, x);
}

Eigen::VectorXd expm_apply_left(const TruncatedGenerator& gen, double t, const Eigen::VectorXd& x) {
  const SparseCol qt = gen.q.transpose();
  return uniformize(qt, gen.uniformization_rate(), t, x);
}

double survival_mass(const TruncatedGenerator& gen, std::size_t i, double t) {
  check_state(gen, i);
  const Eigen::VectorXd h = expm_apply(gen, t, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(gen.n)));
  return h[static_cast<Eigen::Index>(i - 1)];
}

void certify_truncation(const TruncatedGenerator& gen, std::size_t i, double t, double rel_tol) {
  const double at_n = survival_mass(gen, i, t);
  const TruncatedGenerator doubled = build(gen.params, 2 * gen.n);
  const double at_2n = survival_mass(doubled, i, t);
  const double change = std::abs(at_2n - at_n) / at_2n;
  if (!(change < rel_tol)) {
    throw Error(ErrorKind::TruncationTooSmall, "survival mass changes by " + std::to_string(change) +
                                                   " between N=" + std::to_string(gen.n) + " and 2N");
  }
}

Eigen::VectorXd conditioned_distribution(const TruncatedGenerator& gen, std::size_t i, double u, double t,
                                         bool certify) {
  check_state(gen, i);
  if (!(u >= 0 && u <= t)) throw Error(ErrorKind::DomainError, "need 0 <= u <= t");
  if (certify) certify_truncation(gen, i, t);
  const auto n = static_cast<Eigen::Index>(gen.n);
  const Eigen::VectorXd row = expm_apply_left(gen, u, Eigen::VectorXd::Unit(n, static_cast<Eigen::Index>(i - 1)));
  const Eigen::VectorXd h = expm_apply(gen, t - u, Eigen::VectorXd::Ones(n));
  Eigen::VectorXd out = row.cwiseProduct(h);
  return out / out.sum();
}

double conditioned_marginal(const TruncatedGenerator& gen, std::size_t i, std::size_t j, double u, double t) {
  check_state(gen, j);
  return conditioned_distribution(gen, i, u, t)[static_cast<Eigen::Index>(j - 1)];
}

Eigen::VectorXd qprocess_distribution(const TruncatedGenerator& gen, std::size_t i, double u, bool certify) {
  check_state(gen, i);
  if (!(u >= 0)) throw Error(ErrorKind::DomainError, "negative time");
  if (certify) certify_truncation(gen, i, u);
  const auto n = static_cast<Eigen::Index>(gen.n);
  Eigen::VectorXd row = expm_apply_left(gen, u, Eigen::VectorXd::Unit(n, static_cast<Eigen::Index>(i - 1)));
  const double scale = std::exp(-gen.params.rho() * u) / static_cast<double>(i);
  for (Eigen::Index j = 0; j < n; ++j) row[j] *= static_cast<double>(j + 1) * scale;
  return row;
}

double qprocess_marginal(const TruncatedGenerator& gen, std::size_t i, std::size_t j, double u) {
  check_state(gen, j);
  return qprocess_distribution(gen, i, u)[static_cast<Eigen::Index>(j - 1)];
}

std::vector<TvRow> tv_decay(const TruncatedGenerator& gen, std::size_t i, double t, std::span<const double> ell_grid) {
  check_state(gen, i);
  certify_truncation(gen, i, t);
  std::vector<TvRow> rows;
  rows.reserve(ell_grid.size());
  for (double ell : ell_grid) {
    if (!(ell >= 0 && ell <= t)) throw Error(ErrorKind::DomainError, "need 0 <= ell <= t");
    const double u = t - ell;
    const Eigen::VectorXd cond = conditioned_distribution(gen, i, u, t, false);
    const Eigen::VectorXd up = qprocess_distribution(gen, i, u, false);
    rows.push_back({ell, tv_distance({cond.data(), static_cast<std::size_t>(cond.size())},
                                     {up.data(), static_cast<std::size_t>(up.size())})});
  }
  return rows;
}

double tv_distance(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::max(a.size(), b.size());
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = i < a.size() ? a[i] : 0.0;
    const double y = i < b.size() ? b[i] : 0.0;
    acc += std::abs(x - y);
  }
  return 0.5 * acc;
}

}  // namespace subcrit
