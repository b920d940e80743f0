#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace subcrit {

/// Offspring law (p_k) on a finite support {2, ..., M}. At a birth event the
/// parent is replaced by k individuals with probability p_k.
class OffspringLaw {
 public:
  /// Validates and (if the total is within 1e-12 of one) renormalizes.
  /// Throws Error{BadLaw} otherwise.
  explicit OffspringLaw(const std::map<int, double>& probs);

  /// Single-atom law p_k = 1.
  static OffspringLaw atom(int k);

  int min_size() const noexcept { return min_; }
  int max_size() const noexcept { return static_cast<int>(p_.size()) - 1; }

  /// p_k, zero outside the support.
  double prob(int k) const noexcept;

  /// Dense table indexed by k in [0, max_size()].
  const std::vector<double>& table() const noexcept { return p_; }

  /// Sizes k with p_k > 0, ascending.
  std::vector<int> support() const;
  std::map<int, double> to_map() const;

  double mean() const noexcept;
  double variance() const noexcept;
  double pgf(double s) const noexcept;

  /// Inverse-CDF draw; u in [0, 1).
  int sample(double u) const noexcept;

  friend bool operator==(const OffspringLaw&, const OffspringLaw&) = default;

 private:
  OffspringLaw() = default;
  void finalize();

  std::vector<double> p_;
  std::vector<double> cdf_;
  int min_ = 2;
};

/// Σ p_k s^k. Throws Error{DomainError} when s is outside [0, 1].
double offspring_pgf(const OffspringLaw& law, double s);

/// The size-biased law k p_k / m.
OffspringLaw size_biased(const OffspringLaw& law);

struct DerivedQuantities {
  double m = 0;
  double sigma2 = 0;
  double rho = 0;
  double pi_up = 0;      ///< mean of the Q-process stationary law
  double lambda_up = 0;  ///< Q-consistent limit of the classical birth-rate MLE
  double mu_up = 0;      ///< Q-consistent limit of the classical death-rate MLE
  std::map<int, double> pk_up;
};

/// Rates and offspring law of a subcritical birth-and-death process with
/// multiple births. Immutable; construction enforces every invariant.
class ModelParams {
 public:
  ModelParams(double lambda, double mu, OffspringLaw offspring);

  double lambda() const noexcept { return lambda_; }
  double mu() const noexcept { return mu_; }
  const OffspringLaw& offspring() const noexcept { return law_; }
  const DerivedQuantities& derived() const noexcept { return derived_; }

  double m() const noexcept { return derived_.m; }
  double rho() const noexcept { return derived_.rho; }
  double pi_up() const noexcept { return derived_.pi_up; }

 private:
  double lambda_;
  double mu_;
  OffspringLaw law_;
  DerivedQuantities derived_;
};

/// Checks rates and law; throws NonPositiveRate, BadLaw or NotSubcritical.
void validate(double lambda, double mu, const std::map<int, double>& probs);

DerivedQuantities derive(const ModelParams& params);

/// Closed forms evaluated from raw scalars (used for plug-in estimates and
/// bias surfaces, where the inputs need not form a valid model).
double pi_up_of(double lambda, double mu, double m, double sigma2);

/// Parameters of the worked multiple-birth example: λ=2, μ=5,
/// (p2, p3, p4) = (0.6, 0.1, 0.3).
ModelParams reference_model();

}  // namespace subcrit
