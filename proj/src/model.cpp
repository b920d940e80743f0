#include "subcrit/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "subcrit/error.hpp"

namespace subcrit {

namespace {

constexpr double kSumTolerance = 1e-12;
constexpr int kMaxSupport = 100000;

}  // namespace

OffspringLaw::OffspringLaw(const std::map<int, double>& probs) {
  if (probs.empty()) throw Error(ErrorKind::BadLaw, "empty offspring law");
  int max_k = 0;
  double total = 0;
  for (const auto& [k, p] : probs) {
    if (k < 2) throw Error(ErrorKind::BadLaw, "offspring size " + std::to_string(k) + " < 2");
    if (k > kMaxSupport) throw Error(ErrorKind::BadLaw, "offspring support too large");
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::BadLaw, "p_" + std::to_string(k) + " outside [0, 1]");
    }
    max_k = std::max(max_k, k);
    total += p;
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw Error(ErrorKind::BadLaw, "probabilities sum to " + std::to_string(total));
  }
  p_.assign(static_cast<std::size_t>(max_k) + 1, 0.0);
  for (const auto& [k, p] : probs) p_[k] = p / total;
  finalize();
}

OffspringLaw OffspringLaw::atom(int k) { return OffspringLaw({{k, 1.0}}); }

void OffspringLaw::finalize() {
  // Trim trailing zeros so max_size() is the true support maximum.
  while (p_.size() > 3 && p_.back() == 0.0) p_.pop_back();
  min_ = 2;
  while (min_ < static_cast<int>(p_.size()) && p_[min_] == 0.0) ++min_;
  if (min_ >= static_cast<int>(p_.size())) throw Error(ErrorKind::BadLaw, "no positive mass");
  cdf_.assign(p_.size(), 0.0);
  double acc = 0;
  for (std::size_t k = 0; k < p_.size(); ++k) {
    acc += p_[k];
    cdf_[k] = acc;
  }
}

double OffspringLaw::prob(int k) const noexcept {
  if (k < 0 || k >= static_cast<int>(p_.size())) return 0.0;
  return p_[k];
}

std::vector<int> OffspringLaw::support() const {
  std::vector<int> out;
  for (int k = min_; k <= max_size(); ++k) {
    if (p_[k] > 0) out.push_back(k);
  }
  return out;
}

std::map<int, double> OffspringLaw::to_map() const {
  std::map<int, double> out;
  for (int k : support()) out[k] = p_[k];
  return out;
}

double OffspringLaw::mean() const noexcept {
  double m = 0;
  for (std::size_t k = 0; k < p_.size(); ++k) m += static_cast<double>(k) * p_[k];
  return m;
}

double OffspringLaw::variance() const noexcept {
  const double m = mean();
  double v = 0;
  for (std::size_t k = 0; k < p_.size(); ++k) {
    const double d = static_cast<double>(k) - m;
    v += d * d * p_[k];
  }
  return v;
}

double OffspringLaw::pgf(double s) const noexcept {
  // Horner from the top.
  double acc = 0;
  for (std::size_t k = p_.size(); k-- > 0;) acc = acc * s + p_[k];
  return acc;
}

int OffspringLaw::sample(double u) const noexcept {
  const double target = u * cdf_.back();
  for (int k = min_; k < static_cast<int>(cdf_.size()); ++k) {
    if (target < cdf_[k]) return k;
  }
  return max_size();
}

double offspring_pgf(const OffspringLaw& law, double s) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw Error(ErrorKind::DomainError, "pgf argument " + std::to_string(s) + " outside [0, 1]");
  }
  return law.pgf(s);
}

OffspringLaw size_biased(const OffspringLaw& law) {
  const double m = law.mean();
  std::map<int, double> biased;
  double total = 0;
  for (int k : law.support()) {
    biased[k] = k * law.prob(k) / m;
    total += biased[k];
  }
  // Absorb rounding so the constructor's tolerance check always passes.
  for (auto& [k, p] : biased) p /= total;
  return OffspringLaw(biased);
}

double pi_up_of(double lambda, double mu, double m, double sigma2) {
  const double rho = lambda * (m - 1.0) - mu;
  return 1.0 - lambda * (sigma2 + m * (m - 1.0)) / rho;
}

void validate(double lambda, double mu, const std::map<int, double>& probs) {
  ModelParams(lambda, mu, OffspringLaw(probs));
}

ModelParams::ModelParams(double lambda, double mu, OffspringLaw offspring)
    : lambda_(lambda), mu_(mu), law_(std::move(offspring)) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::NonPositiveRate, "lambda must be positive");
  }
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw Error(ErrorKind::NonPositiveRate, "mu must be positive");
  }
  DerivedQuantities d;
  d.m = law_.mean();
  d.sigma2 = law_.variance();
  d.rho = lambda_ * (d.m - 1.0) - mu_;
  if (!(d.rho < 0.0)) {
    throw Error(ErrorKind::NotSubcritical, "rho = " + std::to_string(d.rho) + " is not negative");
  }
  d.pi_up = 1.0 - lambda_ * (d.sigma2 + d.m * (d.m - 1.0)) / d.rho;
  d.lambda_up = (lambda_ * (d.pi_up - 1.0) + lambda_ * d.m) / d.pi_up;
  d.mu_up = mu_ * (d.pi_up - 1.0) / d.pi_up;
  for (int k : law_.support()) {
    d.pk_up[k] = law_.prob(k) * (d.pi_up + k - 1.0) / (d.pi_up + d.m - 1.0);
  }
  derived_ = std::move(d);
}

DerivedQuantities derive(const ModelParams& params) { return params.derived(); }

ModelParams reference_model() {
  return ModelParams(2.0, 5.0, OffspringLaw({{2, 0.6}, {3, 0.1}, {4, 0.3}}));
}

}  // namespace subcrit
