#pragma once

#include <cmath>
#include <vector>

#include "subcrit/model.hpp"
#include "subcrit/rng.hpp"

namespace testing {

inline subcrit::ModelParams binary(double lambda, double mu) {
  return subcrit::ModelParams(lambda, mu, subcrit::OffspringLaw::atom(2));
}

// Random valid subcritical model with support inside {2, ..., 6}.
inline subcrit::ModelParams random_model(subcrit::Rng& rng) {
  std::map<int, double> p;
  double total = 0;
  for (int k = 2; k <= 6; ++k) {
    const double w = subcrit::uniform01(rng) < 0.3 ? 0.0 : subcrit::uniform01(rng);
    if (w > 0) p[k] = w, total += w;
  }
  if (p.empty()) p[2] = total = 1;
  for (auto& [k, w] : p) w /= total;
  subcrit::OffspringLaw law(p);
  const double lambda = 0.2 + 3 * subcrit::uniform01(rng);
  // ρ = λ(m-1) - μ < 0 with a margin
  const double mu = lambda * (law.mean() - 1) * (1.05 + 2 * subcrit::uniform01(rng));
  return subcrit::ModelParams(lambda, mu, law);
}

// |a - b| within k standard errors, with se estimated from the sample.
inline bool within_se(double estimate, double truth, double se, double k = 3) {
  return std::abs(estimate - truth) <= k * se;
}

}  // namespace testing
