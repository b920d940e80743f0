#include <doctest.h>

#include "helpers.hpp"
#include "subcrit/error.hpp"
#include "subcrit/model.hpp"

using namespace subcrit;
using doctest::Approx;

TEST_SUITE("model") {

TEST_CASE("reference model derived quantities") {
  const ModelParams p = reference_model();
  const auto& d = p.derived();
  CHECK(d.m == Approx(2.7).epsilon(1e-14));
  CHECK(d.sigma2 == Approx(0.81).epsilon(1e-12));
  CHECK(d.rho == Approx(-1.6).epsilon(1e-14));
  CHECK(d.pi_up == Approx(7.75).epsilon(1e-12));
  CHECK(std::abs(d.lambda_up - 2.4387) < 5e-5);
  CHECK(std::abs(d.mu_up - 4.3548) < 5e-5);
  CHECK(std::abs(d.pk_up.at(2) - 0.5556) < 5e-5);
  CHECK(std::abs(d.pk_up.at(3) - 0.1032) < 5e-5);
  CHECK(std::abs(d.pk_up.at(4) - 0.3413) < 5e-5);
}

TEST_CASE("validation rejects critical, supercritical and malformed input") {
  CHECK_NOTHROW(ModelParams(2, 5, OffspringLaw({{2, 0.6}, {3, 0.1}, {4, 0.3}})));
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::BadInput;
  };
  CHECK(kind_of([] { testing::binary(1, 1); }) == ErrorKind::NotSubcritical);
  CHECK(kind_of([] { testing::binary(1, 0.5); }) == ErrorKind::NotSubcritical);
  CHECK(kind_of([] { testing::binary(0, 1); }) == ErrorKind::NonPositiveRate);
  CHECK(kind_of([] { testing::binary(1, -2); }) == ErrorKind::NonPositiveRate);
  CHECK(kind_of([] { OffspringLaw({{2, 0.5}, {3, 0.4}}); }) == ErrorKind::BadLaw);
  CHECK(kind_of([] { OffspringLaw({{1, 1.0}}); }) == ErrorKind::BadLaw);
  CHECK(kind_of([] { OffspringLaw({{2, 1.2}, {3, -0.2}}); }) == ErrorKind::BadLaw);
  CHECK(kind_of([] { OffspringLaw(std::map<int, double>{}); }) == ErrorKind::BadLaw);
}

TEST_CASE("probabilities within 1e-12 are renormalized") {
  const OffspringLaw law({{2, 0.5}, {3, 0.5 + 5e-13}});
  CHECK(law.prob(2) + law.prob(3) == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("binary closed forms") {
  const ModelParams p = testing::binary(1, 2);
  CHECK(p.derived().lambda_up == Approx(4.0 / 3).epsilon(1e-14));
  CHECK(p.derived().mu_up == Approx(4.0 / 3).epsilon(1e-14));
  // (μ + λ(m-1)²) / (μ - λ(m-1)) against the general formula
  CHECK(p.pi_up() == Approx(3.0).epsilon(1e-14));
  CHECK(p.pi_up() == Approx((2.0 + 1.0) / (2.0 - 1.0)).epsilon(1e-14));
}

TEST_CASE("pgf") {
  CHECK(offspring_pgf(OffspringLaw::atom(2), 0.5) == Approx(0.25));
  CHECK(offspring_pgf(reference_model().offspring(), 0.5) == Approx(0.18125).epsilon(1e-14));
  CHECK(offspring_pgf(reference_model().offspring(), 1.0) == Approx(1.0).epsilon(1e-15));
  CHECK(offspring_pgf(reference_model().offspring(), 0.0) == 0.0);
  CHECK_THROWS_AS(offspring_pgf(OffspringLaw::atom(2), 1.5), Error);
  CHECK_THROWS_AS(offspring_pgf(OffspringLaw::atom(2), -0.1), Error);
}

TEST_CASE("size-biased law") {
  CHECK(size_biased(OffspringLaw::atom(2)) == OffspringLaw::atom(2));
  const OffspringLaw law = reference_model().offspring();
  const OffspringLaw sb = size_biased(law);
  CHECK(sb.prob(2) == Approx(1.2 / 2.7).epsilon(1e-14));
  CHECK(sb.prob(3) == Approx(0.3 / 2.7).epsilon(1e-14));
  CHECK(sb.prob(4) == Approx(1.2 / 2.7).epsilon(1e-14));
  CHECK(sb.mean() == Approx((law.variance() + law.mean() * law.mean()) / law.mean()).epsilon(1e-13));
}

TEST_CASE("inverse-CDF sampling covers the support") {
  const OffspringLaw law = reference_model().offspring();
  CHECK(law.sample(0.0) == 2);
  CHECK(law.sample(0.59) == 2);
  CHECK(law.sample(0.61) == 3);
  CHECK(law.sample(0.69) == 3);
  CHECK(law.sample(0.71) == 4);
  CHECK(law.sample(0.999999) == 4);
}

TEST_CASE("identities hold for random valid models") {
  Rng rng = make_rng(2024);
  for (int rep = 0; rep < 200; ++rep) {
    const ModelParams p = testing::random_model(rng);
    const auto& d = p.derived();
    CHECK(d.rho < 0);
    CHECK(d.pi_up > 1);
    double total = 0;
    for (const auto& [k, v] : d.pk_up) total += v;
    CHECK(total == Approx(1.0).epsilon(1e-12));
    CHECK((d.lambda_up - p.lambda()) / p.lambda() == Approx((d.m - 1) / d.pi_up).epsilon(1e-10));
    CHECK((p.mu() - d.mu_up) / p.mu() == Approx(1 / d.pi_up).epsilon(1e-10));
    // derive is a pure function
    const DerivedQuantities again = derive(p);
    CHECK(again.lambda_up == d.lambda_up);
    CHECK(again.pi_up == d.pi_up);
  }
}

TEST_CASE("deterministic offspring: Q-limits are critical") {
  for (int k = 2; k <= 6; ++k) {
    const ModelParams p(1.3, 1.3 * (k - 1) * 1.7, OffspringLaw::atom(k));
    const auto& d = p.derived();
    CHECK(std::abs(d.lambda_up * (k - 1) - d.mu_up) < 1e-10);
  }
}

}  // TEST_SUITE
