#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "subcrit/conditioned.hpp"
#include "subcrit/error.hpp"
#include "subcrit/estimators.hpp"
#include "subcrit/qprocess.hpp"

using namespace subcrit;
using doctest::Approx;

namespace {

SufficientStats synthetic(double t, double tau, Count b, Count d) {
  SufficientStats s;
  s.t = t;
  s.exposure = tau;
  s.births = b;
  s.deaths = d;
  s.births_by_size = {0, 0, b};
  s.births_by_state = {{}, {0, 0, b}};
  return s;
}

// Births spread evenly over states `from`..`to` with offspring sizes 2 and 3.
SufficientStats spread(double t, double tau, Count from, Count to, Count per_state) {
  SufficientStats s;
  s.t = t;
  s.exposure = tau;
  s.deaths = 3 * per_state;
  s.births_by_state.resize(static_cast<std::size_t>(to + 1));
  s.births_by_size = {0, 0, 0, 0};
  for (Count r = from; r <= to; ++r) {
    s.births_by_state[static_cast<std::size_t>(r)] = {0, 0, per_state - per_state / 3, per_state / 3};
    s.births += per_state;
    s.births_by_size[2] += per_state - per_state / 3;
    s.births_by_size[3] += per_state / 3;
  }
  return s;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::BadInput;
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("classical MLE") {
  const RateEstimate e = mle_classic(synthetic(1, 2, 6, 3));
  CHECK(e.lambda == Approx(3.0));
  CHECK(e.mu == Approx(1.5));
  CHECK(mle_classic(synthetic(1, 2, 0, 3)).lambda == 0.0);
  CHECK(kind_of([] { mle_classic(synthetic(1, 0, 0, 0)); }) == ErrorKind::ZeroExposure);
}

TEST_CASE("C-consistent rates") {
  const CConsistentEstimate e = c_consistent(synthetic(2, 4, 10, 5), 2.0);
  CHECK(e.lambda == Approx(10.0 / 6.0));
  REQUIRE(e.mu.has_value());
  CHECK(*e.mu == Approx(2.5));
  const CConsistentEstimate at0 = c_consistent(synthetic(0, 4, 10, 5), 2.0);
  CHECK(at0.lambda == Approx(2.5));
  CHECK(*at0.mu == Approx(1.25));
  CHECK_FALSE(c_consistent(synthetic(4, 3, 10, 5), 2.0).mu.has_value());
}

TEST_CASE("bias corrections are exact rescalings and point the right way") {
  Rng rng = make_rng(5);
  for (int rep = 0; rep < 500; ++rep) {
    const double t = 0.1 + 50 * uniform01(rng);
    const double tau = t * (0.2 + 10 * uniform01(rng));
    const auto b = static_cast<Count>(1000 * uniform01(rng));
    const auto d = static_cast<Count>(1000 * uniform01(rng));
    const double m = 2 + 3 * uniform01(rng);
    const SufficientStats s = synthetic(t, tau, b, d);
    const RateEstimate hat = mle_classic(s);
    const CConsistentEstimate tilde = c_consistent(s, m);
    CHECK(tilde.lambda == Approx(tau / (tau + (m - 1) * t) * hat.lambda).epsilon(1e-12));
    CHECK(tilde.lambda <= hat.lambda);
    if (tau > t) {
      CHECK(*tilde.mu == Approx(tau / (tau - t) * hat.mu).epsilon(1e-12));
      CHECK(*tilde.mu >= hat.mu);
    } else {
      CHECK_FALSE(tilde.mu.has_value());
    }
  }
}

TEST_CASE("offspring probability estimators") {
  const SufficientStats s = spread(10, 43, 2, 8, 30);
  CHECK(pk_estimators(synthetic(1, 3, 7, 2), 2, KnownLambda{1.0}).hat == 1.0);

  const double lambda_tilde = c_consistent(s, 2.5).lambda;
  for (int k : {2, 3}) {
    const PkEstimate plugin = pk_estimators(s, k, PluginLambda{2.5});
    const PkEstimate known = pk_estimators(s, k, KnownLambda{lambda_tilde});
    CHECK(plugin.tilde == Approx(known.tilde).epsilon(1e-13));
    CHECK(plugin.hat == Approx(static_cast<double>(s.births_of_size(k)) / static_cast<double>(s.births)));
    CHECK(known.tilde == Approx(static_cast<double>(s.births_of_size(k)) / (lambda_tilde * (43 + (k - 1) * 10.0))));
  }
  CHECK(kind_of([] { pk_estimators(synthetic(1, 3, 0, 2), 2, KnownLambda{1.0}); }) == ErrorKind::NoBirths);
}

TEST_CASE("multinomial probabilities sum to one") {
  CHECK(pk_multinomial(synthetic(1, 3, 7, 2), {2}).at(2) == 1.0);
  Rng rng = make_rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    SufficientStats s = synthetic(1 + 10 * uniform01(rng), 5 + 50 * uniform01(rng), 0, 0);
    s.births_by_size.assign(6, 0);
    for (int k = 2; k <= 5; ++k) {
      s.births_by_size[static_cast<std::size_t>(k)] = static_cast<Count>(100 * uniform01(rng));
      s.births += s.births_by_size[static_cast<std::size_t>(k)];
    }
    if (s.births == 0) continue;
    double total = 0;
    for (const auto& [k, p] : pk_multinomial(s, {2, 3, 4, 5})) total += p;
    CHECK(total == Approx(1.0).epsilon(1e-14));
  }
  CHECK(kind_of([] { pk_multinomial(synthetic(1, 3, 0, 0), {2}); }) == ErrorKind::NoBirths);
}

TEST_CASE("skeleton round trip, binary") {
  const ModelParams p = testing::binary(1, 2);
  const SkeletonMoments exact = skeleton_moments_exact(p, 0.5);
  CHECK(exact.m_star == Approx(std::exp(-0.5)).epsilon(1e-14));
  const RateEstimate r = binary_skeleton_rates(exact.m_star, exact.sigma2_star, 0.5);
  CHECK(std::abs(r.lambda - 1) < 1e-10);
  CHECK(std::abs(r.mu - 2) < 1e-10);
}

TEST_CASE("skeleton round trip, general") {
  Rng rng = make_rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const ModelParams p = testing::random_model(rng);
    for (double delta : {0.1, 0.5, 1.0}) {
      const SkeletonMoments exact = skeleton_moments_exact(p, delta);
      const SkeletonSolution s = general_skeleton_solve(exact.m_star, exact.sigma2_star, p.derived().lambda_up,
                                                        p.derived().mu_up, delta);
      CHECK(s.lambda == Approx(p.lambda()).epsilon(1e-10));
      CHECK(s.mu == Approx(p.mu()).epsilon(1e-10));
      CHECK(s.m == Approx(p.m()).epsilon(1e-10));
      CHECK(s.sigma2 == Approx(p.derived().sigma2).scale(1).epsilon(1e-9));
    }
  }
}

TEST_CASE("skeleton degenerate inputs") {
  const Trajectory flat{1, 5.0, {}};
  CHECK(kind_of([&] { skeleton_moments(flat, 0.5); }) == ErrorKind::SkeletonDegenerate);
  CHECK(kind_of([] { binary_skeleton_rates(1.2, 0.3, 0.5); }) == ErrorKind::SkeletonDegenerate);
  CHECK(kind_of([] { general_skeleton_solve(0.5, -1.0, 2.0, 4.0, 0.5); }) == ErrorKind::SkeletonDegenerate);
}

TEST_CASE("fixed point on synthetic statistics") {
  const SufficientStats s = spread(10, 43, 2, 8, 30);
  const QmleFixedPoint fp = qmle_fixed_point(s);
  CHECK(std::abs(qmle_map(s, fp.m) - fp.m) < 1e-10);
  CHECK(fp.residual < 1e-10);
  CHECK(fp.lambda == Approx(static_cast<double>(s.births) / (43 + (fp.m - 1) * 10)));
  CHECK(fp.mu == Approx(90.0 / 33.0));

  // every birth from state 1: F(x) = 1 - τ/t + x has no fixed point unless τ = t
  CHECK(kind_of([] { qmle_fixed_point(synthetic(2, 5, 10, 3)); }) == ErrorKind::NoFixedPoint);
  CHECK(kind_of([] { qmle_fixed_point(synthetic(2, 2, 10, 3)); }) == ErrorKind::DegenerateExposure);
}

TEST_CASE("the fixed-point map has slope at least one") {
  const SufficientStats s = spread(10, 43, 1, 12, 17);
  for (double x = 0.05; x < 40; x += 0.05) {
    CHECK(qmle_map(s, x + 1e-3) - qmle_map(s, x) >= 1e-3 * (1 - 1e-9));
  }
}

TEST_CASE("finite-support variant") {
  const SufficientStats s = synthetic(2, 9, 12, 4);
  const QmleFiniteSupport fs = qmle_finite_support(s, {2});
  CHECK(fs.pk.at(2) == 1.0);
  CHECK(fs.lambda == Approx(12.0 / 11.0));
  CHECK(fs.lambda == Approx(c_consistent(s, 2.0).lambda));
  CHECK(fs.m == Approx(2.0));
  CHECK(fs.mu == Approx(4.0 / 7.0));
}

TEST_CASE("Q-process likelihood on one long path") {
  const ModelParams p = reference_model();
  const Trajectory traj = simulate_generator(p, 1, 2000.0, 21);
  const SufficientStats s = qprocess_stats(traj, 2000.0);
  const QmleFixedPoint fp = qmle_fixed_point(s);
  CHECK(fp.lambda == Approx(2.0).epsilon(0.05));
  CHECK(fp.mu == Approx(5.0).epsilon(0.05));
  CHECK(fp.m == Approx(2.7).epsilon(0.05));
  CHECK(fp.residual < 1e-10);
}

TEST_CASE("standard errors and intervals") {
  const ModelParams p = reference_model();
  const double se_l = se_lambda_tilde(2, p.pi_up(), p.m(), 75);
  const double se_m = se_mu_tilde(5, p.pi_up(), 75);
  CHECK(se_l == Approx(0.0531).epsilon(1e-3));
  CHECK(se_m == Approx(0.0994).epsilon(1e-3));
  CHECK(se_l < se_m);
  CHECK(se_pk_tilde(0.6, 2, p.pi_up(), 2, 75) == Approx(std::sqrt(0.6 / (75 * 2 * 7.75 + 75 * 2))));
  CHECK(normal_quantile(0.95) == Approx(1.959963984540054).epsilon(1e-14));
  const Interval ci = asymptotic_ci(2.0, se_l, 0.95);
  CHECK(ci.lower < 2.0);
  CHECK(ci.upper > 2.0);
  CHECK(ci.upper - 2.0 == Approx(2.0 - ci.lower));
  CHECK_THROWS_AS(normal_quantile(1.0), Error);
}

TEST_CASE("combined report on a conditioned path") {
  const ModelParams p = reference_model();
  const Trajectory traj = simulate_conditioned_exact(p, 5, 75.0, 3);
  EstimateOptions opt;
  opt.m = p.m();
  opt.lambda = p.lambda();
  opt.support = {2, 3, 4};
  opt.skeleton_deltas = {0.5};
  std::vector<std::string> failures;
  const auto reports = estimate_all(traj, 75.0, opt, &failures);
  CHECK(failures.empty());
  CHECK(reports.size() == 8);  // PK_TILDE or PK_TILDE_PLUGIN, not both
  for (const auto& r : reports) {
    for (const auto& e : r.estimates) {
      if (e.se) {
        CHECK(*e.se >= 0);
        CHECK(*e.lower <= *e.value);
        CHECK(*e.value <= *e.upper);
      }
    }
  }
  std::ostringstream out;
  write_report_csv_header(out);
  for (const auto& r : reports) write_report_csv(out, r);
  const std::string text = out.str();
  CHECK(text.rfind("estimator_id,t,parameter,value,se,ci_lower,ci_upper,diagnostics\n", 0) == 0);
  CHECK(text.find("C_CONSISTENT,75,lambda,") != std::string::npos);
  CHECK(text.find("PK_HAT,75,p2,") != std::string::npos);
  CHECK(text.find(",NA,NA,NA,") != std::string::npos);
}

TEST_CASE("short path reports mu as undefined") {
  const Trajectory traj{1, 0.5, {}};
  EstimateOptions opt;
  std::vector<std::string> failures;
  const auto reports = estimate_all(traj, 0.5, opt, &failures);
  const auto it = std::find_if(reports.begin(), reports.end(),
                               [](const EstimateReport& r) { return r.id == EstimatorId::CConsistent; });
  REQUIRE(it != reports.end());
  REQUIRE(it->find("mu") != nullptr);
  CHECK_FALSE(it->find("mu")->value.has_value());
  CHECK_THROWS_AS(it->value("mu"), Error);
  CHECK_FALSE(failures.empty());
}

}  // TEST_SUITE
