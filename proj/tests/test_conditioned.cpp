#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "subcrit/conditioned.hpp"
#include "subcrit/error.hpp"
#include "subcrit/spectral.hpp"
#include "subcrit/summary.hpp"

using namespace subcrit;
using doctest::Approx;

TEST_SUITE("conditioned") {

TEST_CASE("extinction curve starts at zero and increases below one") {
  const ExtinctionCurve curve(reference_model(), 100.0, 1e-10);
  CHECK(curve.extinction(0.0) == 0.0);
  double prev = 0;
  for (double s = 0.05; s <= 100.0; s += 0.05) {
    const double f = curve.extinction(s);
    CHECK(f >= prev);
    CHECK(curve.survival(s) > 0);
    prev = f;
  }
  CHECK_THROWS_AS(curve.extinction(100.5), Error);
  CHECK_THROWS_AS(curve.extinction(-0.1), Error);
}

TEST_CASE("binary curve matches the linear birth-death closed form") {
  const ModelParams p = testing::binary(1, 2);
  const ExtinctionCurve curve(p, 40.0, 1e-10);
  for (double s = 0; s <= 40.0; s += 0.0371) {
    const double closed = 2 * (std::exp(s) - std::exp(2 * s)) / (std::exp(s) - 2 * std::exp(2 * s));
    CHECK(std::abs(curve.extinction(s) - closed) < 1e-8);
    // 1 - F = e^{-s} / (2 - e^{-s}) keeps its relative accuracy far into the tail
    const double surv = std::exp(-s) / (2 - std::exp(-s));
    CHECK(curve.survival(s) == Approx(surv).epsilon(1e-7));
  }
}

TEST_CASE("survival decays at rate rho") {
  const ModelParams p = reference_model();
  const ExtinctionCurve curve(p, 200.0, 1e-10);
  const double slope = (curve.log_survival(200.0) - curve.log_survival(150.0)) / 50.0;
  CHECK(slope == Approx(p.rho()).epsilon(1e-8));
}

TEST_CASE("conditioned rates at the boundary cases") {
  const ModelParams p = reference_model();
  const ExtinctionCurve curve(p, 5.0, 1e-10);
  const auto one = conditioned_rates(p, curve, 1, 2.0, 5.0);
  CHECK(one.death == 0.0);
  const auto end = conditioned_rates(p, curve, 4, 5.0, 5.0);
  CHECK(end.death == Approx(p.mu() * 4));
  CHECK(end.total_birth == Approx(p.lambda() * 4));
  for (int k = 2; k <= 4; ++k) CHECK(end.birth[static_cast<std::size_t>(k)] == Approx(p.lambda() * 4 * p.offspring().prob(k)));
}

TEST_CASE("conditioned rates regression at z = 2, t - s = 1") {
  const ModelParams p = reference_model();
  const ExtinctionCurve curve(p, 5.0, 1e-10);
  CHECK(curve.extinction(1.0) == Approx(0.938354592400942).epsilon(1e-9));
  const auto r = conditioned_rates(p, curve, 2, 4.0, 5.0);
  CHECK(r.birth[2] == Approx(3.49021457006703).epsilon(1e-9));
  CHECK(r.birth[3] == Approx(0.752203736431976).epsilon(1e-9));
  CHECK(r.birth[4] == Approx(2.73658326565866).epsilon(1e-9));
  CHECK(r.total_birth == Approx(6.97900157215767).epsilon(1e-9));
  CHECK(r.death == Approx(5.15901478460322).epsilon(1e-9));
}

TEST_CASE("conditioned birth rate falls and death rate rises with s") {
  const ModelParams p = reference_model();
  const double t = 30;
  const ExtinctionCurve curve(p, t, 1e-10);
  for (Count z : {1, 2, 5, 20, 200}) {
    double prev_birth = INFINITY, prev_death = -1;
    for (double s = 0; s <= t; s += 0.01) {
      const auto r = conditioned_rates(p, curve, z, s, t);
      CHECK(r.total_birth <= prev_birth * (1 + 1e-12));
      CHECK(r.death >= prev_death * (1 - 1e-12));
      CHECK(r.death <= p.mu() * static_cast<double>(z) * (1 + 1e-12));
      prev_birth = r.total_birth;
      prev_death = r.death;
    }
  }
}

TEST_CASE("rates stay finite when F rounds to one") {
  const ModelParams p = reference_model();
  const ExtinctionCurve curve(p, 400.0, 1e-10);
  const auto r = conditioned_rates(p, curve, 3, 0.0, 400.0);
  // Q-process limit: birth k at λ p_k (z-1+k), death at μ(z-1)
  CHECK(r.death == Approx(p.mu() * 2).epsilon(1e-8));
  CHECK(r.birth[2] == Approx(p.lambda() * 0.6 * 4).epsilon(1e-8));
}

TEST_CASE("exact sampler paths survive") {
  const ModelParams p = reference_model();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Trajectory traj = simulate_conditioned_exact(p, 1, 10.0, seed);
    traj.check();
    CHECK(traj.terminal_state() >= 1);
  }
}

TEST_CASE("exact sampler marginal matches the matrix-exponential law") {
  const ModelParams p = reference_model();
  const ExtinctionCurve curve(p, 5.0, 1e-10);
  const int n = 20000;
  std::vector<long long> at_u;
  for (int i = 0; i < n; ++i) {
    Rng rng = make_rng(31, static_cast<std::uint64_t>(i));
    at_u.push_back(simulate_conditioned_exact(curve, 1, 5.0, rng).state_at(2.5));
  }
  const TruncatedGenerator gen = build(p, 200);
  const Eigen::VectorXd exact = conditioned_distribution(gen, 1, 2.5, 5.0);
  std::vector<double> oracle(static_cast<std::size_t>(exact.size()) + 1, 0.0);
  for (Eigen::Index j = 0; j < exact.size(); ++j) oracle[static_cast<std::size_t>(j + 1)] = exact[j];
  CHECK(tv_distance(empirical_pmf(at_u), oracle) < 0.03);
}

TEST_CASE("rejection sampler") {
  const ModelParams p = reference_model();
  const RejectionSample now = simulate_conditioned_rejection(p, 1, 0.0, 1, 10);
  CHECK(now.attempts == 1);
  CHECK(now.path.events.empty());

  const ExtinctionCurve curve(p, 3.0, 1e-10);
  const double q = curve.survival(3.0);
  Rng rng = make_rng(41);
  std::size_t attempts = 0;
  const int accepted = 400;
  for (int i = 0; i < accepted; ++i) {
    const auto r = simulate_conditioned_rejection(p, 1, 3.0, rng, 100000);
    CHECK(r.path.terminal_state() >= 1);
    attempts += r.attempts;
  }
  // the acceptance count among `attempts` trials is binomial(attempts, q)
  const double rate = accepted / static_cast<double>(attempts);
  CHECK(std::abs(rate - q) <= 3 * std::sqrt(q * (1 - q) / static_cast<double>(attempts)));

  CHECK_THROWS_AS(simulate_conditioned_rejection(p, 1, 30.0, 1, 5), Error);
}

TEST_CASE("splitting configuration") {
  const SplittingConfig cfg = SplittingConfig::equally_spaced(5.0, 2.0, 50);
  CHECK(cfg.level_times == std::vector<double>{2.0, 4.0, 5.0});
  CHECK_NOTHROW(cfg.check(5.0));
  CHECK_THROWS_AS(cfg.check(6.0), Error);
  SplittingConfig bad = cfg;
  bad.level_times = {2.0, 2.0, 5.0};
  CHECK_THROWS_AS(bad.check(5.0), Error);
  bad.level_times = cfg.level_times;
  bad.particles_per_level = 0;
  CHECK_THROWS_AS(bad.check(5.0), Error);
}

TEST_CASE("splitting survival estimate is unbiased") {
  const ModelParams p = reference_model();
  const double t = 6.0;
  const ExtinctionCurve curve(p, t, 1e-10);
  const SplittingConfig cfg = SplittingConfig::equally_spaced(t, 1.0, 200);
  std::vector<double> est;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SplittingSample s = simulate_conditioned_splitting(p, 1, t, cfg, seed);
    CHECK(s.path.terminal_state() >= 1);
    s.path.check();
    est.push_back(s.survival_estimate);
  }
  CHECK(testing::within_se(mean(est), curve.survival(t), std::sqrt(variance(est) / 100.0)));
}

TEST_CASE("splitting collapse is reported") {
  const ModelParams p = reference_model();
  const SplittingConfig cfg{{40.0}, 2, ResampleRule::Multinomial};
  CHECK_THROWS_AS(simulate_conditioned_splitting(p, 1, 40.0, cfg, 1), Error);
}

}  // TEST_SUITE
