#include "subcrit/conditioned.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "subcrit/error.hpp"
#include "subcrit/sim.hpp"

namespace subcrit {

namespace {

// Node spacing of the stored curve; cubic Hermite error is O(h^4 |L''''|).
constexpr double kNodeSpacing = 0.0025;
constexpr std::size_t kMinNodes = 16;

// -log F given log(1 - F). Zero only when 1 - F underflows.
double neg_log_extinction(double log_g) {
  return -std::log1p(-std::exp(log_g));
}

// (1 - F^a) / (1 - F^z) with F = exp(-x). For x = 0 this is the F -> 1
// limit a / z, which is also where the Q-process rates come from.
double survival_ratio(double a, double z, double x) {
  if (a == 0) return 0.0;
  if (x == 0) return a / z;
  return std::expm1(-a * x) / std::expm1(-z * x);
}

}  // namespace

double ExtinctionCurve::log_survival_slope(const ModelParams& params, double log_g) {
  // d/ds log G = λ (1 - P(1 - G)) / G - (λ + μ),  G = 1 - F.
  const double g = std::exp(log_g);
  const double log_f = std::log1p(-g);
  const auto& p = params.offspring().table();
  double secant = 0;
  if (g == 0) {
    secant = params.m();
  } else {
    double acc = 0;
    for (int k = params.offspring().min_size(); k < static_cast<int>(p.size()); ++k) {
      if (p[k] > 0) acc += p[k] * -std::expm1(k * log_f);
    }
    secant = acc / g;
  }
  return params.lambda() * secant - (params.lambda() + params.mu());
}

ExtinctionCurve::ExtinctionCurve(const ModelParams& params, double t_max, double tol)
    : params_(params), t_max_(t_max) {
  if (!(t_max > 0) || !std::isfinite(t_max)) throw Error(ErrorKind::DomainError, "t_max must be positive");
  if (!(tol > 0)) throw Error(ErrorKind::DomainError, "tolerance must be positive");
  const auto n = std::max(kMinNodes, static_cast<std::size_t>(std::ceil(t_max / kNodeSpacing)));
  step_ = t_max / static_cast<double>(n);
  grid_.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) grid_[i] = step_ * static_cast<double>(i);
  grid_.back() = t_max;

  namespace ode = boost::numeric::odeint;
  using State = std::array<double, 1>;
  auto rhs = [&](const State& x, State& dxdt, double) { dxdt[0] = log_survival_slope(params_, x[0]); };
  State x{0.0};
  log_g_.reserve(grid_.size());
  try {
    ode::integrate_times(ode::make_dense_output(tol, tol, ode::runge_kutta_dopri5<State>()), rhs, x,
                         grid_.begin(), grid_.end(), step_,
                         [&](const State& v, double) { log_g_.push_back(v[0]); });
  } catch (const std::exception& e) {
    throw Error(ErrorKind::SolverFailure, std::string("extinction ODE: ") + e.what());
  }
  if (log_g_.size() != grid_.size()) throw Error(ErrorKind::SolverFailure, "extinction ODE stopped early");
  slope_.resize(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (!std::isfinite(log_g_[i])) throw Error(ErrorKind::SolverFailure, "non-finite extinction curve");
    slope_[i] = log_survival_slope(params_, log_g_[i]);
  }
}

double ExtinctionCurve::log_survival(double s) const {
  if (!(s >= 0.0 && s <= t_max_ * (1 + 1e-12))) {
    throw Error(ErrorKind::DomainError, "s = " + std::to_string(s) + " outside extinction curve range");
  }
  const std::size_t last = grid_.size() - 1;
  auto i = static_cast<std::size_t>(s / step_);
  if (i >= last) i = last - 1;
  const double h = grid_[i + 1] - grid_[i];
  const double u = std::clamp((s - grid_[i]) / h, 0.0, 1.0);
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1;
  const double h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2;
  const double h11 = u3 - u2;
  const double v = h00 * log_g_[i] + h10 * h * slope_[i] + h01 * log_g_[i + 1] + h11 * h * slope_[i + 1];
  return std::min(v, 0.0);
}

double ExtinctionCurve::survival(double s) const { return std::exp(log_survival(s)); }

double ExtinctionCurve::extinction(double s) const { return -std::expm1(log_survival(s)); }

ExtinctionCurve extinction_prob(const ModelParams& params, double t_max, double tol) {
  return ExtinctionCurve(params, t_max, tol);
}

ConditionedRates conditioned_rates(const ModelParams& params, const ExtinctionCurve& curve, Count z,
                                   double s, double t) {
  if (z < 1) throw Error(ErrorKind::DomainError, "conditioned rates need z >= 1");
  if (!(s >= 0 && s <= t)) throw Error(ErrorKind::DomainError, "need 0 <= s <= t");
  const double x = neg_log_extinction(curve.log_survival(t - s));
  const auto zd = static_cast<double>(z);
  const auto& p = params.offspring().table();
  ConditionedRates r;
  r.birth.assign(p.size(), 0.0);
  for (int k = params.offspring().min_size(); k < static_cast<int>(p.size()); ++k) {
    if (p[k] == 0) continue;
    r.birth[k] = params.lambda() * p[k] * zd * survival_ratio(zd - 1 + k, zd, x);
    r.total_birth += r.birth[k];
  }
  r.death = params.mu() * zd * survival_ratio(zd - 1, zd, x);
  return r;
}

Trajectory simulate_conditioned_exact(const ExtinctionCurve& curve, Count z0, double t, Rng& rng) {
  if (z0 < 1) throw Error(ErrorKind::DomainError, "z0 must be positive");
  if (!(t >= 0) || t > curve.t_max() * (1 + 1e-12)) {
    throw Error(ErrorKind::DomainError, "horizon outside extinction curve range");
  }
  const ModelParams& params = curve.params();
  const double lambda = params.lambda();
  const double mu = params.mu();
  const auto& p = params.offspring().table();
  const int kmin = params.offspring().min_size();
  const int kmax = params.offspring().max_size();

  std::vector<double> birth(p.size(), 0.0);
  // Fills `birth` and returns (total birth, death) at (z, s).
  auto rates = [&](Count z, double s, double& death) {
    const double x = neg_log_extinction(curve.log_survival(t - s));
    const auto zd = static_cast<double>(z);
    double total = 0;
    for (int k = kmin; k <= kmax; ++k) {
      birth[k] = p[k] == 0 ? 0.0 : lambda * p[k] * zd * survival_ratio(zd - 1 + k, zd, x);
      total += birth[k];
    }
    death = mu * zd * survival_ratio(zd - 1, zd, x);
    return total;
  };

  Trajectory traj;
  traj.z0 = z0;
  traj.horizon = t;
  Count z = z0;
  double s = 0;
  double death = 0;
  double bound = rates(z, s, death) + mu * static_cast<double>(z);
  for (;;) {
    s += exponential(rng, bound);
    if (s >= t) break;
    const double birth_total = rates(z, s, death);
    const double total = birth_total + death;
    if (total > bound * (1 + 1e-9)) {
      throw Error(ErrorKind::SolverFailure, "thinning bound violated");
    }
    const double u = uniform01(rng) * bound;
    if (u < total) {
      Event e;
      e.time = s;
      e.state_before = z;
      if (u < death) {
        e.kind = EventKind::Death;
      } else {
        e.kind = EventKind::Birth;
        double acc = death;
        e.size = kmax;
        for (int k = kmin; k <= kmax; ++k) {
          acc += birth[k];
          if (u < acc) {
            e.size = k;
            break;
          }
        }
      }
      traj.events.push_back(e);
      z = e.state_after();
      bound = rates(z, s, death) + mu * static_cast<double>(z);
    } else {
      bound = birth_total + mu * static_cast<double>(z);
    }
  }
  return traj;
}

Trajectory simulate_conditioned_exact(const ModelParams& params, Count z0, double t, std::uint64_t seed) {
  if (t == 0) return Trajectory{z0, 0.0, {}};
  const ExtinctionCurve curve(params, t, 1e-10);
  Rng rng = make_rng(seed);
  return simulate_conditioned_exact(curve, z0, t, rng);
}

RejectionSample simulate_conditioned_rejection(const ModelParams& params, Count z0, double t, Rng& rng,
                                               std::size_t max_attempts) {
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
    Trajectory path = simulate(params, z0, t, rng);
    if (path.terminal_state() > 0) return {std::move(path), attempt};
  }
  throw Error(ErrorKind::AttemptsExhausted,
              "no surviving path in " + std::to_string(max_attempts) + " attempts");
}

RejectionSample simulate_conditioned_rejection(const ModelParams& params, Count z0, double t,
                                               std::uint64_t seed, std::size_t max_attempts) {
  Rng rng = make_rng(seed);
  return simulate_conditioned_rejection(params, z0, t, rng, max_attempts);
}

SplittingConfig SplittingConfig::equally_spaced(double t, double spacing, std::size_t particles) {
  if (!(spacing > 0)) throw Error(ErrorKind::ConfigError, "level spacing must be positive");
  SplittingConfig cfg;
  cfg.particles_per_level = particles;
  for (double level = spacing; level < t * (1 - 1e-12); level += spacing) cfg.level_times.push_back(level);
  cfg.level_times.push_back(t);
  return cfg;
}

void SplittingConfig::check(double t) const {
  if (level_times.empty()) throw Error(ErrorKind::ConfigError, "splitting needs at least one level");
  if (particles_per_level < 1) throw Error(ErrorKind::ConfigError, "splitting needs at least one particle");
  double prev = 0;
  for (double level : level_times) {
    if (!(level > prev)) throw Error(ErrorKind::ConfigError, "level times must be strictly increasing");
    prev = level;
  }
  if (level_times.back() != t) throw Error(ErrorKind::ConfigError, "last level must equal the horizon");
}

namespace {

struct Segment {
  std::vector<Event> events;
  std::shared_ptr<const Segment> parent;
};

struct Particle {
  Count state = 0;
  std::shared_ptr<const Segment> tail;
};

}  // namespace

SplittingSample simulate_conditioned_splitting(const ModelParams& params, Count z0, double t,
                                               const SplittingConfig& cfg, Rng& rng) {
  if (z0 < 1) throw Error(ErrorKind::DomainError, "z0 must be positive");
  cfg.check(t);
  const std::size_t n = cfg.particles_per_level;
  std::vector<Particle> particles(n, Particle{z0, nullptr});
  std::vector<std::size_t> alive;
  SplittingSample out;
  out.survival_estimate = 1.0;
  double prev = 0;
  for (std::size_t level = 0; level < cfg.n_levels(); ++level) {
    const double next = cfg.level_times[level];
    alive.clear();
    for (std::size_t i = 0; i < n; ++i) {
      auto seg = std::make_shared<Segment>();
      seg->parent = particles[i].tail;
      particles[i].state = simulate_segment(params, particles[i].state, prev, next, rng, seg->events);
      particles[i].tail = std::move(seg);
      if (particles[i].state > 0) alive.push_back(i);
    }
    const double fraction = static_cast<double>(alive.size()) / static_cast<double>(n);
    out.level_survival.push_back(fraction);
    out.survival_estimate *= fraction;
    if (alive.empty()) {
      throw Error(ErrorKind::ParticleCollapse, "all particles extinct by level time " + std::to_string(next));
    }
    if (level + 1 == cfg.n_levels()) break;
    std::vector<Particle> resampled(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(alive.size()));
      resampled[i] = particles[alive[std::min(pick, alive.size() - 1)]];
    }
    particles = std::move(resampled);
    prev = next;
  }

  const auto pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(alive.size()));
  const Particle& chosen = particles[alive[std::min(pick, alive.size() - 1)]];
  std::vector<const Segment*> chain;
  for (const Segment* seg = chosen.tail.get(); seg != nullptr; seg = seg->parent.get()) chain.push_back(seg);
  out.path.z0 = z0;
  out.path.horizon = t;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    out.path.events.insert(out.path.events.end(), (*it)->events.begin(), (*it)->events.end());
  }
  return out;
}

SplittingSample simulate_conditioned_splitting(const ModelParams& params, Count z0, double t,
                                               const SplittingConfig& cfg, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return simulate_conditioned_splitting(params, z0, t, cfg, rng);
}

}  // namespace subcrit
