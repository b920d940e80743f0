#include "subcrit/qprocess.hpp"

#include <queue>
#include <span>

#include "subcrit/error.hpp"
#include "subcrit/sim.hpp"

namespace subcrit {

namespace {

// Draws k with probability proportional to p_k (shift + k).
int sample_tilted(const OffspringLaw& law, double shift, double u) {
  const auto& p = law.table();
  double total = 0;
  for (int k = law.min_size(); k <= law.max_size(); ++k) total += p[k] * (shift + k);
  const double target = u * total;
  double acc = 0;
  for (int k = law.min_size(); k <= law.max_size(); ++k) {
    acc += p[k] * (shift + k);
    if (target < acc) return k;
  }
  return law.max_size();
}

// K-way merge of time-ordered event sources into one population path.
// Only the time, kind and size of source events are used; state_before is
// recomputed against the merged population.
Trajectory merge_paths(Count z0, double horizon, std::span<const std::vector<Event>* const> sources) {
  struct Head {
    double time;
    std::size_t source;
    std::size_t index;
    bool operator>(const Head& o) const noexcept {
      return time != o.time ? time > o.time : source > o.source;
    }
  };
  std::priority_queue<Head, std::vector<Head>, std::greater<>> heads;
  std::size_t total = 0;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    total += sources[s]->size();
    if (!sources[s]->empty()) heads.push({(*sources[s])[0].time, s, 0});
  }
  Trajectory merged;
  merged.z0 = z0;
  merged.horizon = horizon;
  merged.events.reserve(total);
  Count z = z0;
  while (!heads.empty()) {
    const Head h = heads.top();
    heads.pop();
    Event e = (*sources[h.source])[h.index];
    e.state_before = z;
    z = e.state_after();
    merged.events.push_back(e);
    if (h.index + 1 < sources[h.source]->size()) {
      heads.push({(*sources[h.source])[h.index + 1].time, h.source, h.index + 1});
    }
  }
  return merged;
}

}  // namespace

Trajectory simulate_generator(const ModelParams& params, Count z0, double horizon, Rng& rng) {
  if (z0 < 1) throw Error(ErrorKind::DomainError, "Q-process starts from z0 >= 1");
  if (!(horizon >= 0)) throw Error(ErrorKind::DomainError, "horizon must be nonnegative");
  const double lambda = params.lambda();
  const double mu = params.mu();
  const double lm = lambda * params.m();
  const OffspringLaw& law = params.offspring();

  Trajectory traj;
  traj.z0 = z0;
  traj.horizon = horizon;
  Count z = z0;
  double s = 0;
  for (;;) {
    const double others = static_cast<double>(z - 1);
    const double death_rate = others * mu;
    const double total = others * (lambda + mu) + lm;
    s += exponential(rng, total);
    if (s > horizon) break;
    Event e;
    e.time = s;
    e.state_before = z;
    if (uniform01(rng) * total < death_rate) {
      e.kind = EventKind::Death;
    } else {
      e.kind = EventKind::Birth;
      e.size = sample_tilted(law, others, uniform01(rng));
    }
    traj.events.push_back(e);
    z = e.state_after();
  }
  return traj;
}

Trajectory simulate_generator(const ModelParams& params, Count z0, double horizon, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return simulate_generator(params, z0, horizon, rng);
}

SpinePath simulate_spine(const ModelParams& params, double horizon, Rng& rng, Count z0) {
  if (z0 < 1) throw Error(ErrorKind::DomainError, "Q-process starts from z0 >= 1");
  if (!(horizon >= 0)) throw Error(ErrorKind::DomainError, "horizon must be nonnegative");
  const double spine_rate = params.lambda() * params.m();
  const OffspringLaw biased = size_biased(params.offspring());

  SpinePath out;
  SpineRecord& rec = out.spine;
  std::vector<Event> spine_events;
  double s = 0;
  for (;;) {
    s += exponential(rng, spine_rate);
    if (s > horizon) break;
    const int k = biased.sample(uniform01(rng));
    rec.birth_times.push_back(s);
    rec.offspring_counts.push_back(k);
    spine_events.push_back({s, EventKind::Birth, k, 0});
    // Children 1..k-1 are non-spine; child k continues the spine.
    for (int c = 0; c < k - 1; ++c) {
      Trajectory sub;
      sub.z0 = 1;
      sub.horizon = horizon;
      simulate_segment(params, 1, s, horizon, rng, sub.events);
      rec.subtrees.push_back(std::move(sub));
      rec.subtree_parent.push_back(rec.birth_times.size() - 1);
    }
  }

  std::vector<Trajectory> founders;
  founders.reserve(static_cast<std::size_t>(z0 - 1));
  for (Count f = 1; f < z0; ++f) founders.push_back(simulate(params, 1, horizon, rng));

  std::vector<const std::vector<Event>*> sources;
  sources.reserve(1 + rec.subtrees.size() + founders.size());
  sources.push_back(&spine_events);
  for (const auto& sub : rec.subtrees) sources.push_back(&sub.events);
  for (const auto& f : founders) sources.push_back(&f.events);
  out.path = merge_paths(z0, horizon, sources);
  return out;
}

SpinePath simulate_spine(const ModelParams& params, double horizon, std::uint64_t seed, Count z0) {
  Rng rng = make_rng(seed);
  return simulate_spine(params, horizon, rng, z0);
}

Trajectory simulate_immigration(const ModelParams& params, Count z0, double horizon, Rng& rng) {
  if (z0 < 1) throw Error(ErrorKind::DomainError, "Q-process starts from z0 >= 1");
  const double lambda = params.lambda();
  const double mu = params.mu();
  const double immigration = lambda * params.m();
  const OffspringLaw& law = params.offspring();
  const OffspringLaw biased = size_biased(law);

  Trajectory traj;
  traj.z0 = z0;
  traj.horizon = horizon;
  Count y = z0 - 1;  // population excluding the immortal individual
  double s = 0;
  for (;;) {
    const double local = static_cast<double>(y) * (lambda + mu);
    const double total = local + immigration;
    s += exponential(rng, total);
    if (s > horizon) break;
    Event e;
    e.time = s;
    e.state_before = y + 1;
    const double u = uniform01(rng) * total;
    if (u < immigration) {
      // ℓ immigrants with probability p̃_{ℓ+1}: recorded as a birth of size ℓ+1.
      e.kind = EventKind::Birth;
      e.size = biased.sample(uniform01(rng));
    } else if (u < immigration + static_cast<double>(y) * lambda) {
      e.kind = EventKind::Birth;
      e.size = law.sample(uniform01(rng));
    } else {
      e.kind = EventKind::Death;
    }
    traj.events.push_back(e);
    y = e.state_after() - 1;
  }
  return traj;
}

SufficientStats qprocess_stats(const Trajectory& traj, double t) { return stats(traj, t); }

ErgodicAverages ergodic_averages(const ModelParams& params, double horizon, std::uint64_t seed) {
  if (!(horizon > 0)) throw Error(ErrorKind::DomainError, "horizon must be positive");
  const Trajectory traj = simulate_generator(params, 1, horizon, seed);
  const SufficientStats st = stats(traj, horizon);
  return {st.exposure / horizon, static_cast<double>(st.births) / horizon,
          static_cast<double>(st.deaths) / horizon};
}

}  // namespace subcrit
