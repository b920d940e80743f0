#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace subcrit {

using Count = std::int64_t;

enum class EventKind : std::uint8_t { Birth, Death };

/// One jump. A birth of size k replaces one individual by k (z -> z-1+k);
/// a death removes one (z -> z-1).
struct Event {
  double time = 0;
  EventKind kind = EventKind::Death;
  int size = 0;  ///< offspring count k for births, 0 for deaths
  Count state_before = 0;

  Count delta() const noexcept { return kind == EventKind::Birth ? size - 1 : -1; }
  Count state_after() const noexcept { return state_before + delta(); }

  friend bool operator==(const Event&, const Event&) = default;
};

/// Time-ordered event log of a path on [0, horizon].
struct Trajectory {
  Count z0 = 1;
  double horizon = 0;
  std::vector<Event> events;

  Count terminal_state() const noexcept;

  /// Population at time s (right-continuous); s may exceed the horizon only
  /// in the sense that the last state persists.
  Count state_at(double s) const noexcept;

  /// Checks ordering, state consistency and absorption at 0; throws
  /// Error{BadInput} describing the first violation.
  void check() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Everything the estimators consume, obtained by exact replay of a path on
/// [0, t]. Vectors are indexed by state r or offspring size k.
struct SufficientStats {
  double t = 0;
  Count z0 = 0;
  Count births = 0;            ///< b_t: birth events
  Count deaths = 0;            ///< d_t
  double exposure = 0;         ///< tau_t = ∫ Z_s ds
  std::vector<Count> births_by_size;               ///< b_{k,t}
  std::vector<double> occupation;                  ///< nu_{r,t}, including r = 0
  std::vector<std::vector<Count>> births_by_state; ///< beta_{r,t,l}: [r][l]
  std::vector<Count> deaths_by_state;              ///< delta_{r,t}
  Count max_state = 0;                             ///< R_t
  Count terminal_state = 0;

  Count births_of_size(int k) const noexcept;
  /// b_r: birth events from state r, all sizes.
  Count births_from_state(Count r) const noexcept;
  /// Σ_r r nu_r, the occupation-based route to tau_t.
  double exposure_from_occupation() const noexcept;
};

/// Throws Error{HorizonExceeded} when t > traj.horizon.
SufficientStats stats(const Trajectory& traj, double t);

/// CSV with header `time,kind,k,state_before`; kind is B or D and k is empty
/// for deaths. Two leading comment lines carry z0 and the horizon.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& in);

}  // namespace subcrit
