#include "subcrit/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "subcrit/error.hpp"

namespace subcrit {

Count Trajectory::terminal_state() const noexcept {
  return events.empty() ? z0 : events.back().state_after();
}

Count Trajectory::state_at(double s) const noexcept {
  // First event strictly after s.
  auto it = std::upper_bound(events.begin(), events.end(), s,
                             [](double v, const Event& e) { return v < e.time; });
  if (it == events.begin()) return z0;
  return std::prev(it)->state_after();
}

void Trajectory::check() const {
  if (z0 < 0) throw Error(ErrorKind::BadInput, "negative initial state");
  Count z = z0;
  double last = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    const std::string where = "event " + std::to_string(i);
    if (z == 0) throw Error(ErrorKind::BadInput, where + " after absorption at 0");
    if (e.state_before != z) throw Error(ErrorKind::BadInput, where + " has inconsistent state_before");
    if (!(e.time >= last) || (i > 0 && !(e.time > last))) {
      throw Error(ErrorKind::BadInput, where + " is out of order");
    }
    if (e.time > horizon) throw Error(ErrorKind::BadInput, where + " beyond horizon");
    if (e.kind == EventKind::Birth && e.size < 2) throw Error(ErrorKind::BadInput, where + " has birth size < 2");
    last = e.time;
    z = e.state_after();
  }
}

Count SufficientStats::births_of_size(int k) const noexcept {
  if (k < 0 || k >= static_cast<int>(births_by_size.size())) return 0;
  return births_by_size[k];
}

Count SufficientStats::births_from_state(Count r) const noexcept {
  if (r < 0 || r >= static_cast<Count>(births_by_state.size())) return 0;
  Count total = 0;
  for (Count c : births_by_state[r]) total += c;
  return total;
}

double SufficientStats::exposure_from_occupation() const noexcept {
  double acc = 0;
  for (std::size_t r = 1; r < occupation.size(); ++r) acc += static_cast<double>(r) * occupation[r];
  return acc;
}

namespace {

template <typename T>
void grow(std::vector<T>& v, std::size_t index) {
  if (v.size() <= index) v.resize(index + 1);
}

}  // namespace

SufficientStats stats(const Trajectory& traj, double t) {
  if (t > traj.horizon) {
    throw Error(ErrorKind::HorizonExceeded,
                "t = " + std::to_string(t) + " exceeds horizon " + std::to_string(traj.horizon));
  }
  if (t < 0) throw Error(ErrorKind::DomainError, "negative observation time");
  SufficientStats s;
  s.t = t;
  s.z0 = traj.z0;
  s.max_state = traj.z0;
  Count z = traj.z0;
  double last = 0;
  grow(s.occupation, static_cast<std::size_t>(z));
  for (const Event& e : traj.events) {
    if (e.time > t) break;
    const double dt = e.time - last;
    s.occupation[z] += dt;
    s.exposure += static_cast<double>(z) * dt;
    if (e.kind == EventKind::Birth) {
      ++s.births;
      grow(s.births_by_size, static_cast<std::size_t>(e.size));
      ++s.births_by_size[e.size];
      grow(s.births_by_state, static_cast<std::size_t>(z));
      grow(s.births_by_state[z], static_cast<std::size_t>(e.size));
      ++s.births_by_state[z][e.size];
    } else {
      ++s.deaths;
      grow(s.deaths_by_state, static_cast<std::size_t>(z));
      ++s.deaths_by_state[z];
    }
    z = e.state_after();
    last = e.time;
    s.max_state = std::max(s.max_state, z);
    grow(s.occupation, static_cast<std::size_t>(z));
  }
  s.occupation[z] += t - last;
  s.exposure += static_cast<double>(z) * (t - last);
  s.terminal_state = z;
  return s;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", traj.horizon);
  out << "# z0=" << traj.z0 << "\n# horizon=" << buf << "\n";
  out << "time,kind,k,state_before\n";
  for (const Event& e : traj.events) {
    std::snprintf(buf, sizeof buf, "%.17g", e.time);
    out << buf << ',';
    if (e.kind == EventKind::Birth) {
      out << "B," << e.size;
    } else {
      out << "D,";
    }
    out << ',' << e.state_before << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::BadInput, "cannot parse " + what + ": '" + s + "'");
  }
}

Count parse_count(const std::string& s, const std::string& what) {
  Count v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::BadInput, "cannot parse " + what + ": '" + s + "'");
  }
  return v;
}

}  // namespace

Trajectory read_trajectory_csv(std::istream& in) {
  Trajectory traj;
  bool have_z0 = false;
  bool have_horizon = false;
  bool have_header = false;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string value = line.substr(eq + 1);
      if (key == "z0") {
        traj.z0 = parse_count(value, "z0");
        have_z0 = true;
      } else if (key == "horizon") {
        traj.horizon = parse_double(value, "horizon");
        have_horizon = true;
      }
      continue;
    }
    if (!have_header) {
      if (line != "time,kind,k,state_before") {
        throw Error(ErrorKind::BadInput, "unexpected trajectory header '" + line + "'");
      }
      have_header = true;
      continue;
    }
    const auto fields = split_csv(line);
    if (fields.size() != 4) throw Error(ErrorKind::BadInput, "expected 4 fields in '" + line + "'");
    Event e;
    e.time = parse_double(fields[0], "time");
    if (fields[1] == "B") {
      e.kind = EventKind::Birth;
      e.size = static_cast<int>(parse_count(fields[2], "k"));
    } else if (fields[1] == "D") {
      e.kind = EventKind::Death;
      if (!fields[2].empty()) throw Error(ErrorKind::BadInput, "death with nonempty k");
    } else {
      throw Error(ErrorKind::BadInput, "unknown event kind '" + fields[1] + "'");
    }
    e.state_before = parse_count(fields[3], "state_before");
    traj.events.push_back(e);
  }
  if (!have_header) throw Error(ErrorKind::BadInput, "missing trajectory header");
  if (!have_z0) {
    if (traj.events.empty()) throw Error(ErrorKind::BadInput, "missing z0");
    traj.z0 = traj.events.front().state_before;
  }
  if (!have_horizon) traj.horizon = traj.events.empty() ? 0.0 : traj.events.back().time;
  traj.check();
  return traj;
}

}  // namespace subcrit
