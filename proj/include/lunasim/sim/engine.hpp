#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lunasim/sim/rng.hpp"
#include "lunasim/sim/time.hpp"
#include "lunasim/sim/trace.hpp"

namespace lunasim::sim {

struct SchedulingInPast : std::logic_error {
  using std::logic_error::logic_error;
};

struct RunReport {
  std::uint64_t dispatched{0};
  SimTime final_time{};
};

// Discrete-event kernel. Events fire in (time, insertion sequence) order, so
// same-time events keep FIFO semantics and replays are exact.
class Engine {
 public:
  explicit Engine(std::uint64_t master_seed) : master_seed_(master_seed) {}

  SimTime now() const { return now_; }
  std::uint64_t master_seed() const { return master_seed_; }

  // Schedules `action` on `target` at absolute time `at`.
  // Throws SchedulingInPast when at < now().
  void schedule_at(SimTime at, std::string target, std::string kind,
                   json fields, std::function<void()> action);

  void schedule_in(Duration d, std::string target, std::string kind,
                   json fields, std::function<void()> action) {
    schedule_at(now_ + d, std::move(target), std::move(kind),
                std::move(fields), std::move(action));
  }

  // Schedules `action` without the dispatch-time trace record; for internal
  // wakeups whose observable effect is emitted by the action itself.
  void schedule_quiet(SimTime at, std::function<void()> action);

  // Dispatches every event with at <= t_end, then advances now() to t_end.
  RunReport run_until(SimTime t_end);

  // Appends a trace record stamped with the current time and the sequence
  // number of the event being dispatched (0 before the first dispatch).
  void emit(const std::string& target, const std::string& kind, json fields);

  // Per-component deterministic stream; created lazily, draws persist.
  Rng& rng(const std::string& component);

  Trace& trace() { return trace_; }
  const Trace& trace() const { return trace_; }

 private:
  struct Event {
    SimTime at;
    std::uint64_t seq;
    std::string target;
    std::string kind;
    json fields;
    std::function<void()> action;
    bool quiet{false};
  };

  // Min-heap on (at, seq).
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  std::vector<Event> heap_;
  SimTime now_{};
  std::uint64_t next_seq_{1};
  std::uint64_t current_seq_{0};
  std::uint64_t master_seed_;
  std::unordered_map<std::string, Rng> streams_;
  Trace trace_;
};

}  // namespace lunasim::sim
