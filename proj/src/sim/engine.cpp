#include "lunasim/sim/engine.hpp"

#include <algorithm>

namespace lunasim::sim {

void Engine::schedule_at(SimTime at, std::string target, std::string kind,
                         json fields, std::function<void()> action) {
  if (at < now_) {
    throw SchedulingInPast("event '" + kind + "' for '" + target +
                           "' scheduled at t=" + std::to_string(at.us) +
                           "us, now=" + std::to_string(now_.us) + "us");
  }
  heap_.push_back(Event{at, next_seq_++, std::move(target), std::move(kind),
                        std::move(fields), std::move(action)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
}

void Engine::schedule_quiet(SimTime at, std::function<void()> action) {
  if (at < now_) {
    throw SchedulingInPast("quiet event scheduled at t=" +
                           std::to_string(at.us) +
                           "us, now=" + std::to_string(now_.us) + "us");
  }
  heap_.push_back(
      Event{at, next_seq_++, "", "", json{}, std::move(action), true});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
}

RunReport Engine::run_until(SimTime t_end) {
  RunReport report;
  while (!heap_.empty() && heap_.front().at <= t_end) {
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Event ev = std::move(heap_.back());
    heap_.pop_back();

    now_ = ev.at;
    current_seq_ = ev.seq;
    if (!ev.quiet) emit(ev.target, ev.kind, ev.fields);
    if (ev.action) ev.action();
    ++report.dispatched;
  }
  now_ = t_end;
  report.final_time = now_;
  return report;
}

void Engine::emit(const std::string& target, const std::string& kind,
                  json fields) {
  json record = std::move(fields);
  if (!record.is_object()) record = json::object();
  // Stamps win over any caller-supplied keys of the same name.
  record["t"] = now_.us;
  record["seq"] = current_seq_;
  record["target"] = target;
  record["kind"] = kind;
  trace_.append(std::move(record));
}

Rng& Engine::rng(const std::string& component) {
  auto it = streams_.find(component);
  if (it == streams_.end()) {
    it = streams_.emplace(component, Rng::stream(master_seed_, component))
             .first;
  }
  return it->second;
}

}  // namespace lunasim::sim
