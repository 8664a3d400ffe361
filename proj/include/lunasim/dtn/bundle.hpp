#pragma once

#include <cstdint>
#include <string>

#include "lunasim/radio/types.hpp"
#include "lunasim/sim/time.hpp"

namespace lunasim::dtn {

// Bundle priority is the radio traffic class; EMERGENCY dequeues first.
using Priority = radio::TrafficClass;

struct Bundle {
  std::uint64_t id{0};
  std::string src;
  std::string dst;
  Priority priority{Priority::OPERATIONAL};
  sim::SimTime created_at{};
  sim::Duration ttl{};
  bool custody{false};
  std::string payload;

  sim::SimTime expires_at() const { return created_at + ttl; }
  std::uint64_t size_bytes() const { return payload.size(); }
};

// Scenario-overridable defaults.
constexpr sim::Duration default_ttl(Priority p) {
  switch (p) {
    case Priority::EMERGENCY: return sim::secs(3'600);
    case Priority::OPERATIONAL: return sim::secs(6 * 3'600);
    case Priority::BULK: return sim::secs(24 * 3'600);
  }
  return sim::secs(3'600);
}

}  // namespace lunasim::dtn
