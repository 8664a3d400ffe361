#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lunasim/radio/radio.hpp"
#include "lunasim/sim/time.hpp"

namespace lunasim::dtn {

struct Journey {
  struct Hop {
    std::string from;
    std::string to;
    sim::SimTime depart;  // earliest feasible send start
    sim::SimTime arrive;  // last bit at the receiving node
  };
  std::vector<Hop> hops;
  sim::SimTime arrival{};
};

// Earliest-arrival search over the time-expanded contact plan. Uses baseline
// bandwidths and nominal delays; actual sends may queue behind other traffic,
// so the result is a lower bound on the achievable arrival.
class Router {
 public:
  explicit Router(const radio::RadioEnvironment& env) : env_(env) {}

  // Earliest journey departing no earlier than t0 and arriving by deadline.
  std::optional<Journey> best_journey(const std::string& src,
                                      const std::string& dst,
                                      std::uint64_t size_bytes, sim::SimTime t0,
                                      sim::SimTime deadline) const;

 private:
  const radio::RadioEnvironment& env_;
};

}  // namespace lunasim::dtn
