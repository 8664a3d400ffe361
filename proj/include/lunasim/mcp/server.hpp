#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lunasim/dtn/router.hpp"
#include "lunasim/mcp/grid.hpp"
#include "lunasim/radio/radio.hpp"
#include "lunasim/sim/engine.hpp"

namespace lunasim::mcp {

struct UnknownCapability : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Unreachable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Linear power model: idle draw over the whole horizon plus the drive
// surplus while moving.
struct EnergyModel {
  double idle_w{50.0};
  double drive_w{200.0};
};

double predict_energy_j(const EnergyModel& model, double horizon_s,
                        double driving_s);

// Context server hosted at one node. Capabilities are deterministic models
// evaluated against the current world state; pushes and brokered messages
// ride the contact plan for latency but are control-plane traffic, so they
// do not consume link capacity.
class ContextServer {
 public:
  static constexpr std::size_t kDefaultSlotCapacity = 256;

  ContextServer(sim::Engine& engine, const radio::RadioEnvironment& env,
                std::string node)
      : engine_(engine), env_(env), router_(env), node_(std::move(node)) {}

  const std::string& node() const { return node_; }

  // Pure capability dispatch at the current virtual time.
  sim::json evaluate(const std::string& capability,
                     const sim::json& request) const;

  struct QueryResult {
    sim::json response;
    sim::SimTime responds_at;  // when the answer reaches the requester
  };

  // Round-trip query: both legs must complete within `timeout` over the
  // contact plan, otherwise Unreachable. The response reflects world state
  // at call time.
  QueryResult query(const std::string& requester,
                    const std::string& capability, const sim::json& request,
                    sim::Duration timeout) const;

  // At most one subscription per (subscriber, topic); re-subscribing
  // replaces the interval.
  void subscribe(const std::string& subscriber, const std::string& topic,
                 sim::Duration min_interval);
  void unsubscribe(const std::string& subscriber, const std::string& topic);

  // Pushes `update` to every subscriber of `topic` outside its rate window.
  // Reachable subscribers get a push event after plan latency (counted);
  // unreachable ones get the update parked in their broker slot instead.
  std::size_t publish(const std::string& topic, const sim::json& update);

  std::optional<sim::json> latest(const std::string& topic) const;

  using PushHandler =
      std::function<void(const std::string& subscriber,
                         const std::string& topic, const sim::json& update,
                         sim::SimTime at)>;
  void set_push_handler(PushHandler handler) {
    push_handler_ = std::move(handler);
  }

  // Semantic message brokering for disconnected recipients. Slots are FIFO;
  // at capacity the oldest non-EMERGENCY message is dropped (traced), the
  // oldest overall when everything is EMERGENCY.
  void broker_put(const std::string& recipient, std::string encoded_msg);
  std::vector<std::string> broker_fetch(const std::string& recipient);
  std::size_t slot_size(const std::string& recipient) const;
  void set_slot_capacity(std::size_t capacity) { slot_capacity_ = capacity; }

 private:
  struct Subscription {
    sim::Duration min_interval;
    std::optional<sim::SimTime> last_sent;
  };
  struct SlotEntry {
    std::string bytes;
    bool emergency{false};
  };

  sim::Engine& engine_;
  const radio::RadioEnvironment& env_;
  dtn::Router router_;
  std::string node_;
  std::map<std::string, std::map<std::string, Subscription>> subs_;  // topic
  std::map<std::string, sim::json> latest_;
  std::map<std::string, std::deque<SlotEntry>> slots_;
  std::size_t slot_capacity_{kDefaultSlotCapacity};
  std::uint64_t push_seq_{0};
  PushHandler push_handler_;
};

}  // namespace lunasim::mcp
