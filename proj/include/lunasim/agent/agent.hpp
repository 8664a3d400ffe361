#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lunasim/a2a/message.hpp"
#include "lunasim/dtn/dtn.hpp"
#include "lunasim/mcp/grid.hpp"
#include "lunasim/mcp/server.hpp"
#include "lunasim/radio/radio.hpp"
#include "lunasim/sim/engine.hpp"

namespace lunasim::agent {

struct UnknownPeer : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DuplicateAlert : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DisseminationMode { PUSH_REALTIME, PULL_CACHED, AUTONOMOUS_BULK };
const char* to_string(DisseminationMode m);

// Pure mapping: HIGH -> PUSH_REALTIME, MODERATE -> PULL_CACHED,
// POOR -> AUTONOMOUS_BULK.
DisseminationMode mode_for(radio::Regime regime);

// Hyperbolic decay H_max / (1 + delay/d0) with H_max 600 s, d0 2 s,
// evaluated exactly in integer microseconds (floor). Saturates to 0 for
// absurd delays instead of overflowing.
sim::Duration planning_horizon(sim::Duration predicted_delay);

// confidence = base * link_quality; both arguments must lie in [0, 1].
double modulate_confidence(double base, double link_quality);

inline constexpr double kConfidenceGate = 0.5;
inline constexpr double kAvailabilityAlpha = 0.2;
inline constexpr int kMissedPingLimit = 3;

enum class DecisionAction {
  REALLOCATE_BANDWIDTH,
  REQUEST_HANDOVER,
  ADAPT_SAMPLING_RATE,
  REROUTE,
  SEND_ALERT,
  RELAY_ACCEPT,
};
enum class Criticality { CRITICAL, NON_CRITICAL };
enum class DecisionRoute { LOCAL, DEFER_TO_EARTH };
const char* to_string(DecisionAction a);
const char* to_string(Criticality c);
const char* to_string(DecisionRoute r);

// LOCAL iff the Earth round trip plus a 0.5 s processing margin overshoots
// the deadline (strictly); a deadline of exactly rtt + 0.5 s defers.
DecisionRoute autonomous_decision_gate(sim::Duration deadline,
                                       sim::Duration earth_rtt);

struct Decision {
  DecisionAction action{DecisionAction::REROUTE};
  Criticality criticality{Criticality::NON_CRITICAL};
  double base_confidence{1.0};
};

enum class Via { DIRECT, RELAY, BROKER, DTN };
const char* to_string(Via v);

struct CacheEntry {
  sim::json value;
  sim::SimTime stamp;
};

// Cognitive agent for one asset. Regime-driven dissemination, cache with
// staleness bookkeeping, EWMA peer availability, confidence-gated decision
// queue, missed-ping anomaly latch, and role-specific alert handling.
// Collaborators (context server, bundle network) are attached by the
// scenario; without them the agent still traces and returns its emissions.
class Agent {
 public:
  struct Config {
    std::string node;
    radio::Tier role{radio::Tier::ROVER};
    std::string uplink;  // context-server / base node; "" = none
    std::string earth;   // destination for situation reports; "" = uplink
    sim::Duration staleness_limit{sim::secs(10)};
    sim::Duration report_interval{sim::secs(30)};
    sim::Duration relay_lookahead{sim::secs(10)};
    double locomotion_weight{2.0};
  };

  Agent(sim::Engine& engine, radio::RadioEnvironment& env, Config cfg);

  void attach_context(mcp::ContextServer* server) { context_ = server; }
  void attach_dtn(dtn::BundleNetwork* net) { dtn_ = net; }

  const std::string& node() const { return cfg_.node; }
  radio::Tier role() const { return cfg_.role; }
  radio::Regime regime() const { return regime_; }
  DisseminationMode mode() const { return mode_for(regime_); }
  sim::Duration horizon() const { return horizon_; }
  double base_confidence() const { return base_confidence_; }
  void set_base_confidence(double b);
  void set_telemetry(const std::array<double, a2a::kVectorLength>& values) {
    telemetry_ = values;
  }
  void set_position(mcp::Cell c) { position_ = c; }
  void set_goal(mcp::Cell c) { goal_ = c; }

  // Peer availability (EWMA, alpha 0.2). Peers must be registered first.
  void add_peer(const std::string& peer, double initial = 0.5);
  double peer_availability(const std::string& peer) const;
  double observe_peer(const std::string& peer, bool observed_up);

  // Context cache. Staleness of an absent topic is "infinite" (max
  // duration), so fresh interests are queried on the first PULL step.
  void add_interest(const std::string& topic);
  void cache_put(const std::string& topic, sim::json value);
  std::optional<CacheEntry> cached(const std::string& topic) const;
  sim::Duration staleness(const std::string& topic) const;

  // Wire into ContextServer::set_push_handler for push ingestion.
  void on_push(const std::string& topic, const sim::json& update,
               sim::SimTime at);

  // Missed-ping anomaly watch: >= kMissedPingLimit intervals without a ping
  // latches one UNRESPONSIVE alert until the peer is heard again.
  void expect_pings(const std::string& peer, sim::Duration interval);
  void record_ping(const std::string& peer);

  // Executes immediately (returned record) or parks in the defer queue
  // (nullopt). CRITICAL decisions never defer.
  std::optional<sim::json> submit_decision(const Decision& d);
  DecisionRoute decide_with_earth(const Decision& d, sim::Duration deadline,
                                  sim::Duration earth_rtt);
  std::size_t defer_queue_size() const { return defer_queue_.size(); }

  // One cognition tick: sample best link, reclassify regime, run the mode
  // behavior, check ping watches, drain the defer queue.
  std::vector<sim::json> step();

  // Role-specific alert handling; DuplicateAlert on a (sender, seq) replay.
  std::vector<sim::json> handle_alert(const a2a::SemanticMessage& alert,
                                      Via via);
  // Originate an alert from this node and broadcast it on all up links.
  std::vector<sim::json> raise_alert(a2a::AlertBody body);

  using SendHandler = std::function<void(
      const std::string& to, const std::string& encoded, sim::SimTime at)>;
  void set_send_handler(SendHandler h) { send_handler_ = std::move(h); }
  using DecisionHandler = std::function<void(const sim::json& record)>;
  void set_decision_handler(DecisionHandler h) {
    decision_handler_ = std::move(h);
  }

  static constexpr const char* kQualityMapTopic = "quality_map";

 private:
  struct BestLink {
    std::string peer;  // empty when nothing is up
    radio::LinkState state;
  };
  struct PingWatch {
    sim::Duration interval;
    sim::SimTime last_ping;
    bool latched{false};
  };

  BestLink best_link(sim::SimTime now) const;
  sim::json emit(const std::string& kind, sim::json fields,
                 std::vector<sim::json>* out);
  sim::json decision_record(const Decision& d, double confidence,
                            const char* made_by);
  void execute_decision(const Decision& d, double confidence,
                        const char* made_by, std::vector<sim::json>* out);
  void send_state(a2a::CompressionTier tier, std::vector<sim::json>* out);
  void query_topic(const std::string& topic, std::vector<sim::json>* out);
  void enqueue_report(sim::json body, std::vector<sim::json>* out);
  void fetch_broker(std::vector<sim::json>* out);
  void local_replan(std::vector<sim::json>* out);
  void check_pings(std::vector<sim::json>* out);
  void drain_defer_queue(std::vector<sim::json>* out);
  void broadcast_encoded(const a2a::SemanticMessage& msg,
                         const char* emission_kind,
                         std::vector<sim::json>* out);
  void raise_alert_into(a2a::AlertBody body, std::vector<sim::json>* out);
  std::uint64_t next_bundle_id();

  sim::Engine& engine_;
  radio::RadioEnvironment& env_;
  Config cfg_;
  mcp::ContextServer* context_{nullptr};
  dtn::BundleNetwork* dtn_{nullptr};

  radio::Regime regime_{radio::Regime::POOR};
  sim::Duration horizon_{};
  double base_confidence_{0.9};
  std::optional<std::array<double, a2a::kVectorLength>> telemetry_;
  std::optional<mcp::Cell> position_;
  std::optional<mcp::Cell> goal_;

  std::map<std::string, double> availability_;
  std::set<std::string> interests_;
  std::map<std::string, CacheEntry> cache_;
  std::map<std::string, PingWatch> pings_;
  std::deque<Decision> defer_queue_;
  std::set<std::pair<std::string, std::uint64_t>> seen_alerts_;
  std::optional<sim::SimTime> last_report_;
  std::uint64_t msg_seq_{0};
  std::uint64_t bundle_seq_{0};

  SendHandler send_handler_;
  DecisionHandler decision_handler_;
};

}  // namespace lunasim::agent
