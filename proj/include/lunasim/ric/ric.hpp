#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lunasim/agent/agent.hpp"
#include "lunasim/dtn/dtn.hpp"
#include "lunasim/radio/radio.hpp"
#include "lunasim/sim/engine.hpp"

namespace lunasim::ric {

struct UnknownIncident : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoCandidates : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TelemetrySample {
  std::string node;
  sim::SimTime t{};
  double radio_quality{0.0};
  double system_load{0.0};
  agent::DisseminationMode agent_mode{
      agent::DisseminationMode::AUTONOMOUS_BULK};

  sim::json to_json() const;
  static TelemetrySample from_json(const sim::json& j);
};

// Raises the EMERGENCY share to `floor` and splits the remainder between
// OPERATIONAL and BULK in proportion to their prior weights. A prior share
// already at or above the floor is returned untouched, so repeated
// application is idempotent.
radio::SpectrumPolicy apply_emergency_floor(const radio::SpectrumPolicy& prior,
                                            double floor);

// Local monitoring module riding on one asset: samples the best up-link
// quality, the scripted system load, and the agent's dissemination mode.
class Sapp {
 public:
  Sapp(sim::Engine& engine, const radio::RadioEnvironment& env,
       const agent::Agent& agent)
      : engine_(engine), env_(env), agent_(agent) {}

  // Instantaneous sample at the current time.
  TelemetrySample monitor() const;

  // Emits one `telemetry` record per cadence tick in [now, until); sampling
  // stops early if the node halts.
  void start(sim::SimTime until, sim::Duration cadence = sim::secs(1));

  void set_system_load(double load);
  void on_sample(std::function<void(const TelemetrySample&)> sink) {
    sink_ = std::move(sink);
  }
  const std::vector<TelemetrySample>& samples() const { return samples_; }

 private:
  void tick();

  sim::Engine& engine_;
  const radio::RadioEnvironment& env_;
  const agent::Agent& agent_;
  double load_{0.0};
  sim::Duration cadence_{sim::secs(1)};
  sim::SimTime until_{};
  bool running_{false};
  std::vector<TelemetrySample> samples_;
  std::function<void(const TelemetrySample&)> sink_;
};

struct LinkPolicy {
  std::string a;
  std::string b;
  radio::SpectrumPolicy shares;
};

// Regional policy actuator: spectrum reallocation around active incidents
// and predictive relay switching with beam steering.
class NearRtRic {
 public:
  NearRtRic(sim::Engine& engine, radio::RadioEnvironment& env,
            std::string node)
      : engine_(engine), env_(env), node_(std::move(node)) {}

  void attach_dtn(dtn::BundleNetwork* net) { net_ = net; }
  void set_emergency_floor(double floor);
  double emergency_floor() const { return emergency_floor_; }
  void set_relay_lookahead(sim::Duration d) { relay_lookahead_ = d; }

  void declare_incident(
      const std::string& id,
      std::vector<std::pair<std::string, std::string>> links);
  void resolve_incident(const std::string& id);
  bool incident_active(const std::string& id) const;

  // Applies the emergency floor to every link affected by the incident (the
  // declared set, or the explicit set which is then remembered as affected),
  // pushes the shares into the radio scheduler, and nudges queued DTN
  // traffic on each reshaped link.
  std::vector<LinkPolicy> reallocate(const std::string& incident_id);
  std::vector<LinkPolicy> reallocate(
      const std::string& incident_id,
      const std::vector<std::pair<std::string, std::string>>& links);

  // Argmax of the predicted quality estimate at now + lookahead; ties go to
  // the lexicographically smallest candidate. Steers the asset at the winner.
  std::string relay_switch(const std::string& asset,
                           const std::vector<std::string>& candidates);

  void ingest(const TelemetrySample& sample);
  std::optional<TelemetrySample> latest(const std::string& node) const;
  // All latest samples keyed by node, the payload for episodic twin sync.
  sim::json digest() const;

 private:
  struct Incident {
    std::vector<std::pair<std::string, std::string>> links;
    bool active{false};
  };

  sim::Engine& engine_;
  radio::RadioEnvironment& env_;
  std::string node_;
  dtn::BundleNetwork* net_{nullptr};
  double emergency_floor_{0.6};
  sim::Duration relay_lookahead_{sim::secs(10)};
  std::map<std::string, Incident> incidents_;
  std::map<std::string, TelemetrySample> latest_;
};

struct TwinEntry {
  TelemetrySample sample;
  sim::SimTime received_at{};
};

// Earth-side digital twin: applies episodic digests as they arrive and sends
// rate-limited long-term policy updates back over the Earth link.
class NonRtTwin {
 public:
  NonRtTwin(sim::Engine& engine, radio::RadioEnvironment& env,
            std::string earth_node, std::string surface_peer)
      : engine_(engine),
        env_(env),
        node_(std::move(earth_node)),
        surface_peer_(std::move(surface_peer)) {}

  // Applies one delivered digest at the current instant; entries only ever
  // move forward in time. Returns the number of samples applied.
  std::size_t sync(const sim::json& digest);

  std::optional<TwinEntry> entry_of(const std::string& node) const;
  // now - sample stamp; Duration::max when the twin has never seen the node.
  sim::Duration staleness(const std::string& node) const;
  std::size_t size() const { return entries_.size(); }

  void set_reply_interval(sim::Duration d) { reply_interval_ = d; }
  void set_recommended_floor(double floor);
  void on_policy(std::function<void(const sim::json&, sim::SimTime)> handler) {
    handler_ = std::move(handler);
  }
  std::uint64_t policy_revision() const { return revision_; }

 private:
  void maybe_reply();

  sim::Engine& engine_;
  radio::RadioEnvironment& env_;
  std::string node_;
  std::string surface_peer_;
  sim::Duration reply_interval_{sim::secs(2)};
  double recommended_floor_{0.6};
  std::uint64_t revision_{0};
  std::optional<sim::SimTime> last_reply_;
  std::map<std::string, TwinEntry> entries_;
  std::function<void(const sim::json&, sim::SimTime)> handler_;
};

}  // namespace lunasim::ric
