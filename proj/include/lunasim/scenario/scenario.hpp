#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lunasim/agent/agent.hpp"
#include "lunasim/dtn/dtn.hpp"
#include "lunasim/mcp/grid.hpp"
#include "lunasim/mcp/server.hpp"
#include "lunasim/radio/radio.hpp"
#include "lunasim/ric/ric.hpp"
#include "lunasim/sim/engine.hpp"

namespace lunasim::scenario {

// File unreadable or not JSON at all.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Well-formed JSON that violates the scenario schema. `path` is the JSON
// location (e.g. "occlusions[2].a"), `reason` names the offending value.
struct ValidationError : std::runtime_error {
  std::string path;
  std::string field;
  std::string reason;
  ValidationError(std::string p, std::string f, std::string r)
      : std::runtime_error(p + (f.empty() ? "" : std::string(".") + f) +
                           ": " + r),
        path(std::move(p)),
        field(std::move(f)),
        reason(std::move(r)) {}
};

struct PingSpec {
  std::string to;
  sim::Duration interval{};
};

struct WatchSpec {
  std::string peer;
  sim::Duration interval{};
};

struct AgentSpec {
  std::string uplink;
  std::string earth;
  sim::Duration staleness_limit{sim::secs(10)};
  sim::Duration report_interval{sim::secs(30)};
  double system_load{0.0};
  std::vector<std::string> interests;
  std::vector<WatchSpec> watch_pings;
  std::map<std::string, sim::json> cache;  // preloaded at t = 0
  std::optional<mcp::Cell> start_cell;
  std::optional<mcp::Cell> goal_cell;
};

struct NodeSpec {
  std::string name;
  radio::Tier tier{radio::Tier::ROVER};
  double x{0.0};
  double y{0.0};
  std::optional<AgentSpec> agent;
  std::optional<PingSpec> pings;  // periodic beacon to a neighbor
};

struct LinkSpec {
  std::string a;
  std::string b;
  radio::LinkConfig cfg;
};

struct OcclusionSpec {
  std::string a;
  std::string b;
  sim::SimTime start{};
  sim::SimTime end{};
};

struct EventSpec {
  sim::SimTime at{};
  std::string type;
  sim::json params;
};

struct RelaySpec {
  std::string asset;
  std::vector<std::string> candidates;
};

struct IncidentSpec {
  std::string id;
  std::vector<std::pair<std::string, std::string>> links;
};

struct ScenarioSpec {
  std::string name;
  sim::Duration duration{};
  std::uint64_t seed{1};
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::vector<OcclusionSpec> occlusions;
  std::vector<EventSpec> events;
  std::string context_node;  // hosts the context server; "" = none
  std::string ric_node;      // hosts the near-RT controller; "" = none
  std::string earth_node;    // hosts the ground twin; "" = none
  std::vector<RelaySpec> relays;
  std::optional<IncidentSpec> incident;
  sim::Duration episodic_sync{sim::secs(60)};
  std::map<std::string, sim::json> context_topics;  // published at t = 0

  static ScenarioSpec from_json(const sim::json& j);
  const NodeSpec* find_node(const std::string& name) const;
};

ScenarioSpec load_scenario(const std::string& path);

// Built-in fixtures compiled into the library; names: "eva_incident",
// "quiescent". Unknown names throw std::invalid_argument.
std::vector<std::string> bundled_scenario_names();
std::string bundled_scenario_text(const std::string& name);
ScenarioSpec bundled_scenario(const std::string& name);

struct BandwidthPoint {
  std::uint64_t t_us{0};
  std::uint64_t bps{0};
};

struct RegimePoint {
  std::uint64_t t_us{0};
  std::string regime;
};

struct ClassCount {
  std::uint64_t created{0};
  std::uint64_t delivered{0};
};

// Everything here is recomputable from the trace alone; from_trace on a
// run's records reproduces the report the run returned.
struct MetricsReport {
  sim::Duration duration{};
  std::optional<std::uint64_t> alert_raised_us;
  std::optional<std::uint64_t> alert_e2e_latency_us;
  std::map<std::string, ClassCount> bundle_counts;   // by priority class
  std::map<std::string, double> delivery_ratio;      // by priority class
  std::uint64_t decision_count{0};
  double autonomous_decision_fraction{0.0};          // made_by LOCAL share
  std::map<std::string, std::vector<BandwidthPoint>> emergency_bandwidth;
  std::map<std::string, std::vector<RegimePoint>> regime_timeline;
  std::map<std::string, std::uint64_t> messages_by_tier;

  static MetricsReport from_trace(const std::vector<sim::json>& records,
                                  sim::Duration duration);
  sim::json to_json() const;
  std::string to_csv() const;

  friend bool operator==(const MetricsReport& lhs, const MetricsReport& rhs) {
    return lhs.to_json() == rhs.to_json();
  }
};

struct RunResult {
  MetricsReport report;
  std::vector<sim::json> trace;
  std::string trace_jsonl;
};

RunResult run_scenario(const ScenarioSpec& spec);

}  // namespace lunasim::scenario
