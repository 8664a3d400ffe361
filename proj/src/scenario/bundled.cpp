#include "lunasim/scenario/scenario.hpp"

namespace lunasim::scenario {

namespace {

// Thirty-minute EVA on the far side of a ridge: the suit goes silent while
// the rover's trunk link is occluded, forcing the alert through the relay on
// high terrain and a spectrum reallocation at the base.
constexpr const char* kEvaIncident = R"json({
  "name": "eva_incident",
  "duration_s": 1800,
  "seed": 42,
  "context_node": "base",
  "ric_node": "base",
  "earth_node": "earth",
  "episodic_sync_s": 60,
  "context_topics": {
    "quality_map": {
      "width": 6, "height": 6,
      "quality": [0.9, 0.9, 0.9, 0.9, 0.9, 0.9,
                  0.9, 0.9, 0.9, 0.9, 0.9, 0.9,
                  0.9, 0.9, 0.9, 0.9, 0.9, 0.9,
                  0.9, 0.9, 0.9, 0.9, 0.9, 0.9,
                  0.9, 0.9, 0.9, 0.9, 0.9, 0.9,
                  0.9, 0.9, 0.9, 0.9, 0.9, 0.9],
      "blocked": []
    }
  },
  "nodes": [
    {"name": "astronaut-suit", "tier": "ROVER", "position": [120.0, 80.0],
     "pings": {"to": "rover-A", "interval_s": 5}},
    {"name": "rover-A", "tier": "ROVER", "position": [100.0, 60.0],
     "agent": {
       "uplink": "base",
       "earth": "earth",
       "staleness_limit_s": 10,
       "report_interval_s": 30,
       "system_load": 0.35,
       "interests": ["quality_map"],
       "watch_pings": [{"peer": "astronaut-suit", "interval_s": 5}],
       "start_cell": [0, 0],
       "goal_cell": [5, 5],
       "cache": {
         "quality_map": {
           "width": 6, "height": 6,
           "quality": [0.9, 0.9, 0.9, 0.9, 0.9, 0.9,
                       0.9, 0.9, 0.9, 0.9, 0.9, 0.9,
                       0.9, 0.9, 0.9, 0.9, 0.9, 0.9,
                       0.9, 0.9, 0.9, 0.9, 0.9, 0.9,
                       0.9, 0.9, 0.9, 0.9, 0.9, 0.9,
                       0.9, 0.9, 0.9, 0.9, 0.9, 0.9],
           "blocked": []
         }
       }
     }},
    {"name": "rover-B-high-terrain", "tier": "RELAY_HUB", "position": [90.0, 140.0],
     "agent": {"uplink": "base", "system_load": 0.2}},
    {"name": "base", "tier": "BASE", "position": [0.0, 0.0],
     "agent": {"uplink": "earth", "earth": "earth", "system_load": 0.5}},
    {"name": "earth", "tier": "EARTH", "position": [0.0, 0.0]}
  ],
  "links": [
    {"a": "astronaut-suit", "b": "rover-A",
     "bandwidth_bps": 32000, "delay_ms": 2, "quality": 0.9},
    {"a": "rover-A", "b": "rover-B-high-terrain",
     "bandwidth_bps": 256000, "delay_ms": 5, "quality": 0.55},
    {"a": "rover-A", "b": "base",
     "bandwidth_bps": 10000000, "delay_ms": 10, "quality": 0.9},
    {"a": "rover-B-high-terrain", "b": "base",
     "bandwidth_bps": 2000000, "delay_ms": 8, "quality": 0.8},
    {"a": "base", "b": "earth",
     "bandwidth_bps": 2000000, "delay_ms": 875, "quality": 0.95}
  ],
  "occlusions": [
    {"a": "rover-A", "b": "base", "start_s": 300, "end_s": 1200},
    {"a": "rover-A", "b": "rover-B-high-terrain", "start_s": 900, "end_s": 1100}
  ],
  "relays": [
    {"asset": "rover-A", "candidates": ["base", "rover-B-high-terrain"]}
  ],
  "incident": {
    "id": "eva-loss-of-comms",
    "links": [["astronaut-suit", "rover-A"],
              ["rover-A", "rover-B-high-terrain"],
              ["rover-A", "base"],
              ["rover-B-high-terrain", "base"]]
  },
  "events": [
    {"at_s": 360, "type": "suppress_pings", "node": "astronaut-suit"},
    {"at_s": 950, "type": "cache_put", "node": "rover-A",
     "topic": "quality_map",
     "value": {
       "width": 6, "height": 6,
       "quality": [0.9, 0.9, 0.9, 0.9, 0.9, 0.9,
                   0.9, 0.9, 0.9, 0.9, 0.9, 0.9,
                   0.1, 0.1, 0.1, 0.1, 0.1, 0.1,
                   0.1, 0.1, 0.1, 0.1, 0.1, 0.1,
                   0.9, 0.9, 0.9, 0.9, 0.9, 0.9,
                   0.9, 0.9, 0.9, 0.9, 0.9, 0.9],
       "blocked": []
     }},
    {"at_s": 1500, "type": "resolve_incident", "incident": "eva-loss-of-comms"}
  ]
})json";

// Nothing goes wrong: steady telemetry, episodic digests to Earth, no alerts.
constexpr const char* kQuiescent = R"json({
  "name": "quiescent",
  "duration_s": 120,
  "seed": 7,
  "context_node": "base",
  "ric_node": "base",
  "earth_node": "earth",
  "episodic_sync_s": 60,
  "nodes": [
    {"name": "rover-1", "tier": "ROVER", "position": [10.0, 10.0],
     "agent": {"uplink": "base", "system_load": 0.1}},
    {"name": "base", "tier": "BASE", "position": [0.0, 0.0],
     "agent": {"uplink": "earth", "system_load": 0.3}},
    {"name": "earth", "tier": "EARTH", "position": [0.0, 0.0]}
  ],
  "links": [
    {"a": "rover-1", "b": "base",
     "bandwidth_bps": 2000000, "delay_ms": 10, "quality": 0.9},
    {"a": "base", "b": "earth",
     "bandwidth_bps": 2000000, "delay_ms": 875, "quality": 0.95}
  ],
  "events": []
})json";

}  // namespace

std::vector<std::string> bundled_scenario_names() {
  return {"eva_incident", "quiescent"};
}

std::string bundled_scenario_text(const std::string& name) {
  if (name == "eva_incident") return kEvaIncident;
  if (name == "quiescent") return kQuiescent;
  throw std::invalid_argument("unknown bundled scenario '" + name + "'");
}

ScenarioSpec bundled_scenario(const std::string& name) {
  return ScenarioSpec::from_json(sim::json::parse(bundled_scenario_text(name)));
}

}  // namespace lunasim::scenario
