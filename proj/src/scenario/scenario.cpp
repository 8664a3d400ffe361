#include "lunasim/scenario/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lunasim/a2a/codec.hpp"
#include "lunasim/sim/hash.hpp"

namespace lunasim::scenario {

namespace {

using sim::json;

[[noreturn]] void fail(const std::string& path, const std::string& field,
                       const std::string& reason) {
  throw ValidationError(path, field, reason);
}

std::string idx(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

const json& member(const json& j, const std::string& path, const char* field) {
  if (!j.is_object()) fail(path, "", "expected an object");
  auto it = j.find(field);
  if (it == j.end()) fail(path, field, "missing required field");
  return *it;
}

std::string req_string(const json& j, const std::string& path,
                       const char* field) {
  const json& v = member(j, path, field);
  if (!v.is_string() || v.get<std::string>().empty())
    fail(path, field, "expected a non-empty string");
  return v.get<std::string>();
}

std::string opt_string(const json& j, const std::string& path,
                       const char* field, const std::string& dflt) {
  if (!j.is_object() || !j.contains(field)) return dflt;
  const json& v = j.at(field);
  if (!v.is_string()) fail(path, field, "expected a string");
  return v.get<std::string>();
}

double req_number(const json& j, const std::string& path, const char* field) {
  const json& v = member(j, path, field);
  if (!v.is_number()) fail(path, field, "expected a number");
  return v.get<double>();
}

double opt_number(const json& j, const std::string& path, const char* field,
                  double dflt) {
  if (!j.is_object() || !j.contains(field)) return dflt;
  const json& v = j.at(field);
  if (!v.is_number()) fail(path, field, "expected a number");
  return v.get<double>();
}

std::uint64_t opt_uint(const json& j, const std::string& path,
                       const char* field, std::uint64_t dflt) {
  if (!j.is_object() || !j.contains(field)) return dflt;
  const json& v = j.at(field);
  if (!v.is_number_integer() ||
      (v.is_number_integer() && !v.is_number_unsigned() &&
       v.get<std::int64_t>() < 0))
    fail(path, field, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

sim::Duration seconds_of(double s) {
  return sim::Duration{static_cast<std::uint64_t>(std::llround(s * 1e6))};
}

radio::Tier tier_from(const std::string& s, const std::string& path,
                      const char* field) {
  if (s == "ROVER") return radio::Tier::ROVER;
  if (s == "RELAY_HUB") return radio::Tier::RELAY_HUB;
  if (s == "BASE") return radio::Tier::BASE;
  if (s == "EARTH") return radio::Tier::EARTH;
  fail(path, field, "unknown tier '" + s + "'");
}

// Names feed trace keys and CSV cells, so keep them to a tame alphabet.
void check_name(const std::string& s, const std::string& path,
                const char* field) {
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    if (!ok) fail(path, field, "name '" + s + "' has characters outside [A-Za-z0-9._-]");
  }
}

mcp::Cell parse_cell(const json& j, const std::string& path,
                     const char* field) {
  const json& v = member(j, path, field);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
      !v[1].is_number_integer())
    fail(path, field, "expected [x, y] with integer coordinates");
  return {v[0].get<int>(), v[1].get<int>()};
}

AgentSpec parse_agent(const json& j, const std::string& path) {
  AgentSpec a;
  a.uplink = opt_string(j, path, "uplink", "");
  a.earth = opt_string(j, path, "earth", "");
  double stale = opt_number(j, path, "staleness_limit_s", 10.0);
  if (stale <= 0) fail(path, "staleness_limit_s", "must be positive");
  a.staleness_limit = seconds_of(stale);
  double report = opt_number(j, path, "report_interval_s", 30.0);
  if (report <= 0) fail(path, "report_interval_s", "must be positive");
  a.report_interval = seconds_of(report);
  a.system_load = opt_number(j, path, "system_load", 0.0);
  if (a.system_load < 0.0 || a.system_load > 1.0)
    fail(path, "system_load", "must be in [0, 1]");
  if (j.contains("interests")) {
    const json& v = j.at("interests");
    if (!v.is_array()) fail(path, "interests", "expected an array of topics");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string() || v[i].get<std::string>().empty())
        fail(idx(path + ".interests", i), "", "expected a non-empty string");
      a.interests.push_back(v[i].get<std::string>());
    }
  }
  if (j.contains("watch_pings")) {
    const json& v = j.at("watch_pings");
    if (!v.is_array()) fail(path, "watch_pings", "expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::string p = idx(path + ".watch_pings", i);
      WatchSpec w;
      w.peer = req_string(v[i], p, "peer");
      double interval = req_number(v[i], p, "interval_s");
      if (interval <= 0) fail(p, "interval_s", "must be positive");
      w.interval = seconds_of(interval);
      a.watch_pings.push_back(std::move(w));
    }
  }
  if (j.contains("cache")) {
    const json& v = j.at("cache");
    if (!v.is_object()) fail(path, "cache", "expected an object of topic: value");
    for (auto it = v.begin(); it != v.end(); ++it)
      a.cache.emplace(it.key(), it.value());
  }
  if (j.contains("start_cell")) a.start_cell = parse_cell(j, path, "start_cell");
  if (j.contains("goal_cell")) a.goal_cell = parse_cell(j, path, "goal_cell");
  return a;
}

NodeSpec parse_node(const json& j, std::size_t i) {
  std::string path = idx("nodes", i);
  NodeSpec n;
  n.name = req_string(j, path, "name");
  check_name(n.name, path, "name");
  n.tier = tier_from(req_string(j, path, "tier"), path, "tier");
  if (j.contains("position")) {
    const json& v = j.at("position");
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      fail(path, "position", "expected [x, y] in meters");
    n.x = v[0].get<double>();
    n.y = v[1].get<double>();
  }
  if (j.contains("agent")) n.agent = parse_agent(j.at("agent"), path + ".agent");
  if (j.contains("pings")) {
    std::string p = path + ".pings";
    PingSpec ping;
    ping.to = req_string(j.at("pings"), p, "to");
    double interval = req_number(j.at("pings"), p, "interval_s");
    if (interval <= 0) fail(p, "interval_s", "must be positive");
    ping.interval = seconds_of(interval);
    n.pings = std::move(ping);
  }
  return n;
}

LinkSpec parse_link(const json& j, std::size_t i) {
  std::string path = idx("links", i);
  LinkSpec l;
  l.a = req_string(j, path, "a");
  l.b = req_string(j, path, "b");
  const json& bw = member(j, path, "bandwidth_bps");
  if (!bw.is_number_integer() || bw.get<std::int64_t>() <= 0)
    fail(path, "bandwidth_bps", "expected a positive integer");
  l.cfg.bandwidth_bps = bw.get<std::uint64_t>();
  double delay = opt_number(j, path, "delay_ms", 1.0);
  if (delay < 0) fail(path, "delay_ms", "must be non-negative");
  l.cfg.one_way_delay = sim::Duration{static_cast<std::uint64_t>(std::llround(delay * 1e3))};
  l.cfg.quality = opt_number(j, path, "quality", 1.0);
  if (l.cfg.quality < 0.0 || l.cfg.quality > 1.0)
    fail(path, "quality", "must be in [0, 1]");
  l.cfg.mtu = static_cast<std::uint32_t>(opt_uint(j, path, "mtu", 65'536));
  if (l.cfg.mtu == 0) fail(path, "mtu", "must be positive");
  return l;
}

std::string link_key(const std::string& a, const std::string& b) {
  return a < b ? a + "|" + b : b + "|" + a;
}

}  // namespace

const NodeSpec* ScenarioSpec::find_node(const std::string& name) const {
  for (const auto& n : nodes)
    if (n.name == name) return &n;
  return nullptr;
}

ScenarioSpec ScenarioSpec::from_json(const json& j) {
  const std::string root = "scenario";
  if (!j.is_object()) fail(root, "", "expected a JSON object");

  ScenarioSpec s;
  s.name = req_string(j, root, "name");
  double dur = req_number(j, root, "duration_s");
  if (dur <= 0) fail(root, "duration_s", "must be positive");
  s.duration = seconds_of(dur);
  s.seed = opt_uint(j, root, "seed", 1);

  const json& nodes = member(j, root, "nodes");
  if (!nodes.is_array() || nodes.empty())
    fail(root, "nodes", "expected a non-empty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    NodeSpec n = parse_node(nodes[i], i);
    if (!names.insert(n.name).second)
      fail(idx("nodes", i), "name", "duplicate node '" + n.name + "'");
    s.nodes.push_back(std::move(n));
  }
  auto known = [&](const std::string& n) { return names.count(n) > 0; };

  std::set<std::string> link_keys;
  if (j.contains("links")) {
    const json& links = j.at("links");
    if (!links.is_array()) fail(root, "links", "expected an array");
    for (std::size_t i = 0; i < links.size(); ++i) {
      LinkSpec l = parse_link(links[i], i);
      std::string path = idx("links", i);
      if (!known(l.a)) fail(path, "a", "unknown node '" + l.a + "'");
      if (!known(l.b)) fail(path, "b", "unknown node '" + l.b + "'");
      if (l.a == l.b) fail(path, "b", "link endpoints must differ");
      if (!link_keys.insert(link_key(l.a, l.b)).second)
        fail(path, "", "duplicate link " + l.a + " - " + l.b);
      s.links.push_back(std::move(l));
    }
  }
  auto has_link = [&](const std::string& a, const std::string& b) {
    return link_keys.count(link_key(a, b)) > 0;
  };

  if (j.contains("occlusions")) {
    const json& occs = j.at("occlusions");
    if (!occs.is_array()) fail(root, "occlusions", "expected an array");
    std::map<std::string, std::vector<std::pair<std::uint64_t, std::uint64_t>>>
        windows;
    for (std::size_t i = 0; i < occs.size(); ++i) {
      std::string path = idx("occlusions", i);
      OcclusionSpec o;
      o.a = req_string(occs[i], path, "a");
      o.b = req_string(occs[i], path, "b");
      if (!known(o.a)) fail(path, "a", "unknown node '" + o.a + "'");
      if (!known(o.b)) fail(path, "b", "unknown node '" + o.b + "'");
      if (!has_link(o.a, o.b))
        fail(path, "", "no link between '" + o.a + "' and '" + o.b + "'");
      double start = req_number(occs[i], path, "start_s");
      double end = req_number(occs[i], path, "end_s");
      if (start < 0) fail(path, "start_s", "must be non-negative");
      if (end <= start) fail(path, "end_s", "must exceed start_s");
      o.start = sim::SimTime{seconds_of(start).us};
      o.end = sim::SimTime{seconds_of(end).us};
      windows[link_key(o.a, o.b)].push_back({o.start.us, o.end.us});
      s.occlusions.push_back(std::move(o));
    }
    for (auto& [key, spans] : windows) {
      std::sort(spans.begin(), spans.end());
      for (std::size_t i = 1; i < spans.size(); ++i)
        if (spans[i].first < spans[i - 1].second)
          fail(root, "occlusions", "overlapping windows on link " + key);
    }
  }

  s.context_node = opt_string(j, root, "context_node", "");
  if (!s.context_node.empty() && !known(s.context_node))
    fail(root, "context_node", "unknown node '" + s.context_node + "'");
  s.ric_node = opt_string(j, root, "ric_node", "");
  if (!s.ric_node.empty() && !known(s.ric_node))
    fail(root, "ric_node", "unknown node '" + s.ric_node + "'");
  s.earth_node = opt_string(j, root, "earth_node", "");
  if (!s.earth_node.empty()) {
    if (!known(s.earth_node))
      fail(root, "earth_node", "unknown node '" + s.earth_node + "'");
    if (s.find_node(s.earth_node)->tier != radio::Tier::EARTH)
      fail(root, "earth_node", "node '" + s.earth_node + "' must have tier EARTH");
  }

  double sync = opt_number(j, root, "episodic_sync_s", 60.0);
  if (sync < 1.0 || sync != std::floor(sync))
    fail(root, "episodic_sync_s", "must be a whole number of seconds >= 1");
  s.episodic_sync = seconds_of(sync);

  if (j.contains("context_topics")) {
    if (s.context_node.empty())
      fail(root, "context_topics", "requires context_node");
    const json& v = j.at("context_topics");
    if (!v.is_object()) fail(root, "context_topics", "expected an object");
    for (auto it = v.begin(); it != v.end(); ++it)
      s.context_topics.emplace(it.key(), it.value());
  }

  if (j.contains("relays")) {
    const json& relays = j.at("relays");
    if (!relays.is_array()) fail(root, "relays", "expected an array");
    if (!relays.empty() && s.ric_node.empty())
      fail(root, "relays", "requires ric_node");
    for (std::size_t i = 0; i < relays.size(); ++i) {
      std::string path = idx("relays", i);
      RelaySpec r;
      r.asset = req_string(relays[i], path, "asset");
      if (!known(r.asset)) fail(path, "asset", "unknown node '" + r.asset + "'");
      const json& cands = member(relays[i], path, "candidates");
      if (!cands.is_array() || cands.empty())
        fail(path, "candidates", "expected a non-empty array");
      for (std::size_t k = 0; k < cands.size(); ++k) {
        std::string cp = idx(path + ".candidates", k);
        if (!cands[k].is_string()) fail(cp, "", "expected a node name");
        std::string c = cands[k].get<std::string>();
        if (!known(c)) fail(cp, "", "unknown node '" + c + "'");
        if (!has_link(r.asset, c))
          fail(cp, "", "no link between '" + r.asset + "' and '" + c + "'");
        r.candidates.push_back(std::move(c));
      }
      s.relays.push_back(std::move(r));
    }
  }

  if (j.contains("incident")) {
    const json& inc = j.at("incident");
    std::string path = "incident";
    IncidentSpec spec;
    spec.id = req_string(inc, path, "id");
    if (s.ric_node.empty()) fail(path, "", "requires ric_node");
    const json& links = member(inc, path, "links");
    if (!links.is_array() || links.empty())
      fail(path, "links", "expected a non-empty array of [a, b] pairs");
    for (std::size_t i = 0; i < links.size(); ++i) {
      std::string lp = idx(path + ".links", i);
      if (!links[i].is_array() || links[i].size() != 2 ||
          !links[i][0].is_string() || !links[i][1].is_string())
        fail(lp, "", "expected [a, b] node names");
      std::string a = links[i][0].get<std::string>();
      std::string b = links[i][1].get<std::string>();
      if (!known(a)) fail(lp, "", "unknown node '" + a + "'");
      if (!known(b)) fail(lp, "", "unknown node '" + b + "'");
      if (!has_link(a, b)) fail(lp, "", "no link between '" + a + "' and '" + b + "'");
      spec.links.emplace_back(std::move(a), std::move(b));
    }
    const NodeSpec* rn = s.find_node(s.ric_node);
    if (!rn->agent.has_value())
      fail(path, "", "incident response needs an agent at ric_node '" + s.ric_node + "'");
    s.incident = std::move(spec);
  }

  // Per-agent cross references, now that the node and link tables are final.
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    const NodeSpec& n = s.nodes[i];
    std::string path = idx("nodes", i);
    if (n.pings) {
      if (!known(n.pings->to))
        fail(path + ".pings", "to", "unknown node '" + n.pings->to + "'");
      if (!has_link(n.name, n.pings->to))
        fail(path + ".pings", "to",
             "no link between '" + n.name + "' and '" + n.pings->to + "'");
    }
    if (!n.agent) continue;
    std::string ap = path + ".agent";
    if (!n.agent->uplink.empty()) {
      if (!known(n.agent->uplink))
        fail(ap, "uplink", "unknown node '" + n.agent->uplink + "'");
      if (n.agent->uplink == n.name)
        fail(ap, "uplink", "uplink must differ from the node itself");
    }
    if (!n.agent->earth.empty() && !known(n.agent->earth))
      fail(ap, "earth", "unknown node '" + n.agent->earth + "'");
    for (std::size_t k = 0; k < n.agent->watch_pings.size(); ++k)
      if (!known(n.agent->watch_pings[k].peer))
        fail(idx(ap + ".watch_pings", k), "peer",
             "unknown node '" + n.agent->watch_pings[k].peer + "'");
  }

  if (j.contains("events")) {
    const json& events = j.at("events");
    if (!events.is_array()) fail(root, "events", "expected an array");
    for (std::size_t i = 0; i < events.size(); ++i) {
      std::string path = idx("events", i);
      EventSpec ev;
      double at = req_number(events[i], path, "at_s");
      if (at < 0) fail(path, "at_s", "must be non-negative");
      if (at > dur) fail(path, "at_s", "beyond scenario duration");
      ev.at = sim::SimTime{seconds_of(at).us};
      ev.type = req_string(events[i], path, "type");
      ev.params = events[i];
      ev.params.erase("at_s");
      ev.params.erase("type");
      if (ev.type == "suppress_pings" || ev.type == "restore_pings" ||
          ev.type == "halt_node") {
        std::string node = req_string(ev.params, path, "node");
        if (!known(node)) fail(path, "node", "unknown node '" + node + "'");
      } else if (ev.type == "set_link_quality") {
        std::string a = req_string(ev.params, path, "a");
        std::string b = req_string(ev.params, path, "b");
        if (!known(a)) fail(path, "a", "unknown node '" + a + "'");
        if (!known(b)) fail(path, "b", "unknown node '" + b + "'");
        if (!has_link(a, b))
          fail(path, "", "no link between '" + a + "' and '" + b + "'");
        double q = req_number(ev.params, path, "quality");
        if (q < 0.0 || q > 1.0) fail(path, "quality", "must be in [0, 1]");
      } else if (ev.type == "cache_put") {
        std::string node = req_string(ev.params, path, "node");
        if (!known(node)) fail(path, "node", "unknown node '" + node + "'");
        if (!s.find_node(node)->agent.has_value())
          fail(path, "node", "node '" + node + "' has no agent");
        req_string(ev.params, path, "topic");
        member(ev.params, path, "value");
      } else if (ev.type == "publish") {
        if (s.context_node.empty()) fail(path, "", "requires context_node");
        req_string(ev.params, path, "topic");
        member(ev.params, path, "value");
      } else if (ev.type == "resolve_incident") {
        std::string id = req_string(ev.params, path, "incident");
        if (!s.incident || s.incident->id != id)
          fail(path, "incident", "unknown incident '" + id + "'");
      } else {
        fail(path, "type", "unknown event type '" + ev.type + "'");
      }
      s.events.push_back(std::move(ev));
    }
  }

  return s;
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read scenario file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("invalid JSON in " + path + ": " + e.what());
  }
  return ScenarioSpec::from_json(j);
}

// ---------------------------------------------------------------------------
// Runner

namespace {

constexpr std::uint64_t kPingBytes = 16;
constexpr sim::Duration kRelayLookahead = sim::secs(10);

class ScenarioRun {
 public:
  explicit ScenarioRun(const ScenarioSpec& spec)
      : spec_(spec), engine_(spec.seed), env_(engine_), net_(engine_, env_) {}

  RunResult run() {
    build();
    engine_.run_until(sim::SimTime{spec_.duration.us});
    RunResult rr;
    rr.trace = engine_.trace().records();
    rr.trace_jsonl = engine_.trace().to_jsonl();
    rr.report = MetricsReport::from_trace(rr.trace, spec_.duration);
    return rr;
  }

 private:
  void build() {
    for (const auto& n : spec_.nodes) env_.add_node(n.name, n.tier);
    for (const auto& l : spec_.links) env_.add_link(l.a, l.b, l.cfg);
    for (const auto& o : spec_.occlusions)
      env_.add_occlusion(o.a, o.b, o.start, o.end);
    // Halts are contact-plan facts, so they land before routing starts; the
    // scheduled event record just marks the instant in the trace.
    for (const auto& ev : spec_.events)
      if (ev.type == "halt_node")
        env_.script_halt(ev.params.at("node").get<std::string>(), ev.at);

    for (const auto& l : spec_.links) {
      auto shares = env_.baseline_shares(l.a, l.b);
      engine_.emit(l.a, "policy_baseline",
                   {{"a", l.a},
                    {"b", l.b},
                    {"emergency", shares.emergency},
                    {"operational", shares.operational},
                    {"bulk", shares.bulk},
                    {"emergency_bps",
                     shares.effective_bps(radio::TrafficClass::EMERGENCY,
                                          l.cfg.bandwidth_bps)}});
    }

    if (!spec_.context_node.empty())
      server_ = std::make_unique<mcp::ContextServer>(engine_, env_,
                                                     spec_.context_node);
    if (server_)
      for (const auto& [topic, value] : spec_.context_topics)
        server_->publish(topic, value);

    for (const auto& n : spec_.nodes) {
      if (!n.agent) continue;
      agent::Agent::Config cfg;
      cfg.node = n.name;
      cfg.role = n.tier;
      cfg.uplink = n.agent->uplink;
      cfg.earth = n.agent->earth;
      cfg.staleness_limit = n.agent->staleness_limit;
      cfg.report_interval = n.agent->report_interval;
      auto ag = std::make_unique<agent::Agent>(engine_, env_, cfg);
      if (server_) ag->attach_context(server_.get());
      ag->attach_dtn(&net_);
      if (n.agent->start_cell) ag->set_position(*n.agent->start_cell);
      if (n.agent->goal_cell) ag->set_goal(*n.agent->goal_cell);
      for (const auto& t : n.agent->interests) ag->add_interest(t);
      for (const auto& [topic, value] : n.agent->cache)
        ag->cache_put(topic, value);
      for (const auto& w : n.agent->watch_pings) {
        ag->expect_pings(w.peer, w.interval);
        if (const NodeSpec* peer = spec_.find_node(w.peer))
          ag->cache_put("pos/" + w.peer, {{"x", peer->x}, {"y", peer->y}});
      }
      std::array<double, a2a::kVectorLength> values{};
      for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = 0.01 * static_cast<double>(i);
      ag->set_telemetry(values);
      ag->set_send_handler([this](const std::string& to,
                                  const std::string& encoded, sim::SimTime at) {
        dispatch(to, encoded, at);
      });
      agents_.emplace(n.name, std::move(ag));
    }

    if (!spec_.ric_node.empty()) {
      ric_ = std::make_unique<ric::NearRtRic>(engine_, env_, spec_.ric_node);
      ric_->attach_dtn(&net_);
      for (const auto& n : spec_.nodes) {
        auto it = agents_.find(n.name);
        if (it == agents_.end()) continue;
        auto sapp = std::make_unique<ric::Sapp>(engine_, env_, *it->second);
        sapp->set_system_load(n.agent->system_load);
        sapp->on_sample([this](const ric::TelemetrySample& s) { ric_->ingest(s); });
        sapp->start(sim::SimTime{spec_.duration.us});
        sapps_.push_back(std::move(sapp));
      }
    }
    if (ric_ && !spec_.earth_node.empty())
      twin_ = std::make_unique<ric::NonRtTwin>(engine_, env_, spec_.earth_node,
                                               spec_.ric_node);

    if (spec_.incident) {
      agents_.at(spec_.ric_node)
          ->set_decision_handler([this](const sim::json& record) {
            if (incident_declared_) return;
            if (record.at("decision").get<std::string>() !=
                "REALLOCATE_BANDWIDTH")
              return;
            incident_declared_ = true;
            ric_->declare_incident(spec_.incident->id, spec_.incident->links);
            ric_->reallocate(spec_.incident->id);
          });
    }

    net_.on_delivery([this](const dtn::Bundle& b, const std::string& node,
                            sim::SimTime) {
      if (twin_ && node == spec_.earth_node) {
        json j = json::parse(b.payload, nullptr, /*allow_exceptions=*/false);
        if (j.is_object() && j.contains("samples")) {
          twin_->sync(j);
          return;
        }
      }
      auto it = agents_.find(node);
      if (it == agents_.end()) return;
      try {
        a2a::SemanticMessage msg = a2a::decode(b.payload);
        if (msg.kind == a2a::MessageKind::ALERT)
          it->second->handle_alert(msg, agent::Via::DTN);
      } catch (const std::exception&) {
        // Non-semantic payloads and replayed alerts end at the destination.
      }
    });

    net_.start(sim::SimTime{spec_.duration.us});

    for (const auto& ev : spec_.events) {
      engine_.schedule_at(ev.at, event_target(ev), ev.type, ev.params,
                          [this, &ev] { apply_event(ev); });
    }

    for (const auto& n : spec_.nodes)
      if (n.pings) schedule_ping(n, 0);

    schedule_tick(0);
  }

  std::string event_target(const EventSpec& ev) const {
    if (ev.params.contains("node")) return ev.params.at("node").get<std::string>();
    if (ev.params.contains("a")) return ev.params.at("a").get<std::string>();
    if (ev.type == "publish") return spec_.context_node;
    if (ev.type == "resolve_incident") return spec_.ric_node;
    return spec_.name;
  }

  void apply_event(const EventSpec& ev) {
    const json& p = ev.params;
    if (ev.type == "suppress_pings") {
      suppressed_.insert(p.at("node").get<std::string>());
    } else if (ev.type == "restore_pings") {
      suppressed_.erase(p.at("node").get<std::string>());
    } else if (ev.type == "set_link_quality") {
      env_.set_quality(p.at("a").get<std::string>(),
                       p.at("b").get<std::string>(),
                       p.at("quality").get<double>());
    } else if (ev.type == "cache_put") {
      agents_.at(p.at("node").get<std::string>())
          ->cache_put(p.at("topic").get<std::string>(), p.at("value"));
    } else if (ev.type == "publish") {
      server_->publish(p.at("topic").get<std::string>(), p.at("value"));
    } else if (ev.type == "resolve_incident") {
      std::string id = p.at("incident").get<std::string>();
      if (ric_ && ric_->incident_active(id)) ric_->resolve_incident(id);
    }
    // halt_node was folded into the contact plan before the run began.
  }

  void dispatch(const std::string& to, const std::string& encoded,
                sim::SimTime) {
    auto it = agents_.find(to);
    if (it == agents_.end()) return;
    a2a::SemanticMessage msg;
    try {
      msg = a2a::decode(encoded);
    } catch (const std::exception&) {
      return;
    }
    if (msg.kind != a2a::MessageKind::ALERT) return;
    // Direct only if the originator could have reached us itself right now;
    // an occluded or absent link means some other node carried the message.
    auto nbrs = env_.neighbors(to);
    bool direct =
        std::find(nbrs.begin(), nbrs.end(), msg.sender) != nbrs.end() &&
        env_.is_up(to, msg.sender, engine_.now());
    try {
      it->second->handle_alert(msg,
                               direct ? agent::Via::DIRECT : agent::Via::RELAY);
    } catch (const agent::DuplicateAlert&) {
    }
  }

  void schedule_ping(const NodeSpec& n, std::uint64_t k) {
    sim::SimTime at{k * n.pings->interval.us};
    if (at.us >= spec_.duration.us) return;
    engine_.schedule_quiet(at, [this, &n, k] {
      sim::SimTime now = engine_.now();
      if (!suppressed_.count(n.name) && !env_.is_halted(n.name, now) &&
          env_.is_up(n.name, n.pings->to, now)) {
        auto res = env_.transmit(n.name, n.pings->to, kPingBytes,
                                 radio::TrafficClass::OPERATIONAL, now);
        std::string from = n.name;
        std::string to = n.pings->to;
        engine_.schedule_at(res.arrival, to, "ping", {{"from", from}},
                            [this, from, to] {
                              auto it = agents_.find(to);
                              if (it == agents_.end()) return;
                              try {
                                it->second->record_ping(from);
                              } catch (const std::exception&) {
                              }
                            });
      }
      schedule_ping(n, k + 1);
    });
  }

  void schedule_tick(std::uint64_t second) {
    sim::SimTime at = sim::at_secs(second);
    if (at.us >= spec_.duration.us) return;
    engine_.schedule_quiet(at, [this, second] {
      relay_tick();
      for (auto& [name, ag] : agents_)
        if (!env_.is_halted(name, engine_.now())) ag->step();
      std::uint64_t sync_s = spec_.episodic_sync.us / 1'000'000;
      if (ric_ && twin_ && second > 0 && second % sync_s == 0) episodic_tick();
      schedule_tick(second + 1);
    });
  }

  void relay_tick() {
    if (!ric_) return;
    for (const auto& r : spec_.relays) {
      sim::SimTime horizon = engine_.now() + kRelayLookahead;
      std::string best;
      double best_q = -1.0;
      for (const auto& c : r.candidates) {
        double q = env_.predict_quality(r.asset, c, horizon).estimate;
        if (q > best_q || (q == best_q && c < best)) {
          best = c;
          best_q = q;
        }
      }
      std::string& current = chosen_relay_[r.asset];
      if (current == best) continue;
      current = best;
      ric_->relay_switch(r.asset, r.candidates);
    }
  }

  void episodic_tick() {
    dtn::Bundle b;
    b.id = sim::fnv1a64(spec_.ric_node + "/digest#" +
                        std::to_string(++digest_seq_));
    b.src = spec_.ric_node;
    b.dst = spec_.earth_node;
    b.priority = dtn::Priority::BULK;
    b.created_at = engine_.now();
    b.ttl = dtn::default_ttl(b.priority);
    b.payload = ric_->digest().dump();
    net_.enqueue(spec_.ric_node, b);
    try {
      net_.episodic_sync(spec_.ric_node, spec_.earth_node);
    } catch (const radio::LinkDown&) {
      // Window missed; bundles stay parked for the next pass.
    }
  }

  const ScenarioSpec& spec_;
  sim::Engine engine_;
  radio::RadioEnvironment env_;
  dtn::BundleNetwork net_;
  std::unique_ptr<mcp::ContextServer> server_;
  std::map<std::string, std::unique_ptr<agent::Agent>> agents_;
  std::vector<std::unique_ptr<ric::Sapp>> sapps_;
  std::unique_ptr<ric::NearRtRic> ric_;
  std::unique_ptr<ric::NonRtTwin> twin_;
  std::set<std::string> suppressed_;
  std::map<std::string, std::string> chosen_relay_;
  std::uint64_t digest_seq_{0};
  bool incident_declared_{false};
};

}  // namespace

RunResult run_scenario(const ScenarioSpec& spec) {
  ScenarioRun run(spec);
  return run.run();
}

// ---------------------------------------------------------------------------
// Metrics

MetricsReport MetricsReport::from_trace(const std::vector<json>& records,
                                        sim::Duration duration) {
  MetricsReport r;
  r.duration = duration;

  std::optional<std::uint64_t> raised;
  std::map<std::string, std::uint64_t> first_received;
  std::map<std::uint64_t, std::string> bundle_class;
  std::uint64_t local = 0;

  for (const auto& rec : records) {
    if (!rec.is_object()) continue;
    std::string kind = rec.value("kind", "");
    std::uint64_t t = rec.value("t", std::uint64_t{0});
    std::string target = rec.value("target", "");

    if (kind == "alert_raised") {
      if (!raised) raised = t;
    } else if (kind == "alert_received") {
      first_received.emplace(target, t);
    } else if (kind == "bundle_created") {
      std::uint64_t id = rec.value("id", std::uint64_t{0});
      std::string cls = rec.value("priority", "");
      if (!cls.empty() && bundle_class.emplace(id, cls).second)
        r.bundle_counts[cls].created += 1;
    } else if (kind == "bundle_delivered") {
      auto it = bundle_class.find(rec.value("id", std::uint64_t{0}));
      if (it != bundle_class.end()) r.bundle_counts[it->second].delivered += 1;
    } else if (kind == "decision") {
      r.decision_count += 1;
      if (rec.value("made_by", "") == "LOCAL") local += 1;
    } else if (kind == "policy_baseline" || kind == "policy_reallocated" ||
               kind == "policy_restored") {
      std::string a = rec.value("a", "");
      std::string b = rec.value("b", "");
      if (!a.empty() && !b.empty())
        r.emergency_bandwidth[link_key(a, b)].push_back(
            {t, rec.value("emergency_bps", std::uint64_t{0})});
    } else if (kind == "agent_step") {
      std::string regime = rec.value("regime", "");
      auto& tl = r.regime_timeline[target];
      if (tl.empty() || tl.back().regime != regime) tl.push_back({t, regime});
    }

    if (rec.contains("tier") && rec.at("tier").is_string())
      r.messages_by_tier[rec.at("tier").get<std::string>()] += 1;
  }

  r.alert_raised_us = raised;
  if (raised && !first_received.empty()) {
    std::uint64_t latest = 0;
    for (const auto& [node, t] : first_received) latest = std::max(latest, t);
    r.alert_e2e_latency_us = latest - *raised;
  }
  for (const auto& [cls, counts] : r.bundle_counts)
    if (counts.created > 0)
      r.delivery_ratio[cls] =
          static_cast<double>(counts.delivered) / counts.created;
  if (r.decision_count > 0)
    r.autonomous_decision_fraction =
        static_cast<double>(local) / r.decision_count;
  return r;
}

json MetricsReport::to_json() const {
  json alert;  // null when the run raised none
  if (alert_raised_us) {
    alert = json{{"raised_us", *alert_raised_us}};
    if (alert_e2e_latency_us) alert["e2e_latency_us"] = *alert_e2e_latency_us;
  }
  json counts = json::object();
  for (const auto& [cls, c] : bundle_counts)
    counts[cls] = {{"created", c.created}, {"delivered", c.delivered}};
  json bw = json::object();
  for (const auto& [link, points] : emergency_bandwidth) {
    json arr = json::array();
    for (const auto& p : points)
      arr.push_back({{"t_us", p.t_us}, {"bps", p.bps}});
    bw[link] = std::move(arr);
  }
  json regimes = json::object();
  for (const auto& [node, points] : regime_timeline) {
    json arr = json::array();
    for (const auto& p : points)
      arr.push_back({{"t_us", p.t_us}, {"regime", p.regime}});
    regimes[node] = std::move(arr);
  }
  return {{"duration_us", duration.us},
          {"alert", alert},
          {"bundle_counts", counts},
          {"delivery_ratio", delivery_ratio},
          {"decision_count", decision_count},
          {"autonomous_decision_fraction", autonomous_decision_fraction},
          {"emergency_bandwidth_timeline", bw},
          {"regime_timeline", regimes},
          {"messages_by_tier", messages_by_tier}};
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  out << "metric,key,t_us,value\n";
  out << "duration_us,,," << duration.us << "\n";
  if (alert_raised_us) out << "alert_raised_us,,," << *alert_raised_us << "\n";
  if (alert_e2e_latency_us)
    out << "alert_e2e_latency_us,,," << *alert_e2e_latency_us << "\n";
  for (const auto& [cls, c] : bundle_counts) {
    out << "bundles_created," << cls << ",," << c.created << "\n";
    out << "bundles_delivered," << cls << ",," << c.delivered << "\n";
  }
  for (const auto& [cls, ratio] : delivery_ratio)
    out << "delivery_ratio," << cls << ",," << fmt_double(ratio) << "\n";
  out << "decision_count,,," << decision_count << "\n";
  out << "autonomous_decision_fraction,,,"
      << fmt_double(autonomous_decision_fraction) << "\n";
  for (const auto& [link, points] : emergency_bandwidth)
    for (const auto& p : points)
      out << "emergency_bandwidth_bps," << link << "," << p.t_us << ","
          << p.bps << "\n";
  for (const auto& [node, points] : regime_timeline)
    for (const auto& p : points)
      out << "regime," << node << "," << p.t_us << "," << p.regime << "\n";
  for (const auto& [tier, count] : messages_by_tier)
    out << "messages_by_tier," << tier << ",," << count << "\n";
  return out.str();
}

}  // namespace lunasim::scenario
