#include "lunasim/agent/agent.hpp"

#include <algorithm>
#include <limits>

#include "lunasim/a2a/codec.hpp"
#include "lunasim/dtn/router.hpp"
#include "lunasim/sim/hash.hpp"

namespace lunasim::agent {

const char* to_string(DisseminationMode m) {
  switch (m) {
    case DisseminationMode::PUSH_REALTIME: return "PUSH_REALTIME";
    case DisseminationMode::PULL_CACHED: return "PULL_CACHED";
    case DisseminationMode::AUTONOMOUS_BULK: return "AUTONOMOUS_BULK";
  }
  return "UNKNOWN";
}

const char* to_string(DecisionAction a) {
  switch (a) {
    case DecisionAction::REALLOCATE_BANDWIDTH: return "REALLOCATE_BANDWIDTH";
    case DecisionAction::REQUEST_HANDOVER: return "REQUEST_HANDOVER";
    case DecisionAction::ADAPT_SAMPLING_RATE: return "ADAPT_SAMPLING_RATE";
    case DecisionAction::REROUTE: return "REROUTE";
    case DecisionAction::SEND_ALERT: return "SEND_ALERT";
    case DecisionAction::RELAY_ACCEPT: return "RELAY_ACCEPT";
  }
  return "UNKNOWN";
}

const char* to_string(Criticality c) {
  return c == Criticality::CRITICAL ? "CRITICAL" : "NON_CRITICAL";
}

const char* to_string(DecisionRoute r) {
  return r == DecisionRoute::LOCAL ? "LOCAL" : "DEFER_TO_EARTH";
}

const char* to_string(Via v) {
  switch (v) {
    case Via::DIRECT: return "DIRECT";
    case Via::RELAY: return "RELAY";
    case Via::BROKER: return "BROKER";
    case Via::DTN: return "DTN";
  }
  return "UNKNOWN";
}

DisseminationMode mode_for(radio::Regime regime) {
  switch (regime) {
    case radio::Regime::HIGH: return DisseminationMode::PUSH_REALTIME;
    case radio::Regime::MODERATE: return DisseminationMode::PULL_CACHED;
    case radio::Regime::POOR: return DisseminationMode::AUTONOMOUS_BULK;
  }
  return DisseminationMode::AUTONOMOUS_BULK;
}

sim::Duration planning_horizon(sim::Duration predicted_delay) {
  // H_max * d0 in microseconds squared: 600 s * 2 s.
  constexpr std::uint64_t kNumerator = 1'200'000'000'000'000ull;
  constexpr std::uint64_t kD0Us = 2'000'000;
  if (predicted_delay.us >= kNumerator) return sim::Duration{0};
  return sim::Duration{kNumerator / (kD0Us + predicted_delay.us)};
}

double modulate_confidence(double base, double link_quality) {
  if (!(base >= 0.0 && base <= 1.0) ||
      !(link_quality >= 0.0 && link_quality <= 1.0))
    throw std::invalid_argument("confidence inputs must lie in [0, 1]");
  return base * link_quality;
}

DecisionRoute autonomous_decision_gate(sim::Duration deadline,
                                       sim::Duration earth_rtt) {
  constexpr std::uint64_t kProcessingMarginUs = 500'000;
  return earth_rtt.us + kProcessingMarginUs > deadline.us
             ? DecisionRoute::LOCAL
             : DecisionRoute::DEFER_TO_EARTH;
}

Agent::Agent(sim::Engine& engine, radio::RadioEnvironment& env, Config cfg)
    : engine_(engine), env_(env), cfg_(std::move(cfg)) {
  if (!env_.has_node(cfg_.node))
    throw std::invalid_argument("agent node is not in the environment");
}

void Agent::set_base_confidence(double b) {
  if (!(b >= 0.0 && b <= 1.0))
    throw std::invalid_argument("base confidence must lie in [0, 1]");
  base_confidence_ = b;
}

void Agent::add_peer(const std::string& peer, double initial) {
  if (!(initial >= 0.0 && initial <= 1.0))
    throw std::invalid_argument("availability must lie in [0, 1]");
  availability_[peer] = initial;
}

double Agent::peer_availability(const std::string& peer) const {
  auto it = availability_.find(peer);
  if (it == availability_.end()) throw UnknownPeer("no peer " + peer);
  return it->second;
}

double Agent::observe_peer(const std::string& peer, bool observed_up) {
  auto it = availability_.find(peer);
  if (it == availability_.end()) throw UnknownPeer("no peer " + peer);
  it->second = (1.0 - kAvailabilityAlpha) * it->second +
               kAvailabilityAlpha * (observed_up ? 1.0 : 0.0);
  return it->second;
}

void Agent::add_interest(const std::string& topic) { interests_.insert(topic); }

void Agent::cache_put(const std::string& topic, sim::json value) {
  cache_[topic] = {std::move(value), engine_.now()};
}

std::optional<CacheEntry> Agent::cached(const std::string& topic) const {
  auto it = cache_.find(topic);
  if (it == cache_.end()) return std::nullopt;
  return it->second;
}

sim::Duration Agent::staleness(const std::string& topic) const {
  auto it = cache_.find(topic);
  if (it == cache_.end())
    return sim::Duration{std::numeric_limits<std::uint64_t>::max()};
  return engine_.now().since(it->second.stamp);
}

void Agent::on_push(const std::string& topic, const sim::json& update,
                    sim::SimTime at) {
  cache_[topic] = {update, at};
}

void Agent::expect_pings(const std::string& peer, sim::Duration interval) {
  if (interval.us == 0) throw std::invalid_argument("ping interval must be positive");
  pings_[peer] = {interval, engine_.now(), false};
}

void Agent::record_ping(const std::string& peer) {
  auto it = pings_.find(peer);
  if (it == pings_.end()) throw UnknownPeer("no ping watch for " + peer);
  it->second.last_ping = engine_.now();
  it->second.latched = false;
}

Agent::BestLink Agent::best_link(sim::SimTime now) const {
  // The uplink selector prefers the link granting the best regime; a clean
  // but narrow pipe beats a strong carrier too slow to leave POOR.
  BestLink best;
  int best_rank = -1;
  auto nbrs = env_.neighbors(cfg_.node);
  std::sort(nbrs.begin(), nbrs.end());
  for (const auto& nbr : nbrs) {
    auto ls = env_.link_at(cfg_.node, nbr, now);
    if (!ls.up) continue;
    int rank = static_cast<int>(
        radio::classify_regime(ls.quality, ls.bandwidth_bps, regime_));
    bool better = best.peer.empty() || rank > best_rank ||
                  (rank == best_rank &&
                   (ls.quality > best.state.quality ||
                    (ls.quality == best.state.quality &&
                     ls.bandwidth_bps > best.state.bandwidth_bps)));
    if (better) {
      best.peer = nbr;
      best.state = ls;
      best_rank = rank;
    }
  }
  return best;
}

sim::json Agent::emit(const std::string& kind, sim::json fields,
                      std::vector<sim::json>* out) {
  engine_.emit(cfg_.node, kind, fields);
  fields["kind"] = kind;
  if (out) out->push_back(fields);
  return fields;
}

sim::json Agent::decision_record(const Decision& d, double confidence,
                                 const char* made_by) {
  return {{"agent", cfg_.node},
          {"decision", to_string(d.action)},
          {"confidence", confidence},
          {"mode", to_string(mode())},
          {"made_by", made_by}};
}

void Agent::execute_decision(const Decision& d, double confidence,
                             const char* made_by,
                             std::vector<sim::json>* out) {
  auto record = decision_record(d, confidence, made_by);
  emit("decision", record, out);
  if (decision_handler_) decision_handler_(record);
}

std::optional<sim::json> Agent::submit_decision(const Decision& d) {
  std::vector<sim::json> out;
  auto bl = best_link(engine_.now());
  double conf = modulate_confidence(d.base_confidence,
                                    bl.peer.empty() ? 0.0 : bl.state.quality);
  if (d.criticality == Criticality::CRITICAL || conf >= kConfidenceGate) {
    execute_decision(d, conf, "LOCAL", &out);
    return out.back();
  }
  defer_queue_.push_back(d);
  emit("decision_deferred",
       {{"decision", to_string(d.action)}, {"confidence", conf}}, &out);
  return std::nullopt;
}

void Agent::drain_defer_queue(std::vector<sim::json>* out) {
  auto bl = best_link(engine_.now());
  double q = bl.peer.empty() ? 0.0 : bl.state.quality;
  for (auto it = defer_queue_.begin(); it != defer_queue_.end();) {
    double conf = modulate_confidence(it->base_confidence, q);
    if (conf >= kConfidenceGate) {
      execute_decision(*it, conf, "LOCAL", out);
      it = defer_queue_.erase(it);
    } else {
      ++it;
    }
  }
}

DecisionRoute Agent::decide_with_earth(const Decision& d,
                                       sim::Duration deadline,
                                       sim::Duration earth_rtt) {
  std::vector<sim::json> out;
  DecisionRoute route = autonomous_decision_gate(deadline, earth_rtt);
  if (route == DecisionRoute::LOCAL) {
    // Earth cannot answer in time; decide here, still behind the gate.
    submit_decision(d);
  } else {
    // Earth owns the call: the record lands after the round trip, at
    // Earth's unmodulated confidence.
    auto record = decision_record(d, d.base_confidence, "EARTH");
    engine_.schedule_at(engine_.now() + earth_rtt, cfg_.node, "decision",
                        record, [this, record] {
                          if (decision_handler_) decision_handler_(record);
                        });
  }
  enqueue_report({{"action", to_string(d.action)},
                  {"route", to_string(route)},
                  {"deadline_us", deadline.us},
                  {"earth_rtt_us", earth_rtt.us}},
                 &out);
  return route;
}

std::uint64_t Agent::next_bundle_id() {
  return sim::fnv1a64(cfg_.node + "#" + std::to_string(++bundle_seq_));
}

void Agent::send_state(a2a::CompressionTier tier,
                       std::vector<sim::json>* out) {
  if (cfg_.uplink.empty()) return;
  sim::SimTime now = engine_.now();

  a2a::SemanticMessage msg;
  msg.kind = a2a::MessageKind::STATE_UPDATE;
  msg.sender = cfg_.node;
  msg.seq = ++msg_seq_;
  if (telemetry_) msg.values = *telemetry_;
  msg.body = {{"node", cfg_.node},
              {"regime", radio::to_string(regime_)},
              {"mode", to_string(mode_for(regime_))}};
  std::string encoded = a2a::encode(msg, tier);

  auto nbrs = env_.neighbors(cfg_.node);
  bool direct = std::find(nbrs.begin(), nbrs.end(), cfg_.uplink) !=
                    nbrs.end() &&
                env_.is_up(cfg_.node, cfg_.uplink, now);
  if (direct) {
    auto res = env_.transmit(cfg_.node, cfg_.uplink, encoded.size(),
                             radio::TrafficClass::OPERATIONAL, now);
    emit("state_push",
         {{"to", cfg_.uplink},
          {"tier", a2a::to_string(tier)},
          {"bytes", encoded.size()},
          {"via", "direct"},
          {"arrival_us", res.arrival.us}},
         out);
    std::string uplink = cfg_.uplink;
    engine_.schedule_at(
        res.arrival, uplink, "state_arrival", {{"from", cfg_.node}},
        [this, uplink, encoded, body = msg.body, at = res.arrival] {
          if (context_) context_->publish("state/" + cfg_.node, body);
          if (send_handler_) send_handler_(uplink, encoded, at);
        });
    return;
  }
  if (dtn_) {
    dtn::Bundle b;
    b.id = next_bundle_id();
    b.src = cfg_.node;
    b.dst = cfg_.uplink;
    b.priority = dtn::Priority::OPERATIONAL;
    b.created_at = now;
    b.ttl = dtn::default_ttl(b.priority);
    b.payload = encoded;
    auto res = dtn_->enqueue(cfg_.node, b);
    emit("state_push",
         {{"to", cfg_.uplink},
          {"tier", a2a::to_string(tier)},
          {"bytes", encoded.size()},
          {"via", "dtn"},
          {"stored", res == dtn::EnqueueResult::STORED}},
         out);
    return;
  }
  emit("state_push_dropped", {{"to", cfg_.uplink}}, out);
}

void Agent::query_topic(const std::string& topic,
                        std::vector<sim::json>* out) {
  sim::SimTime now = engine_.now();
  if (!context_) {
    emit("context_query", {{"topic", topic}, {"ok", false}}, out);
    return;
  }
  const std::string& server = context_->node();
  sim::SimTime deadline = now + cfg_.staleness_limit;
  dtn::Router router(env_);
  sim::json request = {{"topic", topic}};
  auto leg_in =
      router.best_journey(cfg_.node, server, request.dump().size(), now,
                          deadline);
  auto value = context_->latest(topic);
  if (!leg_in || !value) {
    emit("context_query", {{"topic", topic}, {"ok", false}}, out);
    return;
  }
  auto leg_out = router.best_journey(server, cfg_.node, value->dump().size(),
                                     leg_in->arrival, deadline);
  if (!leg_out) {
    emit("context_query", {{"topic", topic}, {"ok", false}}, out);
    return;
  }
  emit("context_query",
       {{"topic", topic}, {"ok", true}, {"arrival_us", leg_out->arrival.us}},
       out);
  engine_.schedule_at(leg_out->arrival, cfg_.node, "context_refresh",
                      {{"topic", topic}},
                      [this, topic, v = *value, at = leg_out->arrival] {
                        cache_[topic] = {v, at};
                      });
}

void Agent::enqueue_report(sim::json body, std::vector<sim::json>* out) {
  std::string dst = cfg_.earth.empty() ? cfg_.uplink : cfg_.earth;
  if (!dtn_ || dst.empty()) {
    emit("report_enqueued", {{"ok", false}}, out);
    return;
  }
  a2a::SemanticMessage msg;
  msg.kind = a2a::MessageKind::SITUATION_REPORT;
  msg.sender = cfg_.node;
  msg.seq = ++msg_seq_;
  msg.body = std::move(body);
  dtn::Bundle b;
  b.id = next_bundle_id();
  b.src = cfg_.node;
  b.dst = dst;
  b.priority = dtn::Priority::BULK;
  b.created_at = engine_.now();
  b.ttl = dtn::default_ttl(b.priority);
  b.custody = true;
  b.payload = a2a::encode(msg, a2a::CompressionTier::FULL);
  auto res = dtn_->enqueue(cfg_.node, b);
  last_report_ = engine_.now();
  emit("report_enqueued",
       {{"ok", res == dtn::EnqueueResult::STORED},
        {"id", b.id},
        {"dst", dst},
        {"bytes", b.payload.size()}},
       out);
}

void Agent::fetch_broker(std::vector<sim::json>* out) {
  if (!context_) return;
  const std::string& server = context_->node();
  sim::SimTime now = engine_.now();

  if (server != cfg_.node) {
    dtn::Router router(env_);
    auto leg = router.best_journey(cfg_.node, server, 32, now,
                                   now + sim::secs(60));
    bool live = leg && (leg->hops.empty() || leg->hops.front().depart == now);
    if (!live) return;  // nothing reachable right now; try next step
  }
  auto msgs = context_->broker_fetch(cfg_.node);
  if (msgs.empty()) return;
  emit("broker_fetch", {{"n", msgs.size()}}, out);

  // Ingest after the round trip the drain rode on.
  std::uint64_t total = 0;
  for (const auto& m : msgs) total += m.size();
  sim::SimTime at = now;
  if (server != cfg_.node) {
    dtn::Router router(env_);
    auto back = router.best_journey(server, cfg_.node, total, now,
                                    now + sim::secs(60));
    if (back) at = back->arrival;
  }
  engine_.schedule_at(at, cfg_.node, "broker_ingest",
                      {{"n", msgs.size()}},
                      [this, msgs = std::move(msgs), at] {
                        for (const auto& bytes : msgs) {
                          auto msg = a2a::decode(bytes);
                          if (msg.kind == a2a::MessageKind::STATE_UPDATE &&
                              msg.body.contains("topic")) {
                            cache_[msg.body.at("topic").get<std::string>()] = {
                                msg.body.at("update"), at};
                          } else if (msg.kind == a2a::MessageKind::ALERT) {
                            try {
                              handle_alert(msg, Via::BROKER);
                            } catch (const DuplicateAlert&) {
                            }
                          }
                        }
                      });
}

void Agent::local_replan(std::vector<sim::json>* out) {
  if (!position_ || !goal_) return;
  auto it = cache_.find(kQualityMapTopic);
  if (it == cache_.end()) return;
  mcp::Grid grid;
  try {
    grid = mcp::Grid::parse(it->second.value);
  } catch (const std::exception&) {
    return;
  }
  if (!grid.traversable(*position_) || !grid.traversable(*goal_)) return;
  try {
    auto plan = mcp::plan_locomotion(grid, *position_, *goal_,
                                     cfg_.locomotion_weight);
    emit("local_replan",
         {{"ok", true},
          {"cost", plan.cost},
          {"cells", plan.path.size()},
          {"map_staleness_us", staleness(kQualityMapTopic).us}},
         out);
  } catch (const mcp::NoPath&) {
    emit("local_replan", {{"ok", false}}, out);
  }
}

void Agent::check_pings(std::vector<sim::json>* out) {
  sim::SimTime now = engine_.now();
  for (auto& [peer, watch] : pings_) {
    if (watch.latched) continue;
    std::uint64_t silent = now.since(watch.last_ping).us;
    if (silent < watch.interval.us * kMissedPingLimit) continue;
    watch.latched = true;
    emit("ping_timeout",
         {{"peer", peer}, {"missed", silent / watch.interval.us}}, out);
    auto bl = best_link(now);
    execute_decision({DecisionAction::SEND_ALERT, Criticality::CRITICAL,
                      base_confidence_},
                     modulate_confidence(base_confidence_,
                                         bl.peer.empty() ? 0.0
                                                         : bl.state.quality),
                     "LOCAL", out);
    a2a::AlertBody body;
    body.anomaly_class = a2a::AnomalyClass::UNRESPONSIVE;
    body.assistance_level = 3;
    body.uncertainty_radius_m = 100.0;
    if (auto pos = cached("pos/" + peer)) {
      body.x_m = pos->value.value("x", 0.0);
      body.y_m = pos->value.value("y", 0.0);
      body.uncertainty_radius_m = 25.0;
    }
    raise_alert_into(body, out);
  }
}

std::vector<sim::json> Agent::step() {
  std::vector<sim::json> out;
  sim::SimTime now = engine_.now();

  auto bl = best_link(now);
  double q = bl.peer.empty() ? 0.0 : bl.state.quality;
  std::uint64_t bw = bl.peer.empty() ? 0 : bl.state.bandwidth_bps;
  DisseminationMode prev = mode_for(regime_);
  regime_ = radio::classify_regime(q, bw, regime_);
  DisseminationMode m = mode_for(regime_);
  horizon_ = bl.peer.empty() ? sim::Duration{0}
                             : planning_horizon(bl.state.one_way_delay);

  emit("agent_step",
       {{"regime", radio::to_string(regime_)},
        {"mode", to_string(m)},
        {"link", bl.peer},
        {"quality", q},
        {"bandwidth_bps", bw},
        {"horizon_us", horizon_.us}},
       &out);
  if (m != prev)
    emit("mode_change", {{"from", to_string(prev)}, {"to", to_string(m)}},
         &out);

  switch (m) {
    case DisseminationMode::PUSH_REALTIME:
      send_state(a2a::CompressionTier::FULL, &out);
      break;
    case DisseminationMode::PULL_CACHED:
      send_state(a2a::CompressionTier::SUMMARY, &out);
      for (const auto& topic : interests_)
        if (staleness(topic) > cfg_.staleness_limit) query_topic(topic, &out);
      break;
    case DisseminationMode::AUTONOMOUS_BULK:
      local_replan(&out);
      if (!last_report_ ||
          engine_.now().since(*last_report_) >= cfg_.report_interval)
        enqueue_report({{"node", cfg_.node},
                        {"regime", radio::to_string(regime_)},
                        {"cached_topics", cache_.size()}},
                       &out);
      fetch_broker(&out);
      break;
  }

  check_pings(&out);
  drain_defer_queue(&out);
  return out;
}

void Agent::broadcast_encoded(const a2a::SemanticMessage& msg,
                              const char* emission_kind,
                              std::vector<sim::json>* out) {
  std::string encoded = a2a::encode(msg, msg.tier);
  sim::SimTime now = engine_.now();
  auto nbrs = env_.neighbors(cfg_.node);
  std::sort(nbrs.begin(), nbrs.end());
  for (const auto& nbr : nbrs) {
    if (!env_.is_up(cfg_.node, nbr, now)) continue;
    auto res = env_.transmit(cfg_.node, nbr, encoded.size(),
                             radio::TrafficClass::EMERGENCY, now);
    emit(emission_kind,
         {{"to", nbr},
          {"sender", msg.sender},
          {"seq", msg.seq},
          {"bytes", encoded.size()},
          {"arrival_us", res.arrival.us}},
         out);
    if (send_handler_)
      engine_.schedule_at(res.arrival, nbr, "a2a_delivery",
                          {{"from", cfg_.node}, {"kind", "ALERT"}},
                          [this, nbr, encoded, at = res.arrival] {
                            send_handler_(nbr, encoded, at);
                          });
  }
}

void Agent::raise_alert_into(a2a::AlertBody body,
                             std::vector<sim::json>* out) {
  a2a::SemanticMessage msg;
  msg.kind = a2a::MessageKind::ALERT;
  msg.sender = cfg_.node;
  msg.seq = ++msg_seq_;
  msg.alert = body;
  seen_alerts_.insert({cfg_.node, msg.seq});
  cache_put("alert/" + cfg_.node,
            {{"anomaly", a2a::to_string(body.anomaly_class)},
             {"x", body.x_m},
             {"y", body.y_m},
             {"uncertainty_m", body.uncertainty_radius_m},
             {"assistance", body.assistance_level}});
  emit("alert_raised",
       {{"seq", msg.seq},
        {"anomaly", a2a::to_string(body.anomaly_class)},
        {"assistance", body.assistance_level}},
       out);
  broadcast_encoded(msg, "alert_broadcast", out);
}

std::vector<sim::json> Agent::raise_alert(a2a::AlertBody body) {
  std::vector<sim::json> out;
  raise_alert_into(body, &out);
  return out;
}

std::vector<sim::json> Agent::handle_alert(const a2a::SemanticMessage& alert,
                                           Via via) {
  if (alert.kind != a2a::MessageKind::ALERT || !alert.alert)
    throw std::invalid_argument("handle_alert needs a decoded ALERT");
  if (!seen_alerts_.insert({alert.sender, alert.seq}).second)
    throw DuplicateAlert(alert.sender + "#" + std::to_string(alert.seq) +
                         " already handled");

  std::vector<sim::json> out;
  const a2a::AlertBody& body = *alert.alert;
  cache_put("alert/" + alert.sender,
            {{"anomaly", a2a::to_string(body.anomaly_class)},
             {"x", body.x_m},
             {"y", body.y_m},
             {"uncertainty_m", body.uncertainty_radius_m},
             {"assistance", body.assistance_level}});
  emit("alert_received",
       {{"sender", alert.sender},
        {"seq", alert.seq},
        {"via", to_string(via)},
        {"anomaly", a2a::to_string(body.anomaly_class)}},
       &out);

  sim::SimTime now = engine_.now();
  switch (cfg_.role) {
    case radio::Tier::ROVER:
      broadcast_encoded(alert, "alert_rebroadcast", &out);
      break;
    case radio::Tier::RELAY_HUB: {
      auto nbrs = env_.neighbors(cfg_.node);
      bool up = !cfg_.uplink.empty() &&
                std::find(nbrs.begin(), nbrs.end(), cfg_.uplink) !=
                    nbrs.end() &&
                env_.is_up(cfg_.node, cfg_.uplink, now);
      if (!up) break;
      auto pred = env_.predict_quality(cfg_.node, cfg_.uplink,
                                       now + cfg_.relay_lookahead);
      a2a::SemanticMessage offer;
      offer.kind = a2a::MessageKind::RELAY_OFFER;
      offer.sender = cfg_.node;
      offer.seq = ++msg_seq_;
      offer.body = {{"for", alert.sender},
                    {"capacity_estimate", pred.estimate},
                    {"confidence_interval", pred.confidence_interval}};
      std::string encoded = a2a::encode(offer, a2a::CompressionTier::FULL);
      auto res = env_.transmit(cfg_.node, cfg_.uplink, encoded.size(),
                               radio::TrafficClass::EMERGENCY, now);
      emit("relay_offer",
           {{"to", cfg_.uplink},
            {"for", alert.sender},
            {"capacity_estimate", pred.estimate},
            {"arrival_us", res.arrival.us}},
           &out);
      emit("bandwidth_priority_request",
           {{"a", cfg_.node}, {"b", cfg_.uplink}, {"class", "EMERGENCY"}},
           &out);
      if (send_handler_) {
        std::string uplink = cfg_.uplink;
        engine_.schedule_at(res.arrival, uplink, "a2a_delivery",
                            {{"from", cfg_.node}, {"kind", "RELAY_OFFER"}},
                            [this, uplink, encoded, at = res.arrival] {
                              send_handler_(uplink, encoded, at);
                            });
      }
      auto bl = best_link(now);
      execute_decision({DecisionAction::RELAY_ACCEPT, Criticality::CRITICAL,
                        base_confidence_},
                       modulate_confidence(base_confidence_,
                                           bl.peer.empty()
                                               ? 0.0
                                               : bl.state.quality),
                       "LOCAL", &out);
      // Having accepted, carry the alert itself upstream.
      std::string fwd = a2a::encode(alert, alert.tier);
      auto fres = env_.transmit(cfg_.node, cfg_.uplink, fwd.size(),
                                radio::TrafficClass::EMERGENCY, now);
      emit("alert_relayed",
           {{"to", cfg_.uplink},
            {"sender", alert.sender},
            {"seq", alert.seq},
            {"bytes", fwd.size()},
            {"arrival_us", fres.arrival.us}},
           &out);
      if (send_handler_) {
        std::string uplink = cfg_.uplink;
        engine_.schedule_at(fres.arrival, uplink, "a2a_delivery",
                            {{"from", cfg_.node}, {"kind", "ALERT"}},
                            [this, uplink, fwd, at = fres.arrival] {
                              send_handler_(uplink, fwd, at);
                            });
      }
      break;
    }
    case radio::Tier::BASE: {
      auto bl = best_link(now);
      execute_decision({DecisionAction::REALLOCATE_BANDWIDTH,
                        Criticality::CRITICAL, base_confidence_},
                       modulate_confidence(base_confidence_,
                                           bl.peer.empty()
                                               ? 0.0
                                               : bl.state.quality),
                       "LOCAL", &out);
      enqueue_report({{"alert_from", alert.sender},
                      {"anomaly", a2a::to_string(body.anomaly_class)},
                      {"assistance", body.assistance_level},
                      {"via", to_string(via)}},
                     &out);
      break;
    }
    case radio::Tier::EARTH:
      break;  // Earth-side tooling only archives; the cache entry suffices
  }
  return out;
}

}  // namespace lunasim::agent
