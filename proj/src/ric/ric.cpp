#include "lunasim/ric/ric.hpp"

#include <algorithm>
#include <limits>

#include "lunasim/a2a/codec.hpp"

namespace lunasim::ric {

namespace {

agent::DisseminationMode mode_from_string(const std::string& s) {
  if (s == "PUSH_REALTIME") return agent::DisseminationMode::PUSH_REALTIME;
  if (s == "PULL_CACHED") return agent::DisseminationMode::PULL_CACHED;
  if (s == "AUTONOMOUS_BULK") return agent::DisseminationMode::AUTONOMOUS_BULK;
  throw std::invalid_argument("unknown dissemination mode '" + s + "'");
}

}  // namespace

sim::json TelemetrySample::to_json() const {
  return {{"node", node},
          {"t_us", t.us},
          {"radio_quality", radio_quality},
          {"system_load", system_load},
          {"agent_mode", agent::to_string(agent_mode)}};
}

TelemetrySample TelemetrySample::from_json(const sim::json& j) {
  if (!j.is_object() || !j.contains("node") || !j.contains("t_us") ||
      !j.contains("radio_quality") || !j.contains("system_load") ||
      !j.contains("agent_mode")) {
    throw std::invalid_argument("telemetry sample is missing fields");
  }
  TelemetrySample s;
  s.node = j.at("node").get<std::string>();
  s.t = sim::SimTime{j.at("t_us").get<std::uint64_t>()};
  s.radio_quality = j.at("radio_quality").get<double>();
  s.system_load = j.at("system_load").get<double>();
  s.agent_mode = mode_from_string(j.at("agent_mode").get<std::string>());
  if (!(s.radio_quality >= 0.0 && s.radio_quality <= 1.0))
    throw std::invalid_argument("radio_quality must lie in [0, 1]");
  if (!(s.system_load >= 0.0 && s.system_load <= 1.0))
    throw std::invalid_argument("system_load must lie in [0, 1]");
  return s;
}

radio::SpectrumPolicy apply_emergency_floor(const radio::SpectrumPolicy& prior,
                                            double floor) {
  if (!(floor > 0.0 && floor <= 1.0))
    throw std::invalid_argument("emergency floor must lie in (0, 1]");
  if (prior.emergency >= floor) return prior;
  radio::SpectrumPolicy next;
  next.emergency = floor;
  double remaining = 1.0 - floor;
  double rest = prior.operational + prior.bulk;
  next.operational =
      rest > 0.0 ? remaining * (prior.operational / rest) : remaining / 2.0;
  next.bulk = remaining - next.operational;
  return next;
}

TelemetrySample Sapp::monitor() const {
  TelemetrySample s;
  s.node = agent_.node();
  s.t = engine_.now();
  double best = 0.0;
  for (const auto& n : env_.neighbors(s.node)) {
    auto st = env_.link_at(s.node, n, s.t);
    if (st.up && st.quality > best) best = st.quality;
  }
  s.radio_quality = best;
  s.system_load = load_;
  s.agent_mode = agent_.mode();
  return s;
}

void Sapp::start(sim::SimTime until, sim::Duration cadence) {
  if (cadence.us == 0)
    throw std::invalid_argument("sampling cadence must be positive");
  until_ = until;
  cadence_ = cadence;
  if (running_ || engine_.now() >= until) return;
  running_ = true;
  engine_.schedule_quiet(engine_.now(), [this] { tick(); });
}

void Sapp::set_system_load(double load) {
  if (!(load >= 0.0 && load <= 1.0))
    throw std::invalid_argument("system load must lie in [0, 1]");
  load_ = load;
}

void Sapp::tick() {
  auto now = engine_.now();
  if (env_.is_halted(agent_.node(), now)) {
    running_ = false;
    return;
  }
  auto s = monitor();
  samples_.push_back(s);
  engine_.emit(s.node, "telemetry", s.to_json());
  if (sink_) sink_(s);
  auto next = now + cadence_;
  if (next < until_) {
    engine_.schedule_quiet(next, [this] { tick(); });
  } else {
    running_ = false;
  }
}

void NearRtRic::set_emergency_floor(double floor) {
  if (!(floor > 0.0 && floor <= 1.0))
    throw std::invalid_argument("emergency floor must lie in (0, 1]");
  emergency_floor_ = floor;
}

void NearRtRic::declare_incident(
    const std::string& id,
    std::vector<std::pair<std::string, std::string>> links) {
  auto& inc = incidents_[id];
  inc.links = std::move(links);
  inc.active = true;
  engine_.emit(node_, "incident_declared",
               {{"incident", id}, {"links", inc.links.size()}});
}

void NearRtRic::resolve_incident(const std::string& id) {
  auto it = incidents_.find(id);
  if (it == incidents_.end() || !it->second.active)
    throw UnknownIncident("no active incident '" + id + "'");
  it->second.active = false;
  for (const auto& [a, b] : it->second.links) {
    env_.clear_policy(a, b);
    auto base = env_.baseline_shares(a, b);
    engine_.emit(
        node_, "policy_restored",
        {{"incident", id},
         {"a", a},
         {"b", b},
         {"emergency", base.emergency},
         {"operational", base.operational},
         {"bulk", base.bulk},
         {"emergency_bps",
          base.effective_bps(radio::TrafficClass::EMERGENCY,
                             env_.effective_bandwidth_bps(a, b))}});
    if (net_) net_->on_contact(a, b);
  }
  engine_.emit(node_, "incident_resolved", {{"incident", id}});
}

bool NearRtRic::incident_active(const std::string& id) const {
  auto it = incidents_.find(id);
  return it != incidents_.end() && it->second.active;
}

std::vector<LinkPolicy> NearRtRic::reallocate(const std::string& incident_id) {
  auto it = incidents_.find(incident_id);
  if (it == incidents_.end() || !it->second.active)
    throw UnknownIncident("no active incident '" + incident_id + "'");
  return reallocate(incident_id, it->second.links);
}

std::vector<LinkPolicy> NearRtRic::reallocate(
    const std::string& incident_id,
    const std::vector<std::pair<std::string, std::string>>& links) {
  auto it = incidents_.find(incident_id);
  if (it == incidents_.end() || !it->second.active)
    throw UnknownIncident("no active incident '" + incident_id + "'");
  auto& known = it->second.links;
  for (const auto& l : links)
    if (std::find(known.begin(), known.end(), l) == known.end())
      known.push_back(l);

  std::vector<LinkPolicy> out;
  for (const auto& [a, b] : links) {
    auto prior = env_.active_policy(a, b).value_or(env_.baseline_shares(a, b));
    auto next = apply_emergency_floor(prior, emergency_floor_);
    env_.set_policy(a, b, next);
    engine_.emit(
        node_, "policy_reallocated",
        {{"incident", incident_id},
         {"a", a},
         {"b", b},
         {"emergency", next.emergency},
         {"operational", next.operational},
         {"bulk", next.bulk},
         {"emergency_bps",
          next.effective_bps(radio::TrafficClass::EMERGENCY,
                             env_.effective_bandwidth_bps(a, b))}});
    if (net_) net_->on_contact(a, b);
    out.push_back({a, b, next});
  }
  return out;
}

std::string NearRtRic::relay_switch(const std::string& asset,
                                    const std::vector<std::string>& candidates) {
  if (candidates.empty())
    throw NoCandidates("relay switch for '" + asset + "' has no candidates");
  auto horizon = engine_.now() + relay_lookahead_;
  std::string best;
  double best_q = -1.0;
  for (const auto& c : candidates) {
    double q = env_.predict_quality(asset, c, horizon).estimate;
    if (q > best_q || (q == best_q && c < best)) {
      best = c;
      best_q = q;
    }
  }
  env_.set_steering(asset, best);
  engine_.emit(node_, "relay_switched",
               {{"asset", asset}, {"relay", best}, {"estimate", best_q}});
  return best;
}

void NearRtRic::ingest(const TelemetrySample& sample) {
  auto it = latest_.find(sample.node);
  if (it == latest_.end() || sample.t >= it->second.t)
    latest_[sample.node] = sample;
}

std::optional<TelemetrySample> NearRtRic::latest(
    const std::string& node) const {
  auto it = latest_.find(node);
  if (it == latest_.end()) return std::nullopt;
  return it->second;
}

sim::json NearRtRic::digest() const {
  sim::json samples = sim::json::array();
  for (const auto& [node, sample] : latest_) samples.push_back(sample.to_json());
  return {{"samples", samples}};
}

std::size_t NonRtTwin::sync(const sim::json& digest) {
  if (!digest.is_object() || !digest.contains("samples") ||
      !digest.at("samples").is_array())
    throw std::invalid_argument("digest must carry a samples array");
  auto now = engine_.now();
  std::size_t applied = 0;
  for (const auto& js : digest.at("samples")) {
    auto s = TelemetrySample::from_json(js);
    if (s.t > now)
      throw std::invalid_argument("digest sample stamped in the future");
    auto it = entries_.find(s.node);
    if (it == entries_.end() || s.t > it->second.sample.t) {
      entries_[s.node] = TwinEntry{s, now};
      ++applied;
    }
  }
  std::uint64_t max_stale = 0;
  for (const auto& [node, e] : entries_)
    max_stale = std::max(max_stale, now.since(e.sample.t).us);
  engine_.emit(node_, "twin_synced",
               {{"applied", applied},
                {"size", entries_.size()},
                {"max_staleness_us", max_stale}});
  maybe_reply();
  return applied;
}

std::optional<TwinEntry> NonRtTwin::entry_of(const std::string& node) const {
  auto it = entries_.find(node);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

sim::Duration NonRtTwin::staleness(const std::string& node) const {
  auto it = entries_.find(node);
  if (it == entries_.end())
    return sim::Duration{std::numeric_limits<std::uint64_t>::max()};
  return engine_.now().since(it->second.sample.t);
}

void NonRtTwin::set_recommended_floor(double floor) {
  if (!(floor > 0.0 && floor <= 1.0))
    throw std::invalid_argument("emergency floor must lie in (0, 1]");
  recommended_floor_ = floor;
}

void NonRtTwin::maybe_reply() {
  auto now = engine_.now();
  if (last_reply_ && now.since(*last_reply_) < reply_interval_) return;

  std::uint64_t rev = revision_ + 1;
  a2a::SemanticMessage msg;
  msg.kind = a2a::MessageKind::POLICY_UPDATE;
  msg.sender = node_;
  msg.seq = rev;
  msg.body = {{"emergency_floor", recommended_floor_},
              {"revision", rev},
              {"issued_at_us", now.us}};
  auto encoded = a2a::encode(msg, a2a::CompressionTier::FULL);

  radio::TransmitResult res;
  try {
    res = env_.transmit(node_, surface_peer_, encoded.size(),
                        radio::TrafficClass::OPERATIONAL, now);
  } catch (const radio::LinkDown&) {
    return;  // retry at the next sync
  } catch (const radio::UnknownLink&) {
    return;
  }
  revision_ = rev;
  last_reply_ = now;

  sim::json policy = msg.body;
  engine_.schedule_at(res.arrival, surface_peer_, "policy_update",
                      {{"from", node_},
                       {"revision", rev},
                       {"emergency_floor", recommended_floor_}},
                      [this, policy, at = res.arrival] {
                        if (handler_) handler_(policy, at);
                      });
}

}  // namespace lunasim::ric
