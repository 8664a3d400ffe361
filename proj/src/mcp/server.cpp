#include "lunasim/mcp/server.hpp"

#include <algorithm>

#include "lunasim/a2a/codec.hpp"
#include "lunasim/sim/hash.hpp"

namespace lunasim::mcp {

double predict_energy_j(const EnergyModel& model, double horizon_s,
                        double driving_s) {
  if (!(horizon_s >= 0.0) || !(driving_s >= 0.0) || driving_s > horizon_s)
    throw std::invalid_argument("driving time must fit inside the horizon");
  return model.idle_w * horizon_s + (model.drive_w - model.idle_w) * driving_s;
}

sim::json ContextServer::evaluate(const std::string& capability,
                                  const sim::json& request) const {
  if (capability == "signal_quality_estimation") {
    const std::string a = request.at("a").get<std::string>();
    const std::string b = request.at("b").get<std::string>();
    sim::SimTime at = sim::at_micros(request.at("at_us").get<std::uint64_t>());
    auto p = env_.predict_quality(a, b, at);
    return {{"estimate", p.estimate},
            {"confidence_interval", p.confidence_interval}};
  }
  if (capability == "energy_prediction") {
    double horizon = request.at("horizon_s").get<double>();
    double driving = request.at("driving_s").get<double>();
    return {{"joules", predict_energy_j(EnergyModel{}, horizon, driving)}};
  }
  if (capability == "locomotion_planning") {
    Grid grid = Grid::parse(request.at("grid"));
    Cell start{request.at("start").at(0).get<int>(),
               request.at("start").at(1).get<int>()};
    Cell goal{request.at("goal").at(0).get<int>(),
              request.at("goal").at(1).get<int>()};
    double weight = request.at("wireless_weight").get<double>();
    PlanResult plan = plan_locomotion(grid, start, goal, weight);
    sim::json path = sim::json::array();
    for (Cell c : plan.path) path.push_back({c.x, c.y});
    return {{"path", std::move(path)}, {"cost", plan.cost}};
  }
  throw UnknownCapability("no capability named " + capability);
}

ContextServer::QueryResult ContextServer::query(const std::string& requester,
                                                const std::string& capability,
                                                const sim::json& request,
                                                sim::Duration timeout) const {
  sim::SimTime now = engine_.now();
  sim::SimTime deadline = now + timeout;
  auto leg_in = router_.best_journey(requester, node_, request.dump().size(),
                                     now, deadline);
  if (!leg_in)
    throw Unreachable("no route " + requester + " -> " + node_ +
                      " within the timeout");
  sim::json response = evaluate(capability, request);
  auto leg_out = router_.best_journey(node_, requester,
                                      response.dump().size(),
                                      leg_in->arrival, deadline);
  if (!leg_out)
    throw Unreachable("no return route " + node_ + " -> " + requester +
                      " within the timeout");
  return {std::move(response), leg_out->arrival};
}

void ContextServer::subscribe(const std::string& subscriber,
                              const std::string& topic,
                              sim::Duration min_interval) {
  subs_[topic][subscriber].min_interval = min_interval;
}

void ContextServer::unsubscribe(const std::string& subscriber,
                                const std::string& topic) {
  auto it = subs_.find(topic);
  if (it == subs_.end()) return;
  it->second.erase(subscriber);
  if (it->second.empty()) subs_.erase(it);
}

std::size_t ContextServer::publish(const std::string& topic,
                                   const sim::json& update) {
  latest_[topic] = update;
  auto it = subs_.find(topic);
  if (it == subs_.end()) return 0;

  sim::SimTime now = engine_.now();
  std::size_t notified = 0;
  for (auto& [subscriber, sub] : it->second) {
    if (sub.last_sent && now.since(*sub.last_sent) < sub.min_interval)
      continue;  // inside the rate window: suppressed entirely
    sub.last_sent = now;

    auto journey = router_.best_journey(node_, subscriber,
                                        update.dump().size(), now,
                                        now + sim::secs(3'600));
    bool live = journey &&
                (journey->hops.empty() || journey->hops.front().depart == now);
    if (live) {
      ++notified;
      std::string s = subscriber, t = topic;
      sim::json u = update;
      sim::SimTime at = journey->arrival;
      engine_.schedule_at(at, subscriber, "context_push",
                          {{"server", node_}, {"topic", topic}},
                          [this, s, t, u, at] {
                            if (push_handler_) push_handler_(s, t, u, at);
                          });
    } else {
      // Push cannot start now: park the update in the broker slot.
      a2a::SemanticMessage msg;
      msg.kind = a2a::MessageKind::STATE_UPDATE;
      msg.sender = node_;
      msg.seq = ++push_seq_;
      msg.body = {{"topic", topic}, {"update", update}};
      broker_put(subscriber, a2a::encode(msg, a2a::CompressionTier::FULL));
    }
  }
  return notified;
}

std::optional<sim::json> ContextServer::latest(const std::string& topic) const {
  auto it = latest_.find(topic);
  if (it == latest_.end()) return std::nullopt;
  return std::optional<sim::json>(it->second);
}

void ContextServer::broker_put(const std::string& recipient,
                               std::string encoded_msg) {
  bool emergency =
      a2a::decode(encoded_msg).kind == a2a::MessageKind::ALERT;
  auto& slot = slots_[recipient];
  if (slot.size() >= slot_capacity_) {
    auto victim = std::find_if(slot.begin(), slot.end(),
                               [](const SlotEntry& e) { return !e.emergency; });
    if (victim == slot.end()) victim = slot.begin();
    engine_.emit(node_, "slot_overflow",
                 {{"recipient", recipient},
                  {"dropped_hash", sim::fnv1a64(victim->bytes)}});
    slot.erase(victim);
  }
  slot.push_back({std::move(encoded_msg), emergency});
}

std::vector<std::string> ContextServer::broker_fetch(
    const std::string& recipient) {
  std::vector<std::string> out;
  auto it = slots_.find(recipient);
  if (it == slots_.end()) return out;
  for (auto& entry : it->second) out.push_back(std::move(entry.bytes));
  slots_.erase(it);
  return out;
}

std::size_t ContextServer::slot_size(const std::string& recipient) const {
  auto it = slots_.find(recipient);
  return it == slots_.end() ? 0 : it->second.size();
}

}  // namespace lunasim::mcp
