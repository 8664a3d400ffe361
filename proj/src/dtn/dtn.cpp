#include "lunasim/dtn/dtn.hpp"

#include <algorithm>
#include <tuple>

namespace lunasim::dtn {

namespace {

sim::json bundle_fields(const Bundle& b) {
  return {{"id", b.id},
          {"src", b.src},
          {"dst", b.dst},
          {"priority", radio::to_string(b.priority)},
          {"bytes", b.size_bytes()},
          {"custody", b.custody},
          {"expires_us", b.expires_at().us}};
}

}  // namespace

EnqueueResult BundleNetwork::enqueue(const std::string& node, Bundle bundle) {
  if (!env_.has_node(node))
    throw std::invalid_argument("enqueue at unknown node: " + node);
  if (known_ids_.count(bundle.id)) return EnqueueResult::DUPLICATE_ID;
  if (engine_.now() > bundle.expires_at()) return EnqueueResult::EXPIRED;
  known_ids_.insert(bundle.id);
  engine_.emit(node, "bundle_created", bundle_fields(bundle));
  if (bundle.dst == node) {
    deliver(node, bundle);
    return EnqueueResult::STORED;
  }
  store_copy(node, std::move(bundle), /*custodian=*/true);
  forward_from(node, nullptr);
  return EnqueueResult::STORED;
}

void BundleNetwork::store_copy(const std::string& node, Bundle bundle,
                               bool custodian) {
  std::uint64_t id = bundle.id;
  sim::SimTime expiry = bundle.expires_at();
  StoredCopy copy;
  copy.bundle = std::move(bundle);
  copy.is_custodian = custodian && copy.bundle.custody;
  stores_[node][id] = std::move(copy);
  engine_.schedule_at(expiry, node, "bundle_expiry", {{"id", id}},
                      [this, node, id] { expire_copy(node, id); });
}

void BundleNetwork::expire_copy(const std::string& node, std::uint64_t id) {
  auto store = stores_.find(node);
  if (store == stores_.end()) return;
  auto it = store->second.find(id);
  if (it == store->second.end()) return;
  // A custody copy with a hop in the air is resolved by the arrival event,
  // which sees the lapsed deadline itself.
  if (it->second.in_flight) return;
  store->second.erase(it);
  mark_dead(node, id, "ttl");
}

void BundleNetwork::mark_dead(const std::string& node, std::uint64_t id,
                              const char* reason) {
  if (deliveries_.count(id) || expired_ids_.count(id)) return;
  expired_ids_.insert(id);
  engine_.emit(node, "bundle_expired", {{"id", id}, {"reason", reason}});
}

void BundleNetwork::deliver(const std::string& node, const Bundle& bundle) {
  deliveries_[bundle.id] = {node, engine_.now()};
  engine_.emit(node, "bundle_delivered",
               {{"id", bundle.id},
                {"latency_us", engine_.now().since(bundle.created_at).us}});
  if (delivery_handler_) delivery_handler_(bundle, node, engine_.now());
}

std::vector<SendRecord> BundleNetwork::on_contact(const std::string& a,
                                                  const std::string& b) {
  std::vector<SendRecord> out = forward_from(a, &b);
  std::vector<SendRecord> back = forward_from(b, &a);
  out.insert(out.end(), back.begin(), back.end());
  return out;
}

std::vector<SendRecord> BundleNetwork::forward_from(
    const std::string& node, const std::string* only_via) {
  std::vector<SendRecord> initiated;
  if (env_.is_halted(node, engine_.now())) return initiated;
  auto store = stores_.find(node);
  if (store == stores_.end()) return initiated;

  // Snapshot in dequeue order; sends mutate the store as we go.
  std::vector<std::tuple<int, std::uint64_t, std::uint64_t>> order;
  for (const auto& [id, copy] : store->second)
    order.emplace_back(static_cast<int>(copy.bundle.priority),
                       copy.bundle.created_at.us, id);
  std::sort(order.begin(), order.end());

  for (const auto& [pri, created, id] : order) {
    auto it = store->second.find(id);
    if (it == store->second.end() || it->second.in_flight) continue;
    const Bundle& b = it->second.bundle;
    auto journey = router_.best_journey(node, b.dst, b.size_bytes(),
                                        engine_.now(), b.expires_at());
    if (!journey || journey->hops.empty()) continue;
    const std::string next = journey->hops.front().to;
    if (only_via && next != *only_via) continue;
    if (hold_bulk_for_earth_ && b.priority == Priority::BULK &&
        env_.tier_of(b.dst) == radio::Tier::EARTH &&
        env_.tier_of(next) == radio::Tier::EARTH)
      continue;
    if (auto sent = attempt_hop(node, id, next))
      initiated.push_back(std::move(*sent));
  }
  return initiated;
}

std::optional<SendRecord> BundleNetwork::attempt_hop(const std::string& node,
                                                     std::uint64_t id,
                                                     const std::string& next) {
  auto store = stores_.find(node);
  if (store == stores_.end()) return std::nullopt;
  auto it = store->second.find(id);
  if (it == store->second.end() || it->second.in_flight) return std::nullopt;
  const Bundle& b = it->second.bundle;
  sim::SimTime now = engine_.now();

  auto windows = env_.up_intervals(node, next, now, b.expires_at());
  if (windows.empty() || windows.front().start != now) return std::nullopt;
  auto peek = env_.peek_transmit(node, next, b.size_bytes(), b.priority, now);
  // The whole transmission must clear the open window (no mid-transfer
  // cuts) and the copy must still be alive and receivable on arrival.
  if (peek.sent > windows.front().end) return std::nullopt;
  if (peek.arrival > b.expires_at()) return std::nullopt;
  if (env_.is_halted(next, peek.arrival)) return std::nullopt;

  auto result = env_.transmit(node, next, b.size_bytes(), b.priority, now);
  Bundle in_air = b;
  if (in_air.custody) {
    it->second.in_flight = true;
  } else {
    store->second.erase(it);
  }
  engine_.emit(node, "bundle_forwarded",
               {{"id", id},
                {"from", node},
                {"to", next},
                {"bytes", in_air.size_bytes()},
                {"arrival_us", result.arrival.us}});
  engine_.schedule_at(
      result.arrival, next, "bundle_arrival", {{"id", id}, {"from", node}},
      [this, next, node, in_air] { handle_arrival(next, node, in_air); });
  return SendRecord{id, node, next, result};
}

void BundleNetwork::handle_arrival(const std::string& node,
                                   const std::string& from, Bundle bundle) {
  sim::SimTime now = engine_.now();
  std::uint64_t id = bundle.id;

  // Clears the custodian's in-flight marker; erases the copy as well when
  // its job is done (delivery) or its clock has run out.
  auto settle_custodian = [&](bool erase) {
    auto store = stores_.find(from);
    if (store == stores_.end()) return;
    auto it = store->second.find(id);
    if (it == store->second.end()) return;
    it->second.in_flight = false;
    if (erase) store->second.erase(it);
  };

  if (env_.is_halted(node, now)) {
    // Receiver crashed while the copy was in the air.
    if (bundle.custody) {
      bool lapsed = now > bundle.expires_at();
      settle_custodian(lapsed);
      if (lapsed) {
        mark_dead(from, id, "ttl");
      } else {
        forward_from(from, nullptr);  // custodian retries another route
      }
    } else {
      mark_dead(node, id, "lost");  // the only copy is gone
    }
    return;
  }

  if (now > bundle.expires_at()) {
    if (bundle.custody) settle_custodian(true);
    mark_dead(node, id, "ttl");
    return;
  }

  if (node == bundle.dst) {
    if (bundle.custody) settle_custodian(true);
    deliver(node, bundle);
    return;
  }

  // Intermediate hop: durable store first, then custody moves in one step.
  bool custody = bundle.custody;
  store_copy(node, std::move(bundle), /*custodian=*/false);
  if (custody) custody_transfer(id, from, node);
  forward_from(node, nullptr);
}

void BundleNetwork::custody_transfer(std::uint64_t id, const std::string& from,
                                     const std::string& to) {
  auto store = stores_.find(to);
  if (store == stores_.end() || !store->second.count(id))
    throw UnknownBundle("no durable copy of bundle " + std::to_string(id) +
                        " at " + to);
  store->second[id].is_custodian = true;
  auto prev = stores_.find(from);
  if (prev != stores_.end()) prev->second.erase(id);
  engine_.emit(to, "custody_transferred",
               {{"id", id}, {"from", from}, {"to", to}});
}

std::size_t BundleNetwork::episodic_sync(const std::string& node,
                                         const std::string& earth) {
  sim::SimTime now = engine_.now();
  if (!env_.is_up(node, earth, now))
    throw radio::LinkDown("episodic sync with " + earth + " link down");

  auto store = stores_.find(node);
  if (store == stores_.end()) return 0;

  std::vector<std::pair<std::uint64_t, std::uint64_t>> order;
  for (const auto& [id, copy] : store->second) {
    const Bundle& b = copy.bundle;
    if (copy.in_flight) continue;
    if (b.priority != Priority::BULK) continue;
    if (env_.tier_of(b.dst) != radio::Tier::EARTH) continue;
    order.emplace_back(b.created_at.us, id);
  }
  std::sort(order.begin(), order.end());

  std::size_t flushed = 0;
  for (const auto& [created, id] : order) {
    if (!attempt_hop(node, id, earth)) break;
    ++flushed;
  }
  return flushed;
}

std::size_t BundleNetwork::start(sim::SimTime until) {
  std::size_t scheduled = 0;
  for (const auto& [a, b] : env_.links()) {
    for (const auto& w : env_.up_intervals(a, b, engine_.now(), until)) {
      std::string na = a, nb = b;
      engine_.schedule_at(w.start, na + "|" + nb, "contact_window",
                          {{"a", na}, {"b", nb}},
                          [this, na, nb] { on_contact(na, nb); });
      ++scheduled;
    }
  }
  return scheduled;
}

std::vector<std::uint64_t> BundleNetwork::stored_at(
    const std::string& node) const {
  std::vector<std::uint64_t> out;
  auto store = stores_.find(node);
  if (store == stores_.end()) return out;
  for (const auto& [id, _] : store->second) out.push_back(id);
  return out;
}

bool BundleNetwork::is_stored(const std::string& node,
                              std::uint64_t id) const {
  auto store = stores_.find(node);
  return store != stores_.end() && store->second.count(id) > 0;
}

std::optional<std::string> BundleNetwork::custodian_of(
    std::uint64_t id) const {
  for (const auto& [node, store] : stores_) {
    auto it = store.find(id);
    if (it != store.end() && it->second.is_custodian) return node;
  }
  return std::nullopt;
}

std::optional<DeliveryInfo> BundleNetwork::delivered(std::uint64_t id) const {
  auto it = deliveries_.find(id);
  if (it == deliveries_.end()) return std::nullopt;
  return it->second;
}

}  // namespace lunasim::dtn
