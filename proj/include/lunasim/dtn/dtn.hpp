#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lunasim/dtn/bundle.hpp"
#include "lunasim/dtn/router.hpp"
#include "lunasim/radio/radio.hpp"
#include "lunasim/sim/engine.hpp"

namespace lunasim::dtn {

struct UnknownBundle : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EnqueueResult { STORED, EXPIRED, DUPLICATE_ID };

struct SendRecord {
  std::uint64_t bundle_id{0};
  std::string from;
  std::string to;
  radio::TransmitResult result;
};

struct DeliveryInfo {
  std::string node;
  sim::SimTime at;
};

// Store-carry-forward network on top of the radio contact plan. Bundles wait
// at nodes until a contact admits the whole transmission; next hops come from
// the earliest-arrival router. A send is initiated only when it provably
// completes inside the current up window and can still arrive before expiry,
// so transfers are never cut. Custody bundles stay at the sender until the
// next hop confirms durable storage.
class BundleNetwork {
 public:
  BundleNetwork(sim::Engine& engine, radio::RadioEnvironment& env)
      : engine_(engine), env_(env), router_(env) {}

  // Stores the bundle at `node` and attempts immediate forwarding.
  // Duplicate ids are dropped idempotently; expired bundles are rejected.
  EnqueueResult enqueue(const std::string& node, Bundle bundle);

  // Re-attempts forwarding at both endpoints of a freshly opened (or still
  // open) contact; only sends crossing this link are initiated.
  std::vector<SendRecord> on_contact(const std::string& a,
                                     const std::string& b);

  // Moves custody of `id` from `from` to `to`; `to` must already hold a
  // durable copy. Called internally when a custody bundle lands on the next
  // hop, public so recovery logic can reassign custodians explicitly.
  void custody_transfer(std::uint64_t id, const std::string& from,
                        const std::string& to);

  // Flushes BULK bundles destined for Earth tier over the node-earth link in
  // (created_at, id) order; stops at the first bundle that does not fit the
  // open window. Returns the number flushed.
  std::size_t episodic_sync(const std::string& node, const std::string& earth);

  // Schedules contact-window wakeups for every link up-interval in
  // [now, until); call once after the contact plan is final. Returns the
  // number of wakeups scheduled.
  std::size_t start(sim::SimTime until);

  // BULK bundles whose destination and next hop are both Earth tier wait for
  // episodic_sync instead of trickling over the live link (default on).
  void set_hold_bulk_for_earth(bool hold) { hold_bulk_for_earth_ = hold; }

  void on_delivery(
      std::function<void(const Bundle&, const std::string&, sim::SimTime)>
          handler) {
    delivery_handler_ = std::move(handler);
  }

  const Router& router() const { return router_; }

  std::vector<std::uint64_t> stored_at(const std::string& node) const;
  bool is_stored(const std::string& node, std::uint64_t id) const;
  std::optional<std::string> custodian_of(std::uint64_t id) const;
  std::optional<DeliveryInfo> delivered(std::uint64_t id) const;
  bool expired(std::uint64_t id) const { return expired_ids_.count(id) > 0; }
  std::size_t delivered_count() const { return deliveries_.size(); }

 private:
  struct StoredCopy {
    Bundle bundle;
    bool is_custodian{false};
    bool in_flight{false};  // custody copy retained while a hop is in the air
  };

  // Fit check plus commitment: starts the transmission when it completes
  // inside the current up window and arrives before expiry.
  std::optional<SendRecord> attempt_hop(const std::string& node,
                                        std::uint64_t id,
                                        const std::string& next);
  // Forwards stored bundles at `node` in (priority, created_at, id) order.
  // With `only_via` set, sends are restricted to that next hop.
  std::vector<SendRecord> forward_from(const std::string& node,
                                       const std::string* only_via);
  // The arrival event carries the copy; the store only tracks parked
  // bundles plus the custodian copy retained during a custody hop.
  void handle_arrival(const std::string& node, const std::string& from,
                      Bundle bundle);
  void store_copy(const std::string& node, Bundle bundle, bool custodian);
  void expire_copy(const std::string& node, std::uint64_t id);
  void mark_dead(const std::string& node, std::uint64_t id,
                 const char* reason);
  void deliver(const std::string& node, const Bundle& bundle);

  sim::Engine& engine_;
  radio::RadioEnvironment& env_;
  Router router_;
  bool hold_bulk_for_earth_{true};

  std::map<std::string, std::map<std::uint64_t, StoredCopy>> stores_;
  std::set<std::uint64_t> known_ids_;
  std::set<std::uint64_t> expired_ids_;
  std::map<std::uint64_t, DeliveryInfo> deliveries_;
  std::function<void(const Bundle&, const std::string&, sim::SimTime)>
      delivery_handler_;
};

}  // namespace lunasim::dtn
