#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "lunasim/dtn/dtn.hpp"
#include "lunasim/dtn/router.hpp"
#include "lunasim/sim/engine.hpp"
#include "support/dtn_property.hpp"

using namespace lunasim;

namespace {

struct Net {
  sim::Engine engine{42};
  radio::RadioEnvironment env{engine};
  dtn::BundleNetwork net{engine, env};

  void node(const std::string& name, radio::Tier tier = radio::Tier::ROVER) {
    env.add_node(name, tier);
  }
  void link(const std::string& a, const std::string& b, std::uint64_t bps,
            std::uint64_t delay_ms) {
    radio::LinkConfig cfg;
    cfg.bandwidth_bps = bps;
    cfg.one_way_delay = sim::millis(delay_ms);
    cfg.quality = 0.9;
    cfg.mtu = 1 << 20;
    env.add_link(a, b, cfg);
  }
};

dtn::Bundle make_bundle(std::uint64_t id, std::string src, std::string dst,
                        dtn::Priority pri, sim::SimTime created,
                        sim::Duration ttl, std::size_t bytes,
                        bool custody = false) {
  dtn::Bundle b;
  b.id = id;
  b.src = std::move(src);
  b.dst = std::move(dst);
  b.priority = pri;
  b.created_at = created;
  b.ttl = ttl;
  b.custody = custody;
  b.payload.assign(bytes, 'x');
  return b;
}

std::vector<std::string> trace_kinds(const sim::Engine& engine,
                                     const std::string& kind) {
  std::vector<std::string> out;
  for (const auto& r : engine.trace().records())
    if (r.at("kind") == kind) out.push_back(r.dump());
  return out;
}

}  // namespace

TEST_CASE("enqueue stores fresh bundles and rejects expired and duplicates") {
  Net t;
  t.node("a");
  t.node("b");
  t.link("a", "b", 8'000, 100);

  auto fresh = make_bundle(1, "a", "b", dtn::Priority::OPERATIONAL,
                           sim::at_secs(0), sim::secs(60), 100);
  CHECK(t.net.enqueue("a", fresh) == dtn::EnqueueResult::STORED);

  // Forwarding starts immediately on a live link, so the copy is in flight,
  // no longer parked at the origin.
  CHECK(t.net.stored_at("a").empty());

  auto dup = make_bundle(1, "a", "b", dtn::Priority::EMERGENCY,
                         sim::at_secs(0), sim::secs(60), 30);
  CHECK(t.net.enqueue("a", dup) == dtn::EnqueueResult::DUPLICATE_ID);

  t.engine.run_until(sim::at_secs(10));
  CHECK(t.net.delivered(1).has_value());

  // created_at + ttl < now: rejected, never stored.
  auto stale = make_bundle(2, "a", "b", dtn::Priority::OPERATIONAL,
                           sim::at_secs(1), sim::secs(5), 100);
  CHECK(t.net.enqueue("a", stale) == dtn::EnqueueResult::EXPIRED);
  CHECK(t.net.stored_at("a").empty());
  CHECK_FALSE(t.net.delivered(2).has_value());
}

TEST_CASE("transmission timing on a single hop is exact") {
  Net t;
  t.node("a");
  t.node("b");
  t.link("a", "b", 8'000, 200);  // 1000 B = 1 s serialization

  t.net.enqueue("a", make_bundle(7, "a", "b", dtn::Priority::OPERATIONAL,
                                 sim::at_secs(0), sim::secs(60), 1'000));
  t.engine.run_until(sim::at_secs(5));
  auto info = t.net.delivered(7);
  REQUIRE(info.has_value());
  CHECK(info->at == sim::at_micros(1'200'000));
  CHECK(info->node == "b");
}

TEST_CASE("priority order at a contact: EMERGENCY preempts BULK") {
  Net t;
  t.node("a");
  t.node("b");
  t.link("a", "b", 8'000, 100);  // 1000 B = 1 s
  // Link silent until t=10; the window [10, 11.5) fits exactly one bundle.
  t.env.add_occlusion("a", "b", sim::at_secs(0), sim::at_secs(10));
  t.env.add_occlusion("a", "b", sim::at_micros(11'500'000), sim::at_secs(60));
  t.net.start(sim::at_secs(120));

  t.engine.run_until(sim::at_secs(1));
  auto bulk = make_bundle(1, "a", "b", dtn::Priority::BULK, sim::at_secs(1),
                          sim::secs(300), 1'000);
  auto emergency = make_bundle(2, "a", "b", dtn::Priority::EMERGENCY,
                               sim::at_secs(1), sim::secs(300), 1'000);
  CHECK(t.net.enqueue("a", bulk) == dtn::EnqueueResult::STORED);
  CHECK(t.net.enqueue("a", emergency) == dtn::EnqueueResult::STORED);
  CHECK(t.net.stored_at("a").size() == 2);

  t.engine.run_until(sim::at_secs(20));
  REQUIRE(t.net.delivered(2).has_value());
  CHECK(t.net.delivered(2)->at == sim::at_micros(11'100'000));
  CHECK_FALSE(t.net.delivered(1).has_value());
  CHECK(t.net.is_stored("a", 1));

  // The bulk bundle rides the next window.
  t.engine.run_until(sim::at_secs(70));
  CHECK(t.net.delivered(1).has_value());
}

TEST_CASE("relay routing: A to C through B when A-C never exists") {
  Net t;
  t.node("a");
  t.node("b");
  t.node("c");
  t.link("a", "b", 8'000, 200);  // 500 B: 0.5 s tx, arrive b at 0.7 s
  t.link("b", "c", 4'000, 300);  // 500 B: 1.0 s tx, arrive c at 2.0 s

  t.net.enqueue("a", make_bundle(9, "a", "c", dtn::Priority::OPERATIONAL,
                                 sim::at_secs(0), sim::secs(600), 500));
  t.engine.run_until(sim::at_secs(5));
  auto info = t.net.delivered(9);
  REQUIRE(info.has_value());
  CHECK(info->at == sim::at_secs(2));

  auto forwards = trace_kinds(t.engine, "bundle_forwarded");
  REQUIRE(forwards.size() == 2);
  CHECK(forwards[0].find("\"to\":\"b\"") != std::string::npos);
  CHECK(forwards[1].find("\"to\":\"c\"") != std::string::npos);
}

TEST_CASE("router journeys report per-hop departures and arrivals") {
  Net t;
  t.node("a");
  t.node("b");
  t.node("c");
  t.link("a", "b", 8'000, 200);
  t.link("b", "c", 4'000, 300);
  t.env.add_occlusion("a", "b", sim::at_secs(0), sim::at_secs(4));

  dtn::Router router(t.env);
  auto j = router.best_journey("a", "c", 500, sim::at_secs(0),
                               sim::at_secs(600));
  REQUIRE(j.has_value());
  REQUIRE(j->hops.size() == 2);
  CHECK(j->hops[0].depart == sim::at_secs(4));
  CHECK(j->hops[0].arrive == sim::at_micros(4'700'000));
  CHECK(j->hops[1].depart == sim::at_micros(4'700'000));
  CHECK(j->arrival == sim::at_micros(6'000'000));

  CHECK_FALSE(router
                  .best_journey("a", "c", 500, sim::at_secs(0),
                                sim::at_secs(5))
                  .has_value());
}

TEST_CASE("unreachable destination holds until TTL expiry") {
  Net t;
  t.node("a");
  t.node("b");
  t.node("c");
  t.link("a", "b", 8'000, 100);  // no path a->c

  t.net.enqueue("a", make_bundle(4, "a", "c", dtn::Priority::OPERATIONAL,
                                 sim::at_secs(0), sim::secs(30), 100));
  t.engine.run_until(sim::at_secs(29));
  CHECK(t.net.is_stored("a", 4));

  t.engine.run_until(sim::at_secs(31));
  CHECK_FALSE(t.net.is_stored("a", 4));
  CHECK_FALSE(t.net.delivered(4).has_value());
  CHECK(t.net.expired(4));
  auto expired = trace_kinds(t.engine, "bundle_expired");
  REQUIRE(expired.size() == 1);
  CHECK(expired[0].find("\"reason\":\"ttl\"") != std::string::npos);
}

TEST_CASE("crash of a non-custodian relay reroutes, bundle still delivered") {
  Net t;
  t.node("a");
  t.node("b");
  t.node("c");
  t.node("d");
  // Fast path a-b-d, slower backup a-c-d.
  t.link("a", "b", 64'000, 50);
  t.link("b", "d", 64'000, 50);
  t.link("a", "c", 8'000, 500);
  t.link("c", "d", 8'000, 500);
  // b never comes up for this bundle: a-b is occluded until after b's crash.
  t.env.add_occlusion("a", "b", sim::at_secs(0), sim::at_secs(10));
  t.env.script_halt("b", sim::at_secs(5));
  t.net.start(sim::at_secs(120));

  auto b = make_bundle(11, "a", "d", dtn::Priority::EMERGENCY, sim::at_secs(0),
                       sim::secs(600), 800, /*custody=*/true);
  t.net.enqueue("a", b);
  CHECK(t.net.custodian_of(11) == "a");

  t.engine.run_until(sim::at_secs(30));
  REQUIRE(t.net.delivered(11).has_value());
  // 800 B at 8 kbps: 0.8 s per hop plus 0.5 s delay, two hops via c.
  CHECK(t.net.delivered(11)->at == sim::at_micros(2'600'000));
  CHECK_FALSE(t.net.custodian_of(11).has_value());

  auto transfers = trace_kinds(t.engine, "custody_transferred");
  REQUIRE(transfers.size() == 1);
  CHECK(transfers[0].find("\"to\":\"c\"") != std::string::npos);
}

TEST_CASE("custody copy survives an in-flight loss and is rerouted") {
  Net t;
  t.node("a");
  t.node("gw", radio::Tier::EARTH);
  t.node("c");
  t.node("d");
  // Earth gateway looks fastest on paper but its delay draw overshoots the
  // receiver's crash, losing the copy mid-flight.
  t.link("a", "gw", 64'000, 800);
  t.link("gw", "d", 64'000, 800);
  t.link("a", "c", 8'000, 500);
  t.link("c", "d", 8'000, 500);
  t.env.set_earth_delay_range(sim::millis(950), sim::millis(990));
  t.env.script_halt("gw", sim::at_micros(1'000'000));  // send ends at 0.1 s

  auto b = make_bundle(21, "a", "d", dtn::Priority::EMERGENCY, sim::at_secs(0),
                       sim::secs(600), 800, /*custody=*/true);
  t.net.enqueue("a", b);
  CHECK(t.net.custodian_of(21) == "a");
  CHECK(t.net.is_stored("a", 21));

  t.engine.run_until(sim::at_secs(30));
  REQUIRE(t.net.delivered(21).has_value());
  CHECK_FALSE(t.net.custodian_of(21).has_value());
  // Reroute starts when the loss is detected (the failed arrival instant).
  auto forwards = trace_kinds(t.engine, "bundle_forwarded");
  REQUIRE(forwards.size() == 3);
  CHECK(forwards[0].find("\"to\":\"gw\"") != std::string::npos);
  CHECK(forwards[1].find("\"to\":\"c\"") != std::string::npos);
  CHECK(forwards[2].find("\"to\":\"d\"") != std::string::npos);
}

TEST_CASE("custody_transfer of an unknown bundle throws") {
  Net t;
  t.node("a");
  t.node("b");
  t.link("a", "b", 8'000, 100);
  CHECK_THROWS_AS(t.net.custody_transfer(404, "a", "b"), dtn::UnknownBundle);
}

TEST_CASE("on_contact returns the initiated transmissions") {
  Net t;
  t.node("a");
  t.node("b");
  t.link("a", "b", 8'000, 100);
  t.env.add_occlusion("a", "b", sim::at_secs(0), sim::at_secs(10));
  // No start(): contacts are driven manually here.

  CHECK(t.net.on_contact("a", "b").empty());

  t.net.enqueue("a", make_bundle(1, "a", "b", dtn::Priority::OPERATIONAL,
                                 sim::at_secs(0), sim::secs(300), 400));
  t.net.enqueue("a", make_bundle(2, "a", "b", dtn::Priority::EMERGENCY,
                                 sim::at_secs(0), sim::secs(300), 400));
  CHECK(t.net.on_contact("a", "b").empty());  // still occluded
  CHECK(t.net.stored_at("a").size() == 2);

  t.engine.run_until(sim::at_secs(10));
  auto sends = t.net.on_contact("a", "b");
  REQUIRE(sends.size() == 2);
  CHECK(sends[0].bundle_id == 2);  // EMERGENCY first
  CHECK(sends[1].bundle_id == 1);
  CHECK(sends[0].from == "a");
  CHECK(sends[0].to == "b");
  t.engine.run_until(sim::at_secs(20));
  CHECK(t.net.delivered_count() == 2);
}

TEST_CASE("episodic sync flushes bulk bundles to Earth in FIFO order") {
  Net t;
  t.node("base", radio::Tier::BASE);
  t.node("earth", radio::Tier::EARTH);
  t.link("base", "earth", 8'000, 800);  // 1000 B = 1 s serialization
  t.env.set_earth_delay_range(sim::millis(800), sim::millis(800));

  // Created out of enqueue order; sync must follow created_at.
  for (auto [id, created] : {std::pair{3, 30}, {1, 10}, {2, 20}}) {
    t.net.enqueue("base",
                  make_bundle(id, "base", "earth", dtn::Priority::BULK,
                              sim::at_secs(created), sim::secs(86'400), 1'000));
  }
  // Held for sync: the live link alone does not move BULK toward Earth.
  CHECK(t.net.stored_at("base").size() == 3);
  t.engine.run_until(sim::at_secs(60));
  CHECK(t.net.stored_at("base").size() == 3);

  CHECK(t.net.episodic_sync("base", "earth") == 3);
  CHECK(t.net.stored_at("base").empty());
  t.engine.run_until(sim::at_secs(120));
  CHECK(t.net.delivered(1)->at == sim::at_micros(61'800'000));
  CHECK(t.net.delivered(2)->at == sim::at_micros(62'800'000));
  CHECK(t.net.delivered(3)->at == sim::at_micros(63'800'000));
}

TEST_CASE("episodic sync respects the window byte budget and link state") {
  Net t;
  t.node("base", radio::Tier::BASE);
  t.node("earth", radio::Tier::EARTH);
  t.link("base", "earth", 8'000, 800);
  t.env.set_earth_delay_range(sim::millis(800), sim::millis(800));
  // Window closes 3.2 s after the sync fires at t=60.
  t.env.add_occlusion("base", "earth", sim::at_micros(63'200'000),
                      sim::at_secs(300));

  CHECK(t.net.episodic_sync("base", "earth") == 0);  // nothing queued

  for (int id = 1; id <= 5; ++id) {
    t.net.enqueue("base",
                  make_bundle(id, "base", "earth", dtn::Priority::BULK,
                              sim::at_secs(id), sim::secs(86'400), 1'000));
  }
  t.engine.run_until(sim::at_secs(60));
  CHECK(t.net.episodic_sync("base", "earth") == 3);  // 3 x 1 s fits in 3.2 s
  CHECK(t.net.stored_at("base") == std::vector<std::uint64_t>{4, 5});

  t.engine.run_until(sim::at_secs(100));  // inside the occlusion
  CHECK_THROWS_AS(t.net.episodic_sync("base", "earth"), radio::LinkDown);
  CHECK(t.net.stored_at("base") == std::vector<std::uint64_t>{4, 5});

  t.engine.run_until(sim::at_secs(300));
  CHECK(t.net.episodic_sync("base", "earth") == 2);
}

TEST_CASE("disabling the bulk hold lets BULK trickle over the live link") {
  Net t;
  t.node("base", radio::Tier::BASE);
  t.node("earth", radio::Tier::EARTH);
  t.link("base", "earth", 8'000, 800);
  t.env.set_earth_delay_range(sim::millis(800), sim::millis(800));
  t.net.set_hold_bulk_for_earth(false);

  t.net.enqueue("base", make_bundle(8, "base", "earth", dtn::Priority::BULK,
                                    sim::at_secs(0), sim::secs(86'400), 1'000));
  t.engine.run_until(sim::at_secs(10));
  REQUIRE(t.net.delivered(8).has_value());
  CHECK(t.net.delivered(8)->at == sim::at_micros(1'800'000));
}

TEST_CASE("bulk headed for Earth still crosses the surface segment") {
  Net t;
  t.node("rover");
  t.node("base", radio::Tier::BASE);
  t.node("earth", radio::Tier::EARTH);
  t.link("rover", "base", 64'000, 50);
  t.link("base", "earth", 8'000, 800);
  t.env.set_earth_delay_range(sim::millis(800), sim::millis(800));

  t.net.enqueue("rover", make_bundle(5, "rover", "earth", dtn::Priority::BULK,
                                     sim::at_secs(0), sim::secs(86'400), 800));
  t.engine.run_until(sim::at_secs(30));
  // Parked at the gateway, not at the origin and not delivered.
  CHECK(t.net.is_stored("base", 5));
  CHECK_FALSE(t.net.delivered(5).has_value());
  CHECK(t.net.episodic_sync("base", "earth") == 1);
  t.engine.run_until(sim::at_secs(60));
  CHECK(t.net.delivered(5).has_value());
}

TEST_CASE("delivery exactly at expiry is still a delivery") {
  Net t;
  t.node("a");
  t.node("b");
  t.link("a", "b", 8'000, 500);  // 1000 B: sent 1.0 s, arrive 1.5 s

  t.net.enqueue("a", make_bundle(6, "a", "b", dtn::Priority::OPERATIONAL,
                                 sim::at_secs(0), sim::millis(1'500), 1'000));
  t.engine.run_until(sim::at_secs(5));
  REQUIRE(t.net.delivered(6).has_value());
  CHECK(t.net.delivered(6)->at == sim::at_micros(1'500'000));
  CHECK_FALSE(t.net.expired(6));
}

TEST_CASE("a bundle that would arrive after expiry is never sent") {
  Net t;
  t.node("a");
  t.node("b");
  t.link("a", "b", 8'000, 500);

  t.net.enqueue("a", make_bundle(3, "a", "b", dtn::Priority::OPERATIONAL,
                                 sim::at_secs(0), sim::millis(1'499), 1'000));
  t.engine.run_until(sim::at_secs(5));
  CHECK_FALSE(t.net.delivered(3).has_value());
  CHECK(t.net.expired(3));
  CHECK(trace_kinds(t.engine, "bundle_forwarded").empty());
}

TEST_CASE("simulated outcomes match the contact-graph oracle") {
  int feasible = 0, infeasible = 0;
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    CAPTURE(seed);
    auto outcome = testsupport::run_random_dtn_instance(seed);
    CHECK(outcome.agree());
    if (!outcome.agree()) {
      MESSAGE("sim_delivered=", outcome.sim_delivered,
              " sim_arrival=", outcome.sim_arrival_us,
              " oracle_feasible=", outcome.oracle.feasible,
              " oracle_arrival=", outcome.oracle.arrival_us);
    }
    (outcome.oracle.feasible ? feasible : infeasible)++;
  }
  // Both halves of the invariant need real instances behind them.
  CHECK(feasible >= 30);
  CHECK(infeasible >= 30);
}
