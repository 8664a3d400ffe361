#include <doctest.h>

#include <vector>

#include "lunasim/radio/radio.hpp"
#include "lunasim/radio/types.hpp"
#include "lunasim/sim/engine.hpp"

using namespace lunasim;
using radio::Regime;
using radio::TrafficClass;

namespace {

radio::RadioEnvironment make_pair_env(sim::Engine& eng,
                                      radio::LinkConfig cfg) {
  radio::RadioEnvironment env(eng);
  env.add_node("a", radio::Tier::ROVER);
  env.add_node("b", radio::Tier::BASE);
  env.add_link("a", "b", cfg);
  return env;
}

}  // namespace

TEST_CASE("link_at reflects baseline, occlusions, and the end-exclusive "
          "boundary") {
  sim::Engine eng(1);
  auto env = make_pair_env(
      eng, {.bandwidth_bps = 1'000'000, .one_way_delay = sim::millis(10),
            .quality = 0.8});
  env.add_occlusion("a", "b", sim::at_secs(10), sim::at_secs(20));

  auto s = env.link_at("a", "b", sim::at_secs(5));
  CHECK(s.up);
  CHECK(s.quality == 0.8);
  CHECK(s.bandwidth_bps == 1'000'000);

  CHECK_FALSE(env.link_at("a", "b", sim::at_secs(15)).up);
  CHECK(env.link_at("a", "b", sim::at_secs(10)).up == false);  // start inclusive
  CHECK(env.link_at("a", "b", sim::at_secs(20)).up);           // end exclusive

  CHECK_THROWS_AS(env.link_at("a", "x", sim::at_secs(0)), radio::UnknownLink);
}

TEST_CASE("halted nodes take their links down permanently") {
  sim::Engine eng(1);
  auto env = make_pair_env(
      eng, {.bandwidth_bps = 1'000'000, .one_way_delay = sim::millis(10),
            .quality = 0.8});
  env.script_halt("b", sim::at_secs(100));
  CHECK(env.is_up("a", "b", sim::at_secs(99)));
  CHECK_FALSE(env.is_up("a", "b", sim::at_secs(100)));
  CHECK_FALSE(env.is_up("a", "b", sim::at_secs(5000)));
}

TEST_CASE("classify_regime matches the threshold and hysteresis rules") {
  CHECK(radio::classify_regime(0.95, 10'000'000, Regime::MODERATE) ==
        Regime::HIGH);
  // Within the 0.65..0.70 hysteresis band, HIGH holds.
  CHECK(radio::classify_regime(0.68, 10'000'000, Regime::HIGH) ==
        Regime::HIGH);
  CHECK(radio::classify_regime(0.64, 10'000'000, Regime::HIGH) ==
        Regime::MODERATE);
  // Entering HIGH requires crossing the threshold by the margin.
  CHECK(radio::classify_regime(0.72, 10'000'000, Regime::MODERATE) ==
        Regime::MODERATE);
  CHECK(radio::classify_regime(0.75, 10'000'000, Regime::MODERATE) ==
        Regime::HIGH);
  // POOR bounds, symmetric.
  CHECK(radio::classify_regime(0.27, 10'000'000, Regime::MODERATE) ==
        Regime::MODERATE);
  CHECK(radio::classify_regime(0.24, 10'000'000, Regime::MODERATE) ==
        Regime::POOR);
  CHECK(radio::classify_regime(0.33, 10'000'000, Regime::POOR) ==
        Regime::POOR);
  CHECK(radio::classify_regime(0.35, 10'000'000, Regime::POOR) ==
        Regime::MODERATE);
  // Bandwidth cuts are sharp.
  CHECK(radio::classify_regime(0.95, 999'999, Regime::HIGH) ==
        Regime::MODERATE);
  CHECK(radio::classify_regime(0.95, 63'999, Regime::HIGH) == Regime::POOR);
  // A down link reads as quality 0 / bandwidth 0.
  CHECK(radio::classify_regime(0.0, 0, Regime::HIGH) == Regime::POOR);
}

TEST_CASE("classify_regime is monotone in quality and bandwidth") {
  sim::Rng rng = sim::Rng::stream(7, "regime.mono");
  for (int i = 0; i < 2000; ++i) {
    auto prev = static_cast<Regime>(rng.uniform_int(0, 2));
    double q1 = rng.next_double(), q2 = rng.next_double();
    if (q1 > q2) std::swap(q1, q2);
    std::uint64_t b1 = rng.uniform_int(1, 20'000'000);
    std::uint64_t b2 = rng.uniform_int(1, 20'000'000);
    if (b1 > b2) std::swap(b1, b2);
    CHECK(static_cast<int>(radio::classify_regime(q1, b1, prev)) <=
          static_cast<int>(radio::classify_regime(q2, b2, prev)));
  }
}

TEST_CASE("quality oscillation inside the margin never chatters") {
  sim::Rng rng = sim::Rng::stream(11, "regime.chatter");
  for (int trial = 0; trial < 100; ++trial) {
    double center = (trial % 2 == 0) ? 0.70 : 0.30;
    auto regime = static_cast<Regime>(rng.uniform_int(0, 2));
    int transitions = 0;
    for (int step = 0; step < 200; ++step) {
      double q = center + rng.uniform(-0.0499, 0.0499);
      Regime next = radio::classify_regime(q, 10'000'000, regime);
      if (next != regime) ++transitions;
      regime = next;
    }
    CHECK(transitions <= 1);
  }
}

TEST_CASE("transmit arithmetic and per-link FIFO serialization") {
  sim::Engine eng(1);
  auto env = make_pair_env(
      eng, {.bandwidth_bps = 8'000, .one_way_delay = sim::millis(500),
            .quality = 0.9});
  auto t = sim::at_secs(100);

  auto r1 = env.transmit("a", "b", 1000, TrafficClass::OPERATIONAL, t);
  CHECK(r1.arrival == t + sim::millis(1500));

  // Queued behind the first send: one extra second of serialization.
  auto r2 = env.transmit("a", "b", 1000, TrafficClass::OPERATIONAL, t);
  CHECK(r2.started == t + sim::secs(1));
  CHECK(r2.arrival == t + sim::millis(2500));

  // Zero-length payloads ride the link with pure propagation delay.
  auto r3 = env.transmit("b", "a", 0, TrafficClass::OPERATIONAL,
                         sim::at_secs(200));
  CHECK(r3.arrival == sim::at_secs(200) + sim::millis(500));
}

TEST_CASE("transmit rejects down links and oversized payloads") {
  sim::Engine eng(1);
  auto env = make_pair_env(
      eng, {.bandwidth_bps = 8'000, .one_way_delay = sim::millis(500),
            .quality = 0.9, .mtu = 2048});
  env.add_occlusion("a", "b", sim::at_secs(10), sim::at_secs(20));

  CHECK_THROWS_AS(
      env.transmit("a", "b", 100, TrafficClass::BULK, sim::at_secs(15)),
      radio::LinkDown);
  CHECK_THROWS_AS(
      env.transmit("a", "b", 4096, TrafficClass::BULK, sim::at_secs(5)),
      radio::PayloadExceedsMtu);
}

TEST_CASE("peek_transmit estimates without committing link state") {
  sim::Engine eng(1);
  auto env = make_pair_env(
      eng, {.bandwidth_bps = 8'000, .one_way_delay = sim::millis(500),
            .quality = 0.9});
  auto t = sim::at_secs(1);
  auto p1 = env.peek_transmit("a", "b", 1000, TrafficClass::BULK, t);
  auto p2 = env.peek_transmit("a", "b", 1000, TrafficClass::BULK, t);
  CHECK(p1.arrival == p2.arrival);  // no busy-queue side effect
  CHECK(p1.arrival == t + sim::millis(1500));

  env.transmit("a", "b", 1000, TrafficClass::BULK, t);
  auto p3 = env.peek_transmit("a", "b", 1000, TrafficClass::BULK, t);
  CHECK(p3.started == t + sim::secs(1));
}

TEST_CASE("earth links draw per-transmission delays inside the stated range") {
  sim::Engine eng(42);
  radio::RadioEnvironment env(eng);
  env.add_node("base", radio::Tier::BASE);
  env.add_node("earth", radio::Tier::EARTH);
  env.add_link("base", "earth",
               {.bandwidth_bps = 2'000'000,
                .one_way_delay = sim::micros(875'000), .quality = 0.95});

  for (int i = 0; i < 200; ++i) {
    auto t = sim::at_secs(10 * (i + 1));
    auto up = env.transmit("base", "earth", 0, TrafficClass::OPERATIONAL, t);
    auto down = env.transmit("earth", "base", 0, TrafficClass::OPERATIONAL,
                             up.arrival);
    auto one_way_up = up.arrival.since(up.sent);
    auto one_way_down = down.arrival.since(down.sent);
    CHECK(one_way_up.us >= 750'000);
    CHECK(one_way_up.us <= 1'000'000);
    CHECK(one_way_down.us >= 750'000);
    CHECK(one_way_down.us <= 1'000'000);
    auto rtt = down.arrival.since(t);
    CHECK(rtt.us >= 1'500'000);
    CHECK(rtt.us <= 2'000'000);
  }
}

TEST_CASE("random send schedules never exceed link capacity") {
  sim::Engine eng(5);
  auto env = make_pair_env(
      eng, {.bandwidth_bps = 64'000, .one_way_delay = sim::millis(20),
            .quality = 0.9});
  sim::Rng rng = sim::Rng::stream(5, "sched");

  SUBCASE("plain fifo") {}
  SUBCASE("with an active spectrum policy") {
    env.set_policy("a", "b", {.emergency = 0.6, .operational = 0.25,
                              .bulk = 0.15});
  }

  std::uint64_t total_bytes = 0;
  sim::SimTime first_start{}, last_finish{};
  sim::SimTime prev_finish_by_class[3] = {};
  sim::SimTime t{};
  for (int i = 0; i < 300; ++i) {
    t = t + sim::micros(rng.uniform_int(0, 200'000));
    std::uint64_t size = rng.uniform_int(1, 4000);
    auto cls = static_cast<TrafficClass>(rng.uniform_int(0, 2));
    auto r = env.transmit("a", "b", size, cls, t);
    // Serialization holds per chain (one chain without a policy, one per
    // class with one).
    CHECK(r.started >= prev_finish_by_class[static_cast<int>(cls)]);
    prev_finish_by_class[static_cast<int>(cls)] = r.sent;
    if (i == 0) first_start = r.started;
    if (r.sent > last_finish) last_finish = r.sent;
    total_bytes += size;
  }
  double span_s = last_finish.since(first_start).seconds();
  CHECK(static_cast<double>(total_bytes) * 8.0 <= 64'000.0 * span_s + 1.0);
}

TEST_CASE("spectrum policy favors emergency traffic under contention") {
  sim::Engine eng(1);
  auto env = make_pair_env(
      eng, {.bandwidth_bps = 100'000, .one_way_delay = sim::millis(1),
            .quality = 0.9});
  radio::SpectrumPolicy pol{.emergency = 0.6, .operational = 0.25,
                            .bulk = 0.15};
  env.set_policy("a", "b", pol);
  CHECK(pol.effective_bps(TrafficClass::EMERGENCY, 10'000'000) == 6'000'000);

  // Each class rides its own partition at share * bandwidth; the chains
  // run concurrently, so emergency never waits behind bulk.
  auto t = sim::at_secs(1);
  auto bulk1 = env.transmit("a", "b", 1000, TrafficClass::BULK, t);
  CHECK(bulk1.started == t);
  CHECK(bulk1.sent.since(bulk1.started).us == 533'334);  // 8000 b @ 15 kbps

  auto em = env.transmit("a", "b", 1000, TrafficClass::EMERGENCY, t);
  CHECK(em.started == t);
  CHECK(em.sent.since(em.started).us == 133'334);  // 8000 b @ 60 kbps
  CHECK(em.sent < bulk1.sent);

  auto bulk2 = env.transmit("a", "b", 1000, TrafficClass::BULK, t);
  CHECK(bulk2.started == bulk1.sent);  // same-class FIFO holds
}

TEST_CASE("policy shares must be a distribution") {
  sim::Engine eng(1);
  auto env = make_pair_env(
      eng, {.bandwidth_bps = 1000, .one_way_delay = sim::millis(1),
            .quality = 0.5});
  CHECK_THROWS_AS(env.set_policy("a", "b", {.emergency = 0.5,
                                            .operational = 0.2, .bulk = 0.2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(env.set_policy("a", "b", {.emergency = 1.2,
                                            .operational = -0.1,
                                            .bulk = -0.1}),
                  std::invalid_argument);
}

TEST_CASE("predict_quality is plan-accurate with noise off") {
  sim::Engine eng(9);
  auto env = make_pair_env(
      eng, {.bandwidth_bps = 1'000'000, .one_way_delay = sim::millis(10),
            .quality = 0.82});
  env.add_occlusion("a", "b", sim::at_secs(50), sim::at_secs(60));

  auto p_now = env.predict_quality("a", "b", sim::at_secs(0));
  CHECK(p_now.estimate == 0.82);
  CHECK(p_now.confidence_interval == 0.0);  // zero horizon

  auto p60 = env.predict_quality("a", "b", sim::at_secs(60));
  CHECK(p60.estimate == 0.82);
  CHECK(p60.confidence_interval == doctest::Approx(0.6));  // 0.01/s * 60 s

  CHECK(env.predict_quality("a", "b", sim::at_secs(55)).estimate == 0.0);
}

TEST_CASE("predict_quality noise is seed-reproducible and clamped") {
  auto run = [](std::uint64_t seed) {
    sim::Engine eng(seed);
    auto env = make_pair_env(
        eng, {.bandwidth_bps = 1'000'000, .one_way_delay = sim::millis(10),
              .quality = 0.99});
    env.set_prediction_noise(0.05, 0.01);
    std::vector<double> out;
    for (int i = 0; i < 32; ++i) {
      double e = env.predict_quality("a", "b", sim::at_secs(i)).estimate;
      CHECK(e >= 0.0);
      CHECK(e <= 1.0);
      out.push_back(e);
    }
    return out;
  };
  CHECK(run(42) == run(42));
  CHECK(run(42) != run(43));
}

TEST_CASE("up_intervals subtracts occlusions and halts") {
  sim::Engine eng(1);
  auto env = make_pair_env(
      eng, {.bandwidth_bps = 1'000'000, .one_way_delay = sim::millis(10),
            .quality = 0.8});
  env.add_occlusion("a", "b", sim::at_secs(10), sim::at_secs(20));
  env.add_occlusion("a", "b", sim::at_secs(30), sim::at_secs(40));

  auto iv = env.up_intervals("a", "b", sim::at_secs(0), sim::at_secs(60));
  REQUIRE(iv.size() == 3);
  CHECK(iv[0].start == sim::at_secs(0));
  CHECK(iv[0].end == sim::at_secs(10));
  CHECK(iv[1].start == sim::at_secs(20));
  CHECK(iv[1].end == sim::at_secs(30));
  CHECK(iv[2].start == sim::at_secs(40));
  CHECK(iv[2].end == sim::at_secs(60));

  // Query window starting inside an occlusion.
  auto mid = env.up_intervals("a", "b", sim::at_secs(15), sim::at_secs(25));
  REQUIRE(mid.size() == 1);
  CHECK(mid[0].start == sim::at_secs(20));

  env.script_halt("b", sim::at_secs(35));
  auto halted = env.up_intervals("a", "b", sim::at_secs(0), sim::at_secs(60));
  REQUIRE(halted.size() == 2);
  CHECK(halted[1].end == sim::at_secs(30));
}

TEST_CASE("occlusion windows must not overlap") {
  sim::Engine eng(1);
  auto env = make_pair_env(
      eng, {.bandwidth_bps = 1'000'000, .one_way_delay = sim::millis(10),
            .quality = 0.8});
  env.add_occlusion("a", "b", sim::at_secs(10), sim::at_secs(20));
  CHECK_THROWS_AS(
      env.add_occlusion("a", "b", sim::at_secs(15), sim::at_secs(25)),
      std::invalid_argument);
  // Touching windows are fine.
  CHECK_NOTHROW(
      env.add_occlusion("a", "b", sim::at_secs(20), sim::at_secs(22)));
}

TEST_CASE("steering grants the bandwidth bonus to exactly one link") {
  sim::Engine eng(1);
  radio::RadioEnvironment env(eng);
  env.add_node("rover", radio::Tier::ROVER);
  env.add_node("hub", radio::Tier::RELAY_HUB);
  env.add_node("base", radio::Tier::BASE);
  env.add_link("rover", "hub",
               {.bandwidth_bps = 1'000'000,
                .one_way_delay = sim::millis(5), .quality = 0.7});
  env.add_link("rover", "base",
               {.bandwidth_bps = 2'000'000,
                .one_way_delay = sim::millis(5), .quality = 0.9});

  env.set_steering("rover", "hub");
  CHECK(env.effective_bandwidth_bps("rover", "hub") == 1'200'000);
  CHECK(env.effective_bandwidth_bps("rover", "base") == 2'000'000);

  env.set_steering("rover", "base");
  CHECK(env.effective_bandwidth_bps("rover", "hub") == 1'000'000);
  CHECK(env.effective_bandwidth_bps("rover", "base") == 2'400'000);
}

TEST_CASE("topology accessors") {
  sim::Engine eng(1);
  radio::RadioEnvironment env(eng);
  env.add_node("b", radio::Tier::BASE);
  env.add_node("a", radio::Tier::ROVER);
  env.add_node("c", radio::Tier::ROVER);
  env.add_link("b", "a", {.bandwidth_bps = 1000,
                          .one_way_delay = sim::millis(1), .quality = 0.5});
  env.add_link("b", "c", {.bandwidth_bps = 1000,
                          .one_way_delay = sim::millis(1), .quality = 0.5});
  CHECK(env.nodes() == std::vector<std::string>{"a", "b", "c"});
  CHECK(env.neighbors("b") == std::vector<std::string>{"a", "c"});
  CHECK(env.tier_of("a") == radio::Tier::ROVER);
  CHECK(env.links().size() == 2);
  CHECK_THROWS_AS(env.add_link("a", "x", {.bandwidth_bps = 1}),
                  std::invalid_argument);
}
