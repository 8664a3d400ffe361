#include <doctest.h>

#include <string>
#include <tuple>
#include <vector>

#include "lunasim/a2a/codec.hpp"
#include "lunasim/mcp/grid.hpp"
#include "lunasim/mcp/server.hpp"
#include "lunasim/sim/engine.hpp"
#include "lunasim/sim/rng.hpp"
#include "support/grid_oracle.hpp"

using namespace lunasim;

namespace {

struct World {
  sim::Engine engine{7};
  radio::RadioEnvironment env{engine};

  void node(const std::string& name, radio::Tier tier = radio::Tier::ROVER) {
    env.add_node(name, tier);
  }
  void link(const std::string& a, const std::string& b, std::uint64_t bps,
            std::uint64_t delay_ms, double quality = 0.9) {
    radio::LinkConfig cfg;
    cfg.bandwidth_bps = bps;
    cfg.one_way_delay = sim::millis(delay_ms);
    cfg.quality = quality;
    cfg.mtu = 1 << 20;
    env.add_link(a, b, cfg);
  }
};

std::uint64_t tx_us(std::uint64_t bytes, std::uint64_t bps) {
  return (bytes * 8 * 1'000'000 + bps - 1) / bps;
}

std::vector<std::string> trace_kinds(const sim::Engine& engine,
                                     const std::string& kind) {
  std::vector<std::string> out;
  for (const auto& r : engine.trace().records())
    if (r.at("kind") == kind) out.push_back(r.dump());
  return out;
}

mcp::Grid uniform_grid(int w, int h, double q) {
  mcp::Grid g;
  g.width = w;
  g.height = h;
  g.quality.assign(static_cast<std::size_t>(w) * h, q);
  g.blocked.assign(g.quality.size(), 0);
  return g;
}

std::string encoded_state(const std::string& sender, std::uint64_t seq) {
  a2a::SemanticMessage m;
  m.kind = a2a::MessageKind::STATE_UPDATE;
  m.sender = sender;
  m.seq = seq;
  m.body = {{"n", seq}};
  return a2a::encode(m, a2a::CompressionTier::FULL);
}

std::string encoded_alert(std::uint64_t seq) {
  a2a::SemanticMessage m;
  m.kind = a2a::MessageKind::ALERT;
  m.sender = "suit";
  m.seq = seq;
  m.alert = a2a::AlertBody{};
  return a2a::encode(m, a2a::CompressionTier::FULL);
}

}  // namespace

TEST_CASE("energy prediction follows the linear power model") {
  CHECK(mcp::predict_energy_j(mcp::EnergyModel{}, 600.0, 300.0) == 75'000.0);
  CHECK(mcp::predict_energy_j(mcp::EnergyModel{}, 600.0, 0.0) == 30'000.0);
  CHECK(mcp::predict_energy_j(mcp::EnergyModel{}, 0.0, 0.0) == 0.0);
  CHECK(mcp::predict_energy_j(mcp::EnergyModel{30.0, 100.0}, 10.0, 4.0) ==
        30.0 * 10.0 + 70.0 * 4.0);

  CHECK_THROWS_AS(mcp::predict_energy_j(mcp::EnergyModel{}, 10.0, 11.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(mcp::predict_energy_j(mcp::EnergyModel{}, -1.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(mcp::predict_energy_j(mcp::EnergyModel{}, 10.0, -1.0),
                  std::invalid_argument);
}

TEST_CASE("signal quality capability is a delegation identity") {
  World t;
  t.node("a");
  t.node("b");
  t.link("a", "b", 64'000, 50, 0.7);
  mcp::ContextServer srv(t.engine, t.env, "a");

  for (std::uint64_t at_us : {0ull, 5'000'000ull, 120'000'000ull}) {
    auto direct = t.env.predict_quality("a", "b", sim::at_micros(at_us));
    auto via = srv.evaluate("signal_quality_estimation",
                            {{"a", "a"}, {"b", "b"}, {"at_us", at_us}});
    CHECK(via.at("estimate").get<double>() == direct.estimate);
    CHECK(via.at("confidence_interval").get<double>() ==
          direct.confidence_interval);
  }
}

TEST_CASE("energy capability returns the model value") {
  World t;
  t.node("a");
  mcp::ContextServer srv(t.engine, t.env, "a");
  auto r = srv.evaluate("energy_prediction",
                        {{"horizon_s", 600.0}, {"driving_s", 300.0}});
  CHECK(r.at("joules").get<double>() == 75'000.0);
}

TEST_CASE("unknown capability is rejected") {
  World t;
  t.node("a");
  mcp::ContextServer srv(t.engine, t.env, "a");
  CHECK_THROWS_AS(srv.evaluate("terrain_prediction", sim::json::object()),
                  mcp::UnknownCapability);
}

TEST_CASE("weight zero reduces the planner to plain shortest path") {
  auto g = uniform_grid(3, 3, 1.0);
  // Qualities vary but cannot matter at weight 0.
  g.quality[g.index({1, 1})] = 0.125;
  g.quality[g.index({2, 0})] = 0.25;

  auto plan = mcp::plan_locomotion(g, {0, 0}, {2, 2}, 0.0);
  CHECK(plan.cost == 5.0);
  CHECK(plan.path == std::vector<mcp::Cell>{
                         {0, 0}, {0, 1}, {0, 2}, {1, 2}, {2, 2}});
}

TEST_CASE("equal-cost paths break ties toward lower x then lower y") {
  auto g = uniform_grid(2, 2, 1.0);
  auto plan = mcp::plan_locomotion(g, {0, 0}, {1, 1}, 1.0);
  CHECK(plan.cost == 3.0);
  CHECK(plan.path == std::vector<mcp::Cell>{{0, 0}, {0, 1}, {1, 1}});
}

TEST_CASE("planner on a 4x4 grid with one blocked cell matches brute force") {
  auto g = uniform_grid(4, 4, 1.0);
  g.blocked[g.index({1, 1})] = 1;
  // Dyadic qualities keep every cost sum exact in double.
  const double qs[16] = {1.0,   0.5,    0.75,  0.25,  0.0,  1.0,
                         0.625, 0.375,  0.875, 0.125, 0.5,  1.0,
                         0.25,  0.9375, 0.75,  0.5};
  for (int i = 0; i < 16; ++i) g.quality[i] = qs[i];

  auto plan = mcp::plan_locomotion(g, {0, 0}, {3, 3}, 2.0);
  auto oracle = test::brute_force_plan(g, {0, 0}, {3, 3}, 2.0);
  REQUIRE(oracle.has_value());
  CHECK(plan.cost == oracle->cost);
  CHECK(plan.path == oracle->path);
  CHECK(plan.path.front() == mcp::Cell{0, 0});
  CHECK(plan.path.back() == mcp::Cell{3, 3});
}

TEST_CASE("high wireless weight detours around a low-quality corridor") {
  auto g = uniform_grid(5, 5, 1.0);
  for (int x : {1, 2, 3}) g.quality[g.index({x, 2})] = 0.0;

  auto plan = mcp::plan_locomotion(g, {0, 2}, {4, 2}, 10.0);
  // Direct route would cost 1 + 3*11 + 1 = 35; the detour costs 7.
  CHECK(plan.cost == 7.0);
  CHECK(plan.path == std::vector<mcp::Cell>{{0, 2},
                                            {0, 1},
                                            {1, 1},
                                            {2, 1},
                                            {3, 1},
                                            {4, 1},
                                            {4, 2}});
  auto oracle = test::brute_force_plan(g, {0, 2}, {4, 2}, 10.0);
  REQUIRE(oracle.has_value());
  CHECK(plan.cost == oracle->cost);
  CHECK(plan.path == oracle->path);
}

TEST_CASE("walled-off goal and blocked endpoints raise NoPath") {
  auto g = uniform_grid(3, 3, 1.0);
  for (int y : {0, 1, 2}) g.blocked[g.index({1, y})] = 1;
  CHECK_THROWS_AS(mcp::plan_locomotion(g, {0, 1}, {2, 1}, 1.0), mcp::NoPath);

  auto open = uniform_grid(3, 3, 1.0);
  open.blocked[open.index({2, 2})] = 1;
  CHECK_THROWS_AS(mcp::plan_locomotion(open, {0, 0}, {2, 2}, 1.0),
                  mcp::NoPath);
  CHECK_THROWS_AS(mcp::plan_locomotion(open, {2, 2}, {0, 0}, 1.0),
                  mcp::NoPath);
  CHECK_THROWS_AS(mcp::plan_locomotion(open, {0, 0}, {1, 1}, -0.5),
                  std::invalid_argument);
}

TEST_CASE("planner equals brute force on random grids up to 6x6") {
  const double weights[5] = {0.0, 0.5, 1.0, 2.0, 10.0};
  int feasible = 0, infeasible = 0;
  for (std::uint64_t seed = 0; seed < 90; ++seed) {
    CAPTURE(seed);
    sim::Rng rng = sim::Rng::stream(seed, "grid_property");
    int w = static_cast<int>(rng.uniform_int(2, 6));
    int h = static_cast<int>(rng.uniform_int(2, 6));
    mcp::Grid g = uniform_grid(w, h, 1.0);
    std::vector<mcp::Cell> open;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        // Dyadic rationals k/64: all path costs stay exact in double.
        g.quality[g.index({x, y})] = rng.uniform_int(0, 64) / 64.0;
        if (rng.uniform_int(0, 99) < 33)
          g.blocked[g.index({x, y})] = 1;
        else
          open.push_back({x, y});
      }
    }
    if (open.size() < 2) continue;
    mcp::Cell start = open[rng.uniform_int(0, open.size() - 1)];
    mcp::Cell goal = open[rng.uniform_int(0, open.size() - 1)];
    double weight = weights[rng.uniform_int(0, 4)];

    auto oracle = test::brute_force_plan(g, start, goal, weight);
    if (!oracle) {
      ++infeasible;
      CHECK_THROWS_AS(mcp::plan_locomotion(g, start, goal, weight),
                      mcp::NoPath);
      continue;
    }
    ++feasible;
    auto plan = mcp::plan_locomotion(g, start, goal, weight);
    CHECK(plan.cost == oracle->cost);
    CHECK(plan.path == oracle->path);
  }
  // The generator must exercise both outcomes.
  CHECK(feasible >= 40);
  CHECK(infeasible >= 10);
}

TEST_CASE("grid JSON round-trips and parse validates its input") {
  auto g = uniform_grid(3, 2, 0.5);
  g.quality[g.index({2, 1})] = 0.25;
  g.blocked[g.index({1, 0})] = 1;

  auto j = g.to_json();
  auto back = mcp::Grid::parse(j);
  CHECK(back.width == g.width);
  CHECK(back.height == g.height);
  CHECK(back.quality == g.quality);
  CHECK(back.blocked == g.blocked);

  auto bad_len = j;
  bad_len["quality"] = std::vector<double>{1.0};
  CHECK_THROWS_AS(mcp::Grid::parse(bad_len), std::invalid_argument);
  auto bad_q = j;
  bad_q["quality"][0] = 1.5;
  CHECK_THROWS_AS(mcp::Grid::parse(bad_q), std::invalid_argument);
  auto bad_cell = j;
  bad_cell["blocked"].push_back({7, 0});
  CHECK_THROWS_AS(mcp::Grid::parse(bad_cell), std::invalid_argument);
  auto bad_dim = j;
  bad_dim["width"] = 0;
  CHECK_THROWS_AS(mcp::Grid::parse(bad_dim), std::invalid_argument);
}

TEST_CASE("locomotion capability round-trips cells through JSON") {
  World t;
  t.node("base");
  mcp::ContextServer srv(t.engine, t.env, "base");

  auto g = uniform_grid(4, 4, 1.0);
  g.blocked[g.index({1, 1})] = 1;
  auto r = srv.evaluate("locomotion_planning", {{"grid", g.to_json()},
                                                {"start", {0, 0}},
                                                {"goal", {3, 3}},
                                                {"wireless_weight", 0.0}});
  auto plan = mcp::plan_locomotion(g, {0, 0}, {3, 3}, 0.0);
  CHECK(r.at("cost").get<double>() == plan.cost);
  REQUIRE(r.at("path").size() == plan.path.size());
  for (std::size_t i = 0; i < plan.path.size(); ++i) {
    CHECK(r.at("path")[i][0].get<int>() == plan.path[i].x);
    CHECK(r.at("path")[i][1].get<int>() == plan.path[i].y);
  }
}

TEST_CASE("query pays contact-plan latency both ways") {
  World t;
  t.node("r");
  t.node("s");
  t.link("r", "s", 8'000, 100);
  mcp::ContextServer srv(t.engine, t.env, "s");

  sim::json request = {{"horizon_s", 600.0}, {"driving_s", 300.0}};
  auto res = srv.query("r", "energy_prediction", request, sim::secs(10));
  CHECK(res.response.at("joules").get<double>() == 75'000.0);

  std::uint64_t leg1 = tx_us(request.dump().size(), 8'000) + 100'000;
  std::uint64_t leg2 = tx_us(res.response.dump().size(), 8'000) + 100'000;
  CHECK(res.responds_at == sim::at_micros(leg1 + leg2));
}

TEST_CASE("query from the server's own node answers immediately") {
  World t;
  t.node("s");
  mcp::ContextServer srv(t.engine, t.env, "s");
  t.engine.run_until(sim::at_secs(3));
  auto res = srv.query("s", "energy_prediction",
                       {{"horizon_s", 10.0}, {"driving_s", 0.0}},
                       sim::secs(1));
  CHECK(res.responds_at == sim::at_secs(3));
}

TEST_CASE("query is Unreachable without a round trip inside the timeout") {
  World t;
  t.node("r");
  t.node("s");
  t.link("r", "s", 8'000, 100);
  mcp::ContextServer srv(t.engine, t.env, "s");
  sim::json request = {{"horizon_s", 600.0}, {"driving_s", 300.0}};

  SUBCASE("link occluded for the whole horizon") {
    t.env.add_occlusion("r", "s", sim::at_secs(0), sim::at_secs(100'000));
    CHECK_THROWS_AS(srv.query("r", "energy_prediction", request, sim::secs(10)),
                    mcp::Unreachable);
  }
  SUBCASE("timeout covers one leg but not the return") {
    std::uint64_t leg1 = tx_us(request.dump().size(), 8'000) + 100'000;
    CHECK_THROWS_AS(srv.query("r", "energy_prediction", request,
                              sim::micros(leg1 + 50'000)),
                    mcp::Unreachable);
  }
  SUBCASE("unknown capability still reported when reachable") {
    CHECK_THROWS_AS(srv.query("r", "terrain_prediction", request,
                              sim::secs(10)),
                    mcp::UnknownCapability);
  }
}

TEST_CASE("publish with no subscribers notifies nobody") {
  World t;
  t.node("base");
  mcp::ContextServer srv(t.engine, t.env, "base");
  CHECK(srv.publish("soil", {{"v", 1}}) == 0);
  CHECK(srv.latest("soil").has_value());
}

TEST_CASE("publish pushes to live subscribers and brokers occluded ones") {
  World t;
  t.node("base");
  t.node("r1");
  t.node("r2");
  t.link("base", "r1", 64'000, 50);
  t.link("base", "r2", 64'000, 50);
  t.env.add_occlusion("base", "r2", sim::at_secs(0), sim::at_secs(100));
  mcp::ContextServer srv(t.engine, t.env, "base");

  std::vector<std::tuple<std::string, std::string, sim::SimTime>> pushes;
  srv.set_push_handler([&](const std::string& sub, const std::string& topic,
                           const sim::json& update, sim::SimTime at) {
    CHECK(update == sim::json{{"v", 1}});
    pushes.emplace_back(sub, topic, at);
  });
  srv.subscribe("r1", "soil", sim::secs(10));
  srv.subscribe("r2", "soil", sim::secs(10));

  sim::json u1 = {{"v", 1}};
  CHECK(srv.publish("soil", u1) == 1);
  CHECK(srv.slot_size("r2") == 1);

  t.engine.run_until(sim::at_secs(1));
  REQUIRE(pushes.size() == 1);
  CHECK(std::get<0>(pushes[0]) == "r1");
  CHECK(std::get<1>(pushes[0]) == "soil");
  // Push latency equals serialization plus propagation over the plan.
  CHECK(std::get<2>(pushes[0]) ==
        sim::at_micros(tx_us(u1.dump().size(), 64'000) + 50'000));
  CHECK(trace_kinds(t.engine, "context_push").size() == 1);

  auto parked = srv.broker_fetch("r2");
  REQUIRE(parked.size() == 1);
  auto msg = a2a::decode(parked[0]);
  CHECK(msg.kind == a2a::MessageKind::STATE_UPDATE);
  CHECK(msg.sender == "base");
  CHECK(msg.body.at("topic") == "soil");
  CHECK(msg.body.at("update") == u1);
}

TEST_CASE("publishes inside min_interval are suppressed per subscriber") {
  World t;
  t.node("base");
  t.node("r1");
  t.link("base", "r1", 64'000, 50);
  mcp::ContextServer srv(t.engine, t.env, "base");
  srv.subscribe("r1", "soil", sim::secs(10));

  CHECK(srv.publish("soil", {{"v", 1}}) == 1);
  t.engine.run_until(sim::at_secs(5));
  CHECK(srv.publish("soil", {{"v", 2}}) == 0);
  // Suppression only skips the notification; the topic state still moves.
  CHECK(srv.latest("soil").value() == sim::json{{"v", 2}});
  // A suppressed publish does not restart the rate window.
  t.engine.run_until(sim::at_secs(10));
  CHECK(srv.publish("soil", {{"v", 3}}) == 1);
}

TEST_CASE("re-subscribing replaces the interval and unsubscribe stops pushes") {
  World t;
  t.node("base");
  t.node("r1");
  t.link("base", "r1", 64'000, 50);
  mcp::ContextServer srv(t.engine, t.env, "base");

  srv.subscribe("r1", "soil", sim::secs(10));
  CHECK(srv.publish("soil", {{"v", 1}}) == 1);
  t.engine.run_until(sim::at_secs(5));
  srv.subscribe("r1", "soil", sim::secs(1));
  CHECK(srv.publish("soil", {{"v", 2}}) == 1);

  srv.unsubscribe("r1", "soil");
  t.engine.run_until(sim::at_secs(20));
  CHECK(srv.publish("soil", {{"v", 3}}) == 0);
}

TEST_CASE("pull state matches the most recent push at its virtual time") {
  World t;
  t.node("base");
  t.node("r1");
  t.link("base", "r1", 64'000, 50);
  mcp::ContextServer srv(t.engine, t.env, "base");
  srv.subscribe("r1", "soil", sim::secs(0));

  int seen = 0;
  srv.set_push_handler([&](const std::string&, const std::string& topic,
                           const sim::json& update, sim::SimTime) {
    ++seen;
    CHECK(srv.latest(topic).value() == update);
  });
  CHECK(srv.publish("soil", {{"v", 1}}) == 1);
  t.engine.run_until(sim::at_secs(5));
  CHECK(srv.publish("soil", {{"v", 2}}) == 1);
  t.engine.run_until(sim::at_secs(10));
  CHECK(seen == 2);
}

TEST_CASE("broker slots are FIFO and fetch drains them") {
  World t;
  t.node("base");
  mcp::ContextServer srv(t.engine, t.env, "base");

  auto m1 = encoded_state("a", 1);
  auto m2 = encoded_state("a", 2);
  srv.broker_put("r", m1);
  srv.broker_put("r", m2);
  CHECK(srv.slot_size("r") == 2);

  auto got = srv.broker_fetch("r");
  REQUIRE(got.size() == 2);
  CHECK(got[0] == m1);
  CHECK(got[1] == m2);
  CHECK(srv.slot_size("r") == 0);
  CHECK(srv.broker_fetch("r").empty());
  CHECK(srv.broker_fetch("never_wrote").empty());
}

TEST_CASE("broker overflow drops the oldest non-emergency message") {
  World t;
  t.node("base");
  mcp::ContextServer srv(t.engine, t.env, "base");
  srv.set_slot_capacity(2);

  SUBCASE("all routine: oldest dropped") {
    auto m1 = encoded_state("a", 1);
    auto m2 = encoded_state("a", 2);
    auto m3 = encoded_state("a", 3);
    srv.broker_put("r", m1);
    srv.broker_put("r", m2);
    srv.broker_put("r", m3);
    auto got = srv.broker_fetch("r");
    REQUIRE(got.size() == 2);
    CHECK(got[0] == m2);
    CHECK(got[1] == m3);
    auto drops = trace_kinds(t.engine, "slot_overflow");
    REQUIRE(drops.size() == 1);
    CHECK(drops[0].find("\"recipient\":\"r\"") != std::string::npos);
  }
  SUBCASE("emergencies survive over older routine traffic") {
    auto alert = encoded_alert(1);
    auto s1 = encoded_state("a", 2);
    auto s2 = encoded_state("a", 3);
    srv.broker_put("r", alert);
    srv.broker_put("r", s1);
    srv.broker_put("r", s2);
    auto got = srv.broker_fetch("r");
    REQUIRE(got.size() == 2);
    CHECK(got[0] == alert);
    CHECK(got[1] == s2);
  }
  SUBCASE("all emergencies: oldest dropped") {
    srv.set_slot_capacity(1);
    auto a1 = encoded_alert(1);
    auto a2 = encoded_alert(2);
    srv.broker_put("r", a1);
    srv.broker_put("r", a2);
    auto got = srv.broker_fetch("r");
    REQUIRE(got.size() == 1);
    CHECK(got[0] == a2);
  }
}
