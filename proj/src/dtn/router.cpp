#include "lunasim/dtn/router.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>

namespace lunasim::dtn {

namespace {

std::uint64_t tx_micros(std::uint64_t size_bytes, std::uint64_t bw_bps) {
  std::uint64_t bits = size_bytes * 8;
  if (bits == 0) return 0;
  return (bits * 1'000'000 + bw_bps - 1) / bw_bps;
}

}  // namespace

std::optional<Journey> Router::best_journey(const std::string& src,
                                            const std::string& dst,
                                            std::uint64_t size_bytes,
                                            sim::SimTime t0,
                                            sim::SimTime deadline) const {
  if (src == dst) return Journey{{}, t0};
  if (!env_.has_node(src) || !env_.has_node(dst)) return std::nullopt;

  // Dijkstra on (arrival, node); the name in the key makes pops and thus
  // chosen journeys deterministic.
  using State = std::pair<sim::SimTime, std::string>;
  std::priority_queue<State, std::vector<State>, std::greater<>> pq;
  std::map<std::string, sim::SimTime> best;
  std::map<std::string, Journey::Hop> parent;

  best[src] = t0;
  pq.push({t0, src});
  while (!pq.empty()) {
    auto [at, node] = pq.top();
    pq.pop();
    if (best.count(node) && at > best[node]) continue;
    if (node == dst) break;

    for (const std::string& nbr : env_.neighbors(node)) {
      auto link = env_.link_at(node, nbr, at);
      std::uint64_t tx = tx_micros(size_bytes, link.bandwidth_bps);
      // Windows where the whole transmission fits before the window closes.
      for (const auto& w : env_.up_intervals(node, nbr, at, deadline)) {
        sim::SimTime depart = w.start > at ? w.start : at;
        sim::SimTime sent = depart + sim::micros(tx);
        if (sent > w.end) continue;  // does not fit this window
        sim::SimTime arrive = sent + link.one_way_delay;
        // Arrivals only grow across later windows, so the first fit decides.
        // A copy reaching a crashed receiver is lost, hence the halt check.
        if (arrive <= deadline && !env_.is_halted(nbr, arrive)) {
          auto it = best.find(nbr);
          if (it == best.end() || arrive < it->second) {
            best[nbr] = arrive;
            parent[nbr] = Journey::Hop{node, nbr, depart, arrive};
            pq.push({arrive, nbr});
          }
        }
        break;
      }
    }
  }

  auto it = best.find(dst);
  if (it == best.end()) return std::nullopt;
  Journey j;
  j.arrival = it->second;
  for (std::string cur = dst; cur != src;) {
    const auto& hop = parent.at(cur);
    j.hops.push_back(hop);
    cur = hop.from;
  }
  std::reverse(j.hops.begin(), j.hops.end());
  return j;
}

}  // namespace lunasim::dtn
