#include "lunasim/mcp/grid.hpp"

#include <queue>
#include <set>

namespace lunasim::mcp {

sim::json Grid::to_json() const {
  sim::json blocked_cells = sim::json::array();
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (blocked[index({x, y})]) blocked_cells.push_back({x, y});
  return {{"width", width},
          {"height", height},
          {"quality", quality},
          {"blocked", std::move(blocked_cells)}};
}

Grid Grid::parse(const sim::json& j) {
  Grid g;
  g.width = j.at("width").get<int>();
  g.height = j.at("height").get<int>();
  if (g.width <= 0 || g.height <= 0)
    throw std::invalid_argument("grid dimensions must be positive");
  g.quality = j.at("quality").get<std::vector<double>>();
  if (g.quality.size() != static_cast<std::size_t>(g.width) * g.height)
    throw std::invalid_argument("grid quality array has wrong length");
  for (double q : g.quality)
    if (!(q >= 0.0 && q <= 1.0))
      throw std::invalid_argument("grid quality outside [0, 1]");
  g.blocked.assign(g.quality.size(), 0);
  if (j.contains("blocked")) {
    for (const auto& cell : j.at("blocked")) {
      Cell c{cell.at(0).get<int>(), cell.at(1).get<int>()};
      if (!g.in_bounds(c))
        throw std::invalid_argument("blocked cell outside the grid");
      g.blocked[g.index(c)] = 1;
    }
  }
  return g;
}

PlanResult plan_locomotion(const Grid& grid, Cell start, Cell goal,
                           double wireless_weight) {
  if (!grid.traversable(start) || !grid.traversable(goal))
    throw NoPath("start or goal is not traversable");
  if (wireless_weight < 0.0)
    throw std::invalid_argument("wireless_weight must be >= 0");

  auto cell_cost = [&](Cell c) {
    return 1.0 + wireless_weight * (1.0 - grid.quality_at(c));
  };

  // Dijkstra over the composite order (cost, path). Appending the same cell
  // to two non-prefix paths preserves their lexicographic order, so the
  // first settle of a cell carries both the minimal cost and, within that
  // cost, the lexicographically smallest path.
  using Label = std::pair<double, std::vector<Cell>>;
  std::priority_queue<Label, std::vector<Label>, std::greater<>> pq;
  std::set<Cell> settled;
  pq.push({cell_cost(start), {start}});

  while (!pq.empty()) {
    auto [cost, path] = pq.top();
    pq.pop();
    Cell at = path.back();
    if (settled.count(at)) continue;
    settled.insert(at);
    if (at == goal) return {std::move(path), cost};

    for (Cell next : {Cell{at.x - 1, at.y}, Cell{at.x, at.y - 1},
                      Cell{at.x, at.y + 1}, Cell{at.x + 1, at.y}}) {
      if (!grid.traversable(next) || settled.count(next)) continue;
      std::vector<Cell> extended = path;
      extended.push_back(next);
      pq.push({cost + cell_cost(next), std::move(extended)});
    }
  }
  throw NoPath("goal unreachable from start");
}

}  // namespace lunasim::mcp
