#pragma once

#include <compare>
#include <stdexcept>
#include <vector>

#include "lunasim/sim/trace.hpp"

namespace lunasim::mcp {

struct NoPath : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Cell {
  int x{0};
  int y{0};
  constexpr auto operator<=>(const Cell&) const = default;
};

// Rectangular 4-connected grid; each open cell carries a predicted wireless
// quality in [0, 1].
struct Grid {
  int width{0};
  int height{0};
  std::vector<double> quality;         // row-major, size width * height
  std::vector<std::uint8_t> blocked;   // row-major bools

  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height;
  }
  bool traversable(Cell c) const {
    return in_bounds(c) && !blocked[index(c)];
  }
  double quality_at(Cell c) const { return quality[index(c)]; }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y) * width + c.x;
  }

  sim::json to_json() const;
  static Grid parse(const sim::json& j);
};

struct PlanResult {
  std::vector<Cell> path;  // start through goal inclusive
  double cost{0.0};
};

// Minimizes the sum over path cells (start and goal included) of
// 1 + wireless_weight * (1 - quality). Among equal-cost paths the one whose
// cell sequence is lexicographically smallest under (x, then y) wins.
PlanResult plan_locomotion(const Grid& grid, Cell start, Cell goal,
                           double wireless_weight);

}  // namespace lunasim::mcp
