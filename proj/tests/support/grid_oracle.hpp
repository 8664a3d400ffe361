#pragma once

#include <optional>
#include <vector>

#include "lunasim/mcp/grid.hpp"

namespace lunasim::test {

struct GridOracleResult {
  std::vector<mcp::Cell> path;
  double cost{0.0};
};

// Exhaustive search over all simple paths, pruned with the admissible bound
// cost-so-far + manhattan(at, goal) (every remaining cell costs at least 1).
// The prune is strict so equal-cost candidates survive for the lex
// tie-break. nullopt when no path exists.
std::optional<GridOracleResult> brute_force_plan(const mcp::Grid& grid,
                                                 mcp::Cell start,
                                                 mcp::Cell goal,
                                                 double wireless_weight);

}  // namespace lunasim::test
