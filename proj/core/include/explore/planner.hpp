#pragma once

#include <optional>
#include <vector>

#include "explore/geometry.hpp"

namespace explore::planner {

// Dense traversability window over map coordinates.
struct TraversabilityGrid {
  int min_x = 0, min_y = 0, width = 0, height = 0;
  std::vector<uint8_t> open;

  bool contains(CellCoord c) const {
    return c.x >= min_x && c.x < min_x + width && c.y >= min_y &&
           c.y < min_y + height;
  }
  bool open_at(CellCoord c) const {
    return contains(c) && open[idx(c)] != 0;
  }
  size_t idx(CellCoord c) const {
    return static_cast<size_t>(c.y - min_y) * width + (c.x - min_x);
  }
  CellCoord cell_at(size_t i) const {
    return {min_x + static_cast<int>(i % width),
            min_y + static_cast<int>(i / width)};
  }
};

// 4-connected unit-cost A* with Manhattan heuristic; returns start..goal
// inclusive, or nullopt when start/goal is blocked or unreachable. Path
// lengths are optimal; ties resolve deterministically by cell order.
std::optional<std::vector<CellCoord>> astar_path(const TraversabilityGrid& grid,
                                                 CellCoord start, CellCoord goal);

// BFS cost field (in steps) from src; -1 where unreachable.
std::vector<int> bfs_costs(const TraversabilityGrid& grid, CellCoord src);

}  // namespace explore::planner
