#include "explore/planner.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <queue>

namespace explore::planner {

namespace {
constexpr int kNeighbors4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
}

std::optional<std::vector<CellCoord>> astar_path(const TraversabilityGrid& grid,
                                                 CellCoord start, CellCoord goal) {
  if (!grid.open_at(start) || !grid.open_at(goal)) return std::nullopt;
  if (start == goal) return std::vector<CellCoord>{start};

  const size_t n = grid.open.size();
  std::vector<int32_t> g(n, -1);
  std::vector<int32_t> parent(n, -1);
  auto h = [&](CellCoord c) {
    return std::abs(c.x - goal.x) + std::abs(c.y - goal.y);
  };
  // Priority: f, then g, then cell index; fully deterministic.
  using Node = std::tuple<int32_t, int32_t, size_t>;
  std::priority_queue<Node, std::vector<Node>, std::greater<>> pq;
  g[grid.idx(start)] = 0;
  pq.push({h(start), 0, grid.idx(start)});
  while (!pq.empty()) {
    const auto [f, gc, i] = pq.top();
    pq.pop();
    if (g[i] != gc) continue;  // stale entry
    const CellCoord c = grid.cell_at(i);
    if (c == goal) break;
    for (auto [dx, dy] : kNeighbors4) {
      const CellCoord nb{c.x + dx, c.y + dy};
      if (!grid.open_at(nb)) continue;
      const size_t ni = grid.idx(nb);
      const int32_t ng = gc + 1;
      if (g[ni] < 0 || ng < g[ni]) {
        g[ni] = ng;
        parent[ni] = static_cast<int32_t>(i);
        pq.push({ng + h(nb), ng, ni});
      }
    }
  }
  if (g[grid.idx(goal)] < 0) return std::nullopt;
  std::vector<CellCoord> path;
  size_t cur = grid.idx(goal);
  while (static_cast<int32_t>(cur) != -1 && !(grid.cell_at(cur) == start)) {
    path.push_back(grid.cell_at(cur));
    cur = static_cast<size_t>(parent[cur]);
  }
  path.push_back(start);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<int> bfs_costs(const TraversabilityGrid& grid, CellCoord src) {
  std::vector<int> cost(grid.open.size(), -1);
  if (!grid.open_at(src)) return cost;
  std::deque<CellCoord> q{src};
  cost[grid.idx(src)] = 0;
  while (!q.empty()) {
    const CellCoord c = q.front();
    q.pop_front();
    const int base = cost[grid.idx(c)];
    for (auto [dx, dy] : kNeighbors4) {
      const CellCoord nb{c.x + dx, c.y + dy};
      if (!grid.open_at(nb) || cost[grid.idx(nb)] >= 0) continue;
      cost[grid.idx(nb)] = base + 1;
      q.push_back(nb);
    }
  }
  return cost;
}

}  // namespace explore::planner
