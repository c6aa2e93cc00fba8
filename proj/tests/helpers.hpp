#pragma once

// Test-local reference implementations. These deliberately do not reuse the
// library's planner/frontier/morphology code: they are the independent
// oracles the library is checked against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "explore/geometry.hpp"
#include "explore/mapping.hpp"
#include "explore/rng.hpp"
#include "explore/world.hpp"

namespace testref {

using explore::CellCoord;

// Plain queue BFS over an arbitrary passability predicate on a bounded
// window. Returns steps from start, -1 unreachable.
inline std::vector<int> bfs_field(int min_x, int min_y, int w, int h,
                                  const std::function<bool(CellCoord)>& open,
                                  CellCoord start) {
  std::vector<int> dist(static_cast<size_t>(w) * h, -1);
  const auto idx = [&](CellCoord c) {
    return static_cast<size_t>(c.y - min_y) * w + (c.x - min_x);
  };
  const auto inside = [&](CellCoord c) {
    return c.x >= min_x && c.x < min_x + w && c.y >= min_y && c.y < min_y + h;
  };
  if (!inside(start) || !open(start)) return dist;
  std::deque<CellCoord> q;
  dist[idx(start)] = 0;
  q.push_back(start);
  while (!q.empty()) {
    const CellCoord c = q.front();
    q.pop_front();
    const int d = dist[idx(c)];
    const CellCoord nbs[4] = {
        {c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
    for (const CellCoord& n : nbs) {
      if (!inside(n) || !open(n)) continue;
      if (dist[idx(n)] >= 0) continue;
      dist[idx(n)] = d + 1;
      q.push_back(n);
    }
  }
  return dist;
}

// BFS steps between two cells of an environment; -1 unreachable.
inline int env_bfs_steps(const explore::world::GridEnvironment& env,
                         CellCoord a, CellCoord b) {
  const auto dist = bfs_field(
      0, 0, env.width(), env.height(),
      [&](CellCoord c) { return env.free(c); }, a);
  if (!env.in_bounds(b)) return -1;
  return dist[static_cast<size_t>(b.y) * env.width() + b.x];
}

// Occupancy-map fixture builder. '#' obstacle, '.' free, anything else
// unexplored; rows listed top row first (same convention as the ascii
// environment builder, so fixtures read the right way up).
inline explore::mapping::OccupancyMap map_from_ascii(
    const std::vector<std::string>& rows, double bin = 0.25) {
  explore::mapping::OccupancyMap map(bin);
  const int h = static_cast<int>(rows.size());
  for (int r = 0; r < h; ++r) {
    for (int x = 0; x < static_cast<int>(rows[r].size()); ++x) {
      const char ch = rows[r][x];
      const CellCoord c{x, h - 1 - r};
      if (ch == '#') map.apply(c, explore::mapping::CellState::Obstacle);
      if (ch == '.') map.apply(c, explore::mapping::CellState::Free);
    }
  }
  return map;
}

// 3x3 morphological close (dilate then erode) of a blocked set, evaluated on
// a window. Cells outside the window count as not blocked.
inline std::set<std::pair<int, int>> close3x3(
    const std::set<std::pair<int, int>>& blocked, int min_x, int min_y, int w,
    int h) {
  std::set<std::pair<int, int>> dilated;
  for (const auto& [x, y] : blocked)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) dilated.insert({x + dx, y + dy});
  std::set<std::pair<int, int>> out;
  for (int y = min_y; y < min_y + h; ++y) {
    for (int x = min_x; x < min_x + w; ++x) {
      bool all = true;
      for (int dy = -1; dy <= 1 && all; ++dy)
        for (int dx = -1; dx <= 1 && all; ++dx)
          if (!dilated.count({x + dx, y + dy})) all = false;
      if (all) out.insert({x, y});
    }
  }
  return out;
}

// Frontier predicate straight from its definition: a Free cell 4-adjacent to
// at least one Unexplored cell, with off-map reads unexplored.
inline bool frontier_pred(const explore::mapping::OccupancyMap& map,
                          CellCoord c) {
  using explore::mapping::CellState;
  if (map.state(c) != CellState::Free) return false;
  const CellCoord nbs[4] = {
      {c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
  for (const CellCoord& n : nbs)
    if (map.state(n) == CellState::Unexplored) return true;
  return false;
}

// Exhaustive frontier enumeration over the map bounds.
inline std::set<std::pair<int, int>> frontier_set(
    const explore::mapping::OccupancyMap& map) {
  std::set<std::pair<int, int>> out;
  map.for_each([&](CellCoord c, explore::mapping::CellState, uint32_t) {
    if (frontier_pred(map, c)) out.insert({c.x, c.y});
  });
  return out;
}

// 8-connected components of a cell set, each sorted, components ordered by
// first cell. Independent grouping oracle.
inline std::vector<std::vector<CellCoord>> components8(
    const std::set<std::pair<int, int>>& cells) {
  std::set<std::pair<int, int>> left = cells;
  std::vector<std::vector<CellCoord>> comps;
  while (!left.empty()) {
    std::deque<std::pair<int, int>> q{*left.begin()};
    left.erase(left.begin());
    std::vector<CellCoord> comp;
    while (!q.empty()) {
      const auto [x, y] = q.front();
      q.pop_front();
      comp.push_back({x, y});
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const auto it = left.find({x + dx, y + dy});
          if (it == left.end()) continue;
          q.push_back(*it);
          left.erase(it);
        }
      }
    }
    std::sort(comp.begin(), comp.end(),
              [](CellCoord a, CellCoord b) { return a < b; });
    comps.push_back(std::move(comp));
  }
  std::sort(comps.begin(), comps.end(),
            [](const auto& a, const auto& b) { return a[0] < b[0]; });
  return comps;
}

// Random occupancy map over a w x h box with given state odds.
inline explore::mapping::OccupancyMap random_map(explore::Rng& rng, int w,
                                                 int h) {
  using explore::mapping::CellState;
  explore::mapping::OccupancyMap map(0.25);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = rng.uniform();
      if (u < 0.25) continue;  // unexplored
      map.apply({x, y},
                u < 0.85 ? CellState::Free : CellState::Obstacle);
    }
  }
  return map;
}

inline bool near(double a, double b, double tol) {
  return std::abs(a - b) <= tol;
}

}  // namespace testref
