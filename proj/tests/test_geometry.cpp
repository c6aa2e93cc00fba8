#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "explore/geometry.hpp"
#include "explore/planner.hpp"
#include "explore/rng.hpp"
#include "helpers.hpp"

using namespace explore;

namespace {

// Exact segment/cell intersection: cell (i,j) covers the closed square
// [i-.5, i+.5] x [j-.5, j+.5]. Clips the parametric segment against the slab
// bounds. The independent oracle for supercover traversal.
bool segment_touches_cell(Vec2 a, Vec2 b, CellCoord c) {
  const double eps = 1e-12;
  double t0 = 0.0, t1 = 1.0;
  const double d[2] = {b.x - a.x, b.y - a.y};
  const double p[2] = {a.x, a.y};
  const double lo[2] = {c.x - 0.5, c.y - 0.5};
  const double hi[2] = {c.x + 0.5, c.y + 0.5};
  for (int k = 0; k < 2; ++k) {
    if (std::abs(d[k]) < eps) {
      if (p[k] < lo[k] - eps || p[k] > hi[k] + eps) return false;
      continue;
    }
    double ta = (lo[k] - p[k]) / d[k];
    double tb = (hi[k] - p[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t0 <= t1 + eps;
}

std::set<std::pair<int, int>> walk_cells(Vec2 a, Vec2 b) {
  std::set<std::pair<int, int>> out;
  supercover_segment(a, b, [&](CellCoord c) {
    out.insert({c.x, c.y});
    return true;
  });
  return out;
}

planner::TraversabilityGrid random_grid(Rng& rng, int max_side) {
  planner::TraversabilityGrid g;
  g.min_x = rng.uniform_int(-3, 3);
  g.min_y = rng.uniform_int(-3, 3);
  g.width = rng.uniform_int(2, max_side);
  g.height = rng.uniform_int(2, max_side);
  g.open.resize(static_cast<size_t>(g.width) * g.height);
  for (auto& v : g.open) v = rng.uniform() < 0.65 ? 1 : 0;
  return g;
}

}  // namespace

TEST_CASE("vec and mat basics") {
  CHECK(testref::near((Vec2{3, 4}).norm(), 5.0, 1e-12));
  const Vec2 r = rotate({1, 0}, std::numbers::pi / 2);
  CHECK(testref::near(r.x, 0.0, 1e-12));
  CHECK(testref::near(r.y, 1.0, 1e-12));

  // inverse against the identity, randomized
  Rng rng(11);
  int done = 0;
  while (done < 100) {
    Mat3 m;
    for (int i = 0; i < 9; ++i) m.m[i] = rng.uniform(-2.0, 2.0);
    if (std::abs(m.det()) < 0.1) continue;
    const Mat3 inv = m.inverse();
    for (int r2 = 0; r2 < 3; ++r2) {
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += m.at(r2, k) * inv.at(k, c);
        CHECK(testref::near(s, r2 == c ? 1.0 : 0.0, 1e-9));
      }
    }
    ++done;
  }
}

TEST_CASE("wrap_angle lands in [-pi, pi)") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(-50.0, 50.0);
    const double w = wrap_angle(a);
    CHECK(w >= -std::numbers::pi);
    CHECK(w < std::numbers::pi + 1e-12);
    // same angle modulo 2*pi
    CHECK(testref::near(std::remainder(a - w, 2 * std::numbers::pi), 0.0, 1e-9));
  }
}

TEST_CASE("cell_key round-trips signed coordinates") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const CellCoord c{rng.uniform_int(-5000, 5000), rng.uniform_int(-5000, 5000)};
    const uint64_t k = cell_key(c);
    CHECK(static_cast<int32_t>(k >> 32) == c.x);
    CHECK(static_cast<int32_t>(k & 0xffffffffULL) == c.y);
  }
}

TEST_CASE("cell ordering is row-major") {
  std::vector<CellCoord> v{{2, 1}, {0, 2}, {1, 1}, {-1, 2}, {5, 0}};
  std::sort(v.begin(), v.end());
  const std::vector<CellCoord> want{{5, 0}, {1, 1}, {2, 1}, {-1, 2}, {0, 2}};
  CHECK(v == want);
}

TEST_CASE("supercover visits both side cells at an exact corner") {
  const auto cells = walk_cells({0, 0}, {2, 2});
  // diagonal through two corners: side pairs included at each
  const std::set<std::pair<int, int>> want{{0, 0}, {1, 0}, {0, 1}, {1, 1},
                                           {2, 1}, {1, 2}, {2, 2}};
  CHECK(cells == want);
}

TEST_CASE("supercover equals exact segment/cell intersection") {
  Rng rng(23);
  for (int i = 0; i < 200; ++i) {
    // keep endpoints off half-integer grid lines so the exact-corner
    // convention (both side cells) stays a separate, fixed fixture
    const Vec2 a{rng.uniform(-6.0, 6.0) * 0.9991, rng.uniform(-6.0, 6.0) * 0.9991};
    const Vec2 b{rng.uniform(-6.0, 6.0) * 0.9991, rng.uniform(-6.0, 6.0) * 0.9991};
    const auto got = walk_cells(a, b);
    std::set<std::pair<int, int>> want;
    const int lo_x = static_cast<int>(std::floor(std::min(a.x, b.x))) - 1;
    const int hi_x = static_cast<int>(std::ceil(std::max(a.x, b.x))) + 1;
    const int lo_y = static_cast<int>(std::floor(std::min(a.y, b.y))) - 1;
    const int hi_y = static_cast<int>(std::ceil(std::max(a.y, b.y))) + 1;
    for (int y = lo_y; y <= hi_y; ++y)
      for (int x = lo_x; x <= hi_x; ++x)
        if (segment_touches_cell(a, b, {x, y})) want.insert({x, y});
    CHECK(got == want);
  }
}

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

  Rng s1 = Rng::stream(1, 10), s2 = Rng::stream(1, 11);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (s1.next() == s2.next()) ++same;
  CHECK(same == 0);
}

TEST_CASE("rng uniform_int is inclusive and in range") {
  Rng rng(3);
  bool lo_seen = false, hi_seen = false;
  for (int i = 0; i < 2000; ++i) {
    const int v = rng.uniform_int(-2, 3);
    CHECK(v >= -2);
    CHECK(v <= 3);
    lo_seen |= v == -2;
    hi_seen |= v == 3;
  }
  CHECK(lo_seen);
  CHECK(hi_seen);
}

TEST_CASE("rng truncated_normal honors the bound") {
  Rng rng(9);
  for (int i = 0; i < 10000; ++i)
    CHECK(std::abs(rng.truncated_normal(0.05, 0.05)) <= 0.05);
  CHECK(rng.truncated_normal(0.0, 1.0) == 0.0);
}

TEST_CASE("rng normal moments") {
  Rng rng(17);
  double sum = 0.0, sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

// --- planner vs. reference BFS ---

TEST_CASE("astar equals reference BFS on random grids") {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = random_grid(rng, 32);
    const CellCoord s{g.min_x + rng.uniform_int(0, g.width - 1),
                      g.min_y + rng.uniform_int(0, g.height - 1)};
    const CellCoord t{g.min_x + rng.uniform_int(0, g.width - 1),
                      g.min_y + rng.uniform_int(0, g.height - 1)};
    const auto dist = testref::bfs_field(
        g.min_x, g.min_y, g.width, g.height,
        [&](CellCoord c) { return g.open_at(c); }, s);
    const int want = (g.open_at(s) && g.open_at(t)) ? dist[g.idx(t)] : -1;

    const auto path = planner::astar_path(g, s, t);
    if (want < 0) {
      CHECK(!path.has_value());
      continue;
    }
    REQUIRE(path.has_value());
    CHECK(static_cast<int>(path->size()) - 1 == want);
    // path validity: endpoints, adjacency, open cells
    CHECK(path->front() == s);
    CHECK(path->back() == t);
    for (size_t i = 0; i < path->size(); ++i) {
      CHECK(g.open_at((*path)[i]));
      if (i > 0) {
        const int dx = std::abs((*path)[i].x - (*path)[i - 1].x);
        const int dy = std::abs((*path)[i].y - (*path)[i - 1].y);
        CHECK(dx + dy == 1);
      }
    }
  }
}

TEST_CASE("astar is deterministic") {
  Rng rng(55);
  const auto g = random_grid(rng, 24);
  const CellCoord s{g.min_x, g.min_y};
  const CellCoord t{g.min_x + g.width - 1, g.min_y + g.height - 1};
  const auto p1 = planner::astar_path(g, s, t);
  const auto p2 = planner::astar_path(g, s, t);
  CHECK(p1 == p2);
}

TEST_CASE("bfs_costs equals reference BFS field") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = random_grid(rng, 20);
    const CellCoord s{g.min_x + rng.uniform_int(0, g.width - 1),
                      g.min_y + rng.uniform_int(0, g.height - 1)};
    const auto got = planner::bfs_costs(g, s);
    const auto want = testref::bfs_field(
        g.min_x, g.min_y, g.width, g.height,
        [&](CellCoord c) { return g.open_at(c); }, s);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
  }
}
