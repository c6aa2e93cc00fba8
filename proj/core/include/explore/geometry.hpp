#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>

namespace explore {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

// Row-major 3x3, just enough for camera intrinsics and rigid transforms.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return {}; }
  double at(int r, int c) const { return m[r * 3 + c]; }
  double& at(int r, int c) { return m[r * 3 + c]; }

  Vec3 apply(Vec3 v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }

  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  // Adjugate inverse; requires a non-singular matrix.
  Mat3 inverse() const {
    const double d = det();
    Mat3 r;
    r.m = {(m[4] * m[8] - m[5] * m[7]) / d, (m[2] * m[7] - m[1] * m[8]) / d,
           (m[1] * m[5] - m[2] * m[4]) / d, (m[5] * m[6] - m[3] * m[8]) / d,
           (m[0] * m[8] - m[2] * m[6]) / d, (m[2] * m[3] - m[0] * m[5]) / d,
           (m[3] * m[7] - m[4] * m[6]) / d, (m[1] * m[6] - m[0] * m[7]) / d,
           (m[0] * m[4] - m[1] * m[3]) / d};
    return r;
  }
};

struct CellCoord {
  int x = 0;
  int y = 0;

  bool operator==(const CellCoord&) const = default;
  // Row-major ordering used as the deterministic tie-break everywhere.
  bool operator<(const CellCoord& o) const {
    return y != o.y ? y < o.y : x < o.x;
  }
};

inline uint64_t cell_key(CellCoord c) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(c.x)) << 32) |
         static_cast<uint64_t>(static_cast<uint32_t>(c.y));
}

struct CellKeyHash {
  size_t operator()(uint64_t k) const {
    k ^= k >> 33;
    k *= 0xff51afd7ed558ccdULL;
    k ^= k >> 33;
    return static_cast<size_t>(k);
  }
};

inline double wrap_angle(double a) {
  a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
  if (a < 0) a += 2.0 * std::numbers::pi;
  return a - std::numbers::pi;
}

inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Supercover grid traversal. Cells are unit squares centered on integer
// coordinates: cell (i, j) covers [i-0.5, i+0.5) x [j-0.5, j+0.5). Every cell
// the segment touches is visited, including both side cells when the segment
// passes exactly through a corner (the two sides are visited before the
// diagonal continuation, which is what makes occlusion leak-free).
// The visitor returns false to stop the walk.
inline void supercover_walk(Vec2 from, Vec2 dir, double length,
                            const std::function<bool(CellCoord)>& visit) {
  int ix = static_cast<int>(std::lround(from.x));
  int iy = static_cast<int>(std::lround(from.y));
  if (!visit({ix, iy})) return;
  if (length <= 0.0) return;

  const double inf = std::numeric_limits<double>::infinity();
  const int sx = dir.x > 0 ? 1 : (dir.x < 0 ? -1 : 0);
  const int sy = dir.y > 0 ? 1 : (dir.y < 0 ? -1 : 0);
  const double tdx = sx != 0 ? 1.0 / std::abs(dir.x) : inf;
  const double tdy = sy != 0 ? 1.0 / std::abs(dir.y) : inf;

  // Distance along the ray to the first x / y cell boundary.
  double tmx = inf, tmy = inf;
  if (sx != 0) tmx = ((ix + 0.5 * sx) - from.x) / dir.x;
  if (sy != 0) tmy = ((iy + 0.5 * sy) - from.y) / dir.y;

  constexpr double kCornerEps = 1e-9;
  while (true) {
    const double tnext = std::min(tmx, tmy);
    if (tnext > length) break;
    if (std::abs(tmx - tmy) < kCornerEps) {
      // Corner crossing: touch both side cells, then step diagonally.
      if (!visit({ix + sx, iy})) return;
      if (!visit({ix, iy + sy})) return;
      ix += sx;
      iy += sy;
      tmx += tdx;
      tmy += tdy;
    } else if (tmx < tmy) {
      ix += sx;
      tmx += tdx;
    } else {
      iy += sy;
      tmy += tdy;
    }
    if (!visit({ix, iy})) return;
  }
}

inline void supercover_segment(Vec2 a, Vec2 b,
                               const std::function<bool(CellCoord)>& visit) {
  const Vec2 d = b - a;
  const double len = d.norm();
  if (len <= 0.0) {
    visit({static_cast<int>(std::lround(a.x)), static_cast<int>(std::lround(a.y))});
    return;
  }
  supercover_walk(a, {d.x / len, d.y / len}, len, visit);
}

}  // namespace explore
