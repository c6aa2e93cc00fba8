#include "explore/world.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace explore::world {

using nlohmann::json;

const char* to_string(Action a) {
  switch (a) {
    case Action::Forward: return "forward";
    case Action::TurnLeft: return "turn-left";
    case Action::TurnRight: return "turn-right";
    case Action::Stop: return "stop";
  }
  return "?";
}

const char* to_string(Preset p) {
  return p == Preset::SmallCluttered ? "small-cluttered" : "large-open";
}

std::optional<Preset> preset_from_string(const std::string& s) {
  if (s == "small-cluttered") return Preset::SmallCluttered;
  if (s == "large-open") return Preset::LargeOpen;
  return std::nullopt;
}

GridEnvironment::GridEnvironment(int width, int height, double cell_size,
                                 Preset preset, uint64_t seed)
    : width_(width),
      height_(height),
      cell_size_(cell_size),
      preset_(preset),
      seed_(seed),
      occupancy_(static_cast<size_t>(width) * height, 0),
      signatures_(static_cast<size_t>(width) * height) {
  if (width < 3 || height < 3) {
    throw std::invalid_argument("environment must be at least 3x3");
  }
  if (cell_size <= 0.0) {
    throw std::invalid_argument("cell_size must be positive");
  }
  Signature def{};
  def.fill(0.5);
  for (auto& s : signatures_) s = def;
}

std::vector<CellCoord> GridEnvironment::free_cells() const {
  std::vector<CellCoord> out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (occupancy_[index({x, y})] == 0) out.push_back({x, y});
    }
  }
  return out;
}

size_t GridEnvironment::free_cell_count() const {
  size_t n = 0;
  for (auto v : occupancy_) n += (v == 0);
  return n;
}

namespace {

constexpr int kNeighbors4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

// Keeps only the largest 4-connected free component; returns its size.
size_t keep_largest_free_component(GridEnvironment& env) {
  const int w = env.width(), h = env.height();
  std::vector<int> comp(static_cast<size_t>(w) * h, -1);
  int best = -1;
  size_t best_size = 0;
  int next = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!env.free({x, y}) || comp[env.index({x, y})] >= 0) continue;
      size_t size = 0;
      std::deque<CellCoord> q{{x, y}};
      comp[env.index({x, y})] = next;
      while (!q.empty()) {
        CellCoord c = q.front();
        q.pop_front();
        ++size;
        for (auto [dx, dy] : kNeighbors4) {
          CellCoord n{c.x + dx, c.y + dy};
          if (env.free(n) && comp[env.index(n)] < 0) {
            comp[env.index(n)] = next;
            q.push_back(n);
          }
        }
      }
      if (size > best_size) {
        best_size = size;
        best = next;
      }
      ++next;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (env.free({x, y}) && comp[env.index({x, y})] != best) {
        env.set_obstacle({x, y}, true);
      }
    }
  }
  return best_size;
}

Signature random_prototype(Rng& rng) {
  Signature s;
  for (auto& v : s) v = rng.uniform();
  return s;
}

Signature jitter(const Signature& proto, double noise, Rng& rng) {
  Signature s;
  for (int i = 0; i < kSignatureDim; ++i) {
    s[i] = std::clamp(proto[i] + rng.normal(0.0, noise), 0.0, 1.0);
  }
  return s;
}

// Labels every cell with the region of the nearest labeled seed cell
// (multi-source BFS over the full grid, walls included).
std::vector<int> flood_regions(int w, int h, const std::vector<int>& seed_labels) {
  std::vector<int> label = seed_labels;
  std::deque<CellCoord> q;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (label[static_cast<size_t>(y) * w + x] >= 0) q.push_back({x, y});
    }
  }
  while (!q.empty()) {
    CellCoord c = q.front();
    q.pop_front();
    const int l = label[static_cast<size_t>(c.y) * w + c.x];
    for (auto [dx, dy] : kNeighbors4) {
      CellCoord n{c.x + dx, c.y + dy};
      if (n.x < 0 || n.x >= w || n.y < 0 || n.y >= h) continue;
      auto& ln = label[static_cast<size_t>(n.y) * w + n.x];
      if (ln < 0) {
        ln = l;
        q.push_back(n);
      }
    }
  }
  return label;
}

int bearing_heading(CellCoord from, CellCoord to) {
  const double a = std::atan2(to.y - from.y, to.x - from.x);
  int h = static_cast<int>(std::lround(a / (std::numbers::pi / 6.0)));
  return ((h % kHeadings) + kHeadings) % kHeadings;
}

void place_objects_and_landmarks(GridEnvironment& env, Rng& rng,
                                 int object_count,
                                 const std::vector<std::pair<CellCoord, int>>& landmark_spots) {
  auto free = env.free_cells();
  std::vector<ObjectInstance> objects;
  std::set<std::pair<int, int>> used;
  int id = 0;
  int attempts = 0;
  while (static_cast<int>(objects.size()) < object_count &&
         attempts++ < object_count * 50 && !free.empty()) {
    CellCoord c = free[rng.index(free.size())];
    if (used.insert({c.x, c.y}).second) objects.push_back({c, id++});
  }
  env.set_objects(std::move(objects));

  std::vector<Pose> landmarks;
  std::set<std::pair<int, int>> lm_used;
  for (auto& [cell, heading] : landmark_spots) {
    if (!env.free(cell)) continue;
    if (!lm_used.insert({cell.x, cell.y}).second) continue;
    landmarks.push_back({cell, heading});
  }
  env.set_landmark_views(std::move(landmarks));
}

GridEnvironment generate_small_cluttered(uint64_t seed, const GenerationParams& p) {
  const int w = p.width > 0 ? p.width : 24;
  const int h = p.height > 0 ? p.height : 24;
  Rng rng(mix_key(seed, hash_string("small-cluttered")));
  GridEnvironment env(w, h, p.cell_size, Preset::SmallCluttered, seed);

  for (int x = 0; x < w; ++x) {
    env.set_obstacle({x, 0}, true);
    env.set_obstacle({x, h - 1}, true);
  }
  for (int y = 0; y < h; ++y) {
    env.set_obstacle({0, y}, true);
    env.set_obstacle({w - 1, y}, true);
  }

  // Scatter clutter (singles plus occasional dominoes) to the target density.
  const int interior = (w - 2) * (h - 2);
  const int target = static_cast<int>(std::ceil(interior * p.clutter_fraction));
  int placed = 0;
  int attempts = 0;
  while (placed < target && attempts++ < interior * 20) {
    CellCoord c{rng.uniform_int(1, w - 2), rng.uniform_int(1, h - 2)};
    if (env.obstacle(c)) continue;
    env.set_obstacle(c, true);
    ++placed;
    if (placed < target && rng.uniform() < 0.3) {
      const auto d = cardinal_delta(rng.uniform_int(0, 3));
      CellCoord c2{c.x + d.x, c.y + d.y};
      if (c2.x >= 1 && c2.x <= w - 2 && c2.y >= 1 && c2.y <= h - 2 &&
          !env.obstacle(c2)) {
        env.set_obstacle(c2, true);
        ++placed;
      }
    }
  }
  keep_largest_free_component(env);

  // Appearance regions: Voronoi patches, a few sharing a prototype so that
  // landmark mining has both unique and repeated visuals to work with.
  const int regions = std::max(3, p.signature_regions);
  const int unique = std::max(2, regions * 2 / 3);
  std::vector<Signature> protos;
  std::vector<int> proto_of_region(regions);
  for (int i = 0; i < unique; ++i) protos.push_back(random_prototype(rng));
  for (int r = 0; r < regions; ++r) {
    proto_of_region[r] = r < unique ? r : rng.uniform_int(0, unique - 1);
  }
  std::vector<CellCoord> seeds;
  std::vector<int> seed_labels(static_cast<size_t>(w) * h, -1);
  for (int r = 0; r < regions; ++r) {
    CellCoord c{rng.uniform_int(1, w - 2), rng.uniform_int(1, h - 2)};
    seeds.push_back(c);
    seed_labels[env.index(c)] = r;
  }
  auto region = flood_regions(w, h, seed_labels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int r = std::max(0, region[env.index({x, y})]);
      env.set_signature({x, y}, jitter(protos[proto_of_region[r]],
                                       p.signature_noise, rng));
    }
  }

  // Landmarks look at seeds of regions whose prototype is used exactly once.
  std::vector<int> proto_uses(unique, 0);
  for (int r = 0; r < regions; ++r) ++proto_uses[proto_of_region[r]];
  const int want_landmarks = p.landmark_count > 0 ? p.landmark_count : 6;
  std::vector<std::pair<CellCoord, int>> spots;
  for (int r = 0; r < regions && static_cast<int>(spots.size()) < want_landmarks; ++r) {
    if (proto_uses[proto_of_region[r]] != 1) continue;
    for (int tries = 0; tries < 40; ++tries) {
      CellCoord c{seeds[r].x + rng.uniform_int(-2, 2),
                  seeds[r].y + rng.uniform_int(-2, 2)};
      if (!env.free(c)) continue;
      const int heading = c == seeds[r] ? rng.uniform_int(0, kHeadings - 1)
                                        : bearing_heading(c, seeds[r]);
      spots.push_back({c, heading});
      break;
    }
  }
  place_objects_and_landmarks(env, rng,
                              p.object_count > 0 ? p.object_count : 12, spots);
  return env;
}

struct Room {
  int x0, y0, x1, y1;  // inclusive
  CellCoord center() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }
};

void carve_rect(GridEnvironment& env, int x0, int y0, int x1, int y1) {
  for (int y = std::max(1, y0); y <= std::min(env.height() - 2, y1); ++y) {
    for (int x = std::max(1, x0); x <= std::min(env.width() - 2, x1); ++x) {
      env.set_obstacle({x, y}, false);
    }
  }
}

// L-shaped corridor of the given width between two points.
void carve_corridor(GridEnvironment& env, CellCoord a, CellCoord b, int width,
                    bool x_first) {
  const int half_lo = (width - 1) / 2;
  const int half_hi = width / 2;
  auto carve_h = [&](int y, int xa, int xb) {
    carve_rect(env, std::min(xa, xb) - half_lo, y - half_lo,
               std::max(xa, xb) + half_hi, y + half_hi);
  };
  auto carve_v = [&](int x, int ya, int yb) {
    carve_rect(env, x - half_lo, std::min(ya, yb) - half_lo,
               x + half_hi, std::max(ya, yb) + half_hi);
  };
  if (x_first) {
    carve_h(a.y, a.x, b.x);
    carve_v(b.x, a.y, b.y);
  } else {
    carve_v(a.x, a.y, b.y);
    carve_h(b.y, a.x, b.x);
  }
}

GridEnvironment generate_large_open(uint64_t seed, const GenerationParams& p) {
  const int w = p.width > 0 ? p.width : 96;
  const int h = p.height > 0 ? p.height : 96;
  Rng rng(mix_key(seed, hash_string("large-open")));
  GridEnvironment env(w, h, p.cell_size, Preset::LargeOpen, seed);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) env.set_obstacle({x, y}, true);
  }

  // Rooms on a slot grid, then corridors along a slot spanning tree.
  const int slots_x = std::max(2, w / 24);
  const int slots_y = std::max(2, h / 24);
  const int slot_w = (w - 2) / slots_x;
  const int slot_h = (h - 2) / slots_y;
  std::vector<Room> rooms;
  std::vector<int> room_at_slot(static_cast<size_t>(slots_x) * slots_y, -1);
  for (int sy = 0; sy < slots_y; ++sy) {
    for (int sx = 0; sx < slots_x; ++sx) {
      const bool skip = rng.uniform() < 0.12 && rooms.size() >= 2;
      if (skip) continue;
      const int max_w = std::min(18, slot_w - 4);
      const int max_h = std::min(18, slot_h - 4);
      const int rw = rng.uniform_int(10, std::max(10, max_w));
      const int rh = rng.uniform_int(10, std::max(10, max_h));
      const int x0 = 1 + sx * slot_w + rng.uniform_int(1, std::max(1, slot_w - rw - 2));
      const int y0 = 1 + sy * slot_h + rng.uniform_int(1, std::max(1, slot_h - rh - 2));
      Room r{x0, y0, std::min(x0 + rw - 1, w - 2), std::min(y0 + rh - 1, h - 2)};
      room_at_slot[static_cast<size_t>(sy) * slots_x + sx] = static_cast<int>(rooms.size());
      rooms.push_back(r);
      carve_rect(env, r.x0, r.y0, r.x1, r.y1);
    }
  }

  // Spanning connections: each room links to the nearest earlier room; a few
  // extra adjacent-slot links add cycles. Corridor width 3-4 keeps passages
  // wide enough to survive 3x3 morphological closing.
  struct Link { int a, b; };
  std::vector<Link> links;
  for (size_t i = 1; i < rooms.size(); ++i) {
    size_t best = 0;
    double best_d = 1e18;
    for (size_t j = 0; j < i; ++j) {
      const auto ci = rooms[i].center(), cj = rooms[j].center();
      const double d = std::hypot(ci.x - cj.x, ci.y - cj.y);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    links.push_back({static_cast<int>(i), static_cast<int>(best)});
  }
  for (int sy = 0; sy < slots_y; ++sy) {
    for (int sx = 0; sx < slots_x; ++sx) {
      const int a = room_at_slot[static_cast<size_t>(sy) * slots_x + sx];
      if (a < 0) continue;
      if (sx + 1 < slots_x) {
        const int b = room_at_slot[static_cast<size_t>(sy) * slots_x + sx + 1];
        if (b >= 0 && rng.uniform() < 0.35) links.push_back({a, b});
      }
      if (sy + 1 < slots_y) {
        const int b = room_at_slot[static_cast<size_t>(sy + 1) * slots_x + sx];
        if (b >= 0 && rng.uniform() < 0.35) links.push_back({a, b});
      }
    }
  }
  for (auto& l : links) {
    carve_corridor(env, rooms[l.a].center(), rooms[l.b].center(),
                   rng.uniform() < 0.5 ? 3 : 4, rng.uniform() < 0.5);
  }

  // Sparse pillars inside large rooms, kept 2+ cells off walls so no 1-wide
  // gaps appear.
  for (auto& r : rooms) {
    if (r.x1 - r.x0 < 9 || r.y1 - r.y0 < 9) continue;
    const int pillars = rng.uniform_int(0, 2);
    for (int k = 0; k < pillars; ++k) {
      const int px = rng.uniform_int(r.x0 + 3, r.x1 - 4);
      const int py = rng.uniform_int(r.y0 + 3, r.y1 - 4);
      const int size = rng.uniform_int(1, 2);
      for (int dy = 0; dy < size; ++dy) {
        for (int dx = 0; dx < size; ++dx) {
          env.set_obstacle({px + dx, py + dy}, true);
        }
      }
    }
  }
  keep_largest_free_component(env);

  // Per-room appearance prototypes; corridors share one prototype and some
  // rooms repeat a prototype (visually ambiguous), the rest stay unique.
  const int n_rooms = static_cast<int>(rooms.size());
  std::vector<Signature> protos;
  std::vector<int> proto_of_room(n_rooms);
  const Signature corridor_proto = random_prototype(rng);
  const int shared_pool = 2;
  std::vector<Signature> shared;
  for (int i = 0; i < shared_pool; ++i) shared.push_back(random_prototype(rng));
  for (int r = 0; r < n_rooms; ++r) {
    if (rng.uniform() < 0.35) {
      proto_of_room[r] = -2 - rng.uniform_int(0, shared_pool - 1);  // shared
    } else {
      proto_of_room[r] = static_cast<int>(protos.size());
      protos.push_back(random_prototype(rng));
    }
  }
  std::vector<int> seed_labels(static_cast<size_t>(w) * h, -1);
  for (int r = 0; r < n_rooms; ++r) {
    for (int y = rooms[r].y0; y <= rooms[r].y1; ++y) {
      for (int x = rooms[r].x0; x <= rooms[r].x1; ++x) {
        if (env.in_bounds({x, y})) seed_labels[env.index({x, y})] = r;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (env.free({x, y}) && seed_labels[env.index({x, y})] < 0) {
        seed_labels[env.index({x, y})] = n_rooms;  // corridor region
      }
    }
  }
  auto region = flood_regions(w, h, seed_labels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int r = std::max(0, region[env.index({x, y})]);
      const Signature* proto;
      if (r >= n_rooms) {
        proto = &corridor_proto;
      } else if (proto_of_room[r] < 0) {
        proto = &shared[-2 - proto_of_room[r]];
      } else {
        proto = &protos[proto_of_room[r]];
      }
      env.set_signature({x, y}, jitter(*proto, p.signature_noise, rng));
    }
  }

  const int want_landmarks = p.landmark_count > 0 ? p.landmark_count : 10;
  std::vector<std::pair<CellCoord, int>> spots;
  for (int r = 0; r < n_rooms && static_cast<int>(spots.size()) < want_landmarks; ++r) {
    if (proto_of_room[r] < 0) continue;  // only visually unique rooms
    const auto center = rooms[r].center();
    for (int tries = 0; tries < 40; ++tries) {
      CellCoord c{rng.uniform_int(rooms[r].x0, rooms[r].x1),
                  rng.uniform_int(rooms[r].y0, rooms[r].y1)};
      if (!env.free(c)) continue;
      const int heading = c == center ? rng.uniform_int(0, kHeadings - 1)
                                      : bearing_heading(c, center);
      spots.push_back({c, heading});
      break;
    }
  }
  place_objects_and_landmarks(env, rng,
                              p.object_count > 0 ? p.object_count : 25, spots);
  return env;
}

}  // namespace

GridEnvironment generate_environment(uint64_t seed, Preset preset,
                                     const GenerationParams& params) {
  if (params.cell_size <= 0.0) {
    throw std::invalid_argument("cell_size must be positive");
  }
  if ((params.width != 0 && params.width < 8) ||
      (params.height != 0 && params.height < 8)) {
    throw std::invalid_argument("environment dimensions too small");
  }
  return preset == Preset::SmallCluttered
             ? generate_small_cluttered(seed, params)
             : generate_large_open(seed, params);
}

GridEnvironment environment_from_ascii(const std::vector<std::string>& rows,
                                       double cell_size) {
  if (rows.empty()) throw std::invalid_argument("empty grid");
  const int h = static_cast<int>(rows.size());
  const int w = static_cast<int>(rows[0].size());
  GridEnvironment env(w, h, cell_size, Preset::SmallCluttered, 0);
  for (int r = 0; r < h; ++r) {
    if (static_cast<int>(rows[r].size()) != w) {
      throw std::invalid_argument("ragged grid rows");
    }
    for (int x = 0; x < w; ++x) {
      env.set_obstacle({x, h - 1 - r}, rows[r][x] == '#');
    }
  }
  return env;
}

// --- Sensing ---

namespace {

// Occlusion test between cell centers. Cells that share the corner crossing
// with the target do not block it (mirror symmetry); anything touched at a
// strictly earlier crossing does. Obstacles at a corner block the diagonal
// continuation, which closes diagonal leaks.
bool segment_visible(const GridEnvironment& env, CellCoord a, CellCoord b) {
  if (a == b) return true;
  const Vec2 from{static_cast<double>(a.x), static_cast<double>(a.y)};
  const Vec2 to{static_cast<double>(b.x), static_cast<double>(b.y)};
  const Vec2 d = to - from;
  const double len = d.norm();
  const Vec2 dir{d.x / len, d.y / len};

  const double inf = std::numeric_limits<double>::infinity();
  const int sx = dir.x > 0 ? 1 : (dir.x < 0 ? -1 : 0);
  const int sy = dir.y > 0 ? 1 : (dir.y < 0 ? -1 : 0);
  const double tdx = sx != 0 ? 1.0 / std::abs(dir.x) : inf;
  const double tdy = sy != 0 ? 1.0 / std::abs(dir.y) : inf;
  double tmx = sx != 0 ? ((a.x + 0.5 * sx) - from.x) / dir.x : inf;
  double tmy = sy != 0 ? ((a.y + 0.5 * sy) - from.y) / dir.y : inf;

  int ix = a.x, iy = a.y;
  constexpr double kEps = 1e-9;
  while (true) {
    if (std::min(tmx, tmy) > len + kEps) return false;  // safety, unreachable
    if (std::abs(tmx - tmy) < kEps) {
      const CellCoord ca{ix + sx, iy}, cb{ix, iy + sy};
      if (ca == b || cb == b) return true;
      if (env.obstacle(ca) || env.obstacle(cb)) return false;
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
    const CellCoord cur{ix, iy};
    if (cur == b) return true;
    if (env.obstacle(cur)) return false;
  }
}

RayHit cast_one_ray(const GridEnvironment& env, CellCoord origin,
                    double bearing, double max_range_cells, double cell_size) {
  RayHit out;
  const Vec2 from{static_cast<double>(origin.x), static_cast<double>(origin.y)};
  const Vec2 dir{std::cos(bearing), std::sin(bearing)};
  supercover_walk(from, dir, max_range_cells, [&](CellCoord c) {
    if (c == origin) return true;
    if (env.obstacle(c)) {
      out.hit = true;
      out.cell = c;
      return false;
    }
    return true;
  });
  if (out.hit) {
    const double dist = std::hypot(out.cell.x - origin.x, out.cell.y - origin.y);
    out.depth_m = std::min(dist, max_range_cells) * cell_size;
  } else {
    out.depth_m = max_range_cells * cell_size;
  }
  return out;
}

}  // namespace

std::vector<RayHit> raycast(const GridEnvironment& env, const Pose& pose,
                            int rays, double fov_deg, double max_range_m) {
  if (rays <= 0) throw std::invalid_argument("rays must be positive");
  if (max_range_m <= 0.0) throw std::invalid_argument("max_range must be positive");
  const double fov = fov_deg * std::numbers::pi / 180.0;
  const double theta = heading_angle(pose.heading);
  const double range_cells = max_range_m / env.cell_size();
  std::vector<RayHit> out;
  out.reserve(rays);
  for (int i = 0; i < rays; ++i) {
    const double offset = -fov / 2.0 + fov * (i + 0.5) / rays;
    out.push_back(cast_one_ray(env, pose.cell, theta + offset, range_cells,
                               env.cell_size()));
  }
  return out;
}

RayHit center_ray(const GridEnvironment& env, const Pose& pose,
                  double max_range_m) {
  return cast_one_ray(env, pose.cell, heading_angle(pose.heading),
                      max_range_m / env.cell_size(), env.cell_size());
}

std::vector<VisibleCell> visible_cells(const GridEnvironment& env,
                                       const Pose& pose, double fov_deg,
                                       double max_range_m) {
  const double range_cells = max_range_m / env.cell_size();
  const int r = static_cast<int>(std::floor(range_cells + 1e-9));
  const double fov = fov_deg * std::numbers::pi / 180.0;
  const bool full_circle = fov >= 2.0 * std::numbers::pi - 1e-9;
  const double theta = heading_angle(pose.heading);

  std::vector<VisibleCell> out;
  for (int y = pose.cell.y - r; y <= pose.cell.y + r; ++y) {
    for (int x = pose.cell.x - r; x <= pose.cell.x + r; ++x) {
      const CellCoord c{x, y};
      if (!env.in_bounds(c)) continue;
      const double dx = x - pose.cell.x, dy = y - pose.cell.y;
      const double dist = std::hypot(dx, dy);
      if (dist > range_cells + 1e-9) continue;
      if (c != pose.cell && !full_circle) {
        const double off = std::abs(wrap_angle(std::atan2(dy, dx) - theta));
        if (off > fov / 2.0 + 1e-9) continue;
      }
      if (!segment_visible(env, pose.cell, c)) continue;
      out.push_back({c, env.obstacle(c), env.signature(c)});
    }
  }
  return out;
}

bool line_of_sight(const GridEnvironment& env, CellCoord from, CellCoord to) {
  return segment_visible(env, from, to);
}

Signature view_signature(const GridEnvironment& env, const Pose& pose,
                         const SensorConfig& sensor) {
  const auto cells = visible_cells(env, pose, sensor.fov_deg,
                                   sensor.max_range_m(env.cell_size()));
  Signature acc{};
  double wsum = 0.0;
  for (const auto& vc : cells) {
    const double dist = std::hypot(vc.cell.x - pose.cell.x,
                                   vc.cell.y - pose.cell.y);
    const double w = 1.0 / (1.0 + dist);
    for (int i = 0; i < kSignatureDim; ++i) acc[i] += w * vc.signature[i];
    wsum += w;
  }
  if (wsum > 0.0) {
    for (auto& v : acc) v /= wsum;
  }
  return acc;
}

Observation observe(const GridEnvironment& env, const Pose& pose,
                    const SensorConfig& sensor) {
  Observation obs;
  const double range_m = sensor.max_range_m(env.cell_size());
  auto scan = raycast(env, pose, sensor.rays, sensor.fov_deg, range_m);
  obs.depth.reserve(scan.size());
  obs.hit.reserve(scan.size());
  for (const auto& r : scan) {
    obs.depth.push_back(r.depth_m);
    obs.hit.push_back(r.hit ? 1 : 0);
  }
  obs.visible = visible_cells(env, pose, sensor.fov_deg, range_m);
  obs.sensor_pose = pose;
  obs.cell_size = env.cell_size();
  return obs;
}

StepResult step(const GridEnvironment& env, const Pose& pose, Action action,
                const SensorConfig& sensor,
                const mapping::OdometryNoiseModel& noise, Rng& rng) {
  if (!env.free(pose.cell)) throw std::invalid_argument("pose not on free cell");
  Pose next = pose;
  bool collision = false;
  mapping::OdometryReading reading;
  const double theta = heading_angle(pose.heading);

  switch (action) {
    case Action::Forward: {
      const auto d = cardinal_delta(cardinal_of_heading(pose.heading));
      const CellCoord target{pose.cell.x + d.x, pose.cell.y + d.y};
      Vec2 world_delta{0.0, 0.0};
      if (env.free(target)) {
        next.cell = target;
        world_delta = {d.x * env.cell_size(), d.y * env.cell_size()};
      } else {
        collision = true;
      }
      const Vec2 ego = rotate(world_delta, -theta);
      const Vec2 attempt = rotate({static_cast<double>(d.x), static_cast<double>(d.y)}, -theta);
      const double eps = noise.sample(noise.forward_magnitude, rng);
      reading.dx = ego.x + eps * attempt.x;
      reading.dy = ego.y + eps * attempt.y;
      break;
    }
    case Action::TurnLeft:
    case Action::TurnRight: {
      const int dir = action == Action::TurnLeft ? 1 : -1;
      next.heading = ((pose.heading + dir) % kHeadings + kHeadings) % kHeadings;
      reading.dtheta = dir * (std::numbers::pi / 6.0) +
                       noise.sample(noise.rotation_magnitude, rng);
      break;
    }
    case Action::Stop:
      break;
  }

  StepResult res{next, observe(env, next, sensor)};
  res.obs.collision = collision;
  res.obs.odometry = reading;
  return res;
}

std::optional<PathResult> shortest_path(const GridEnvironment& env,
                                        CellCoord a, CellCoord b) {
  if (!env.free(a) || !env.free(b)) return std::nullopt;
  if (a == b) return PathResult{{a}, 0.0};
  std::vector<int32_t> parent(static_cast<size_t>(env.width()) * env.height(), -1);
  std::deque<CellCoord> q{a};
  parent[env.index(a)] = static_cast<int32_t>(env.index(a));
  while (!q.empty()) {
    const CellCoord c = q.front();
    q.pop_front();
    if (c == b) break;
    for (auto [dx, dy] : kNeighbors4) {
      const CellCoord n{c.x + dx, c.y + dy};
      if (!env.free(n) || parent[env.index(n)] >= 0) continue;
      parent[env.index(n)] = static_cast<int32_t>(env.index(c));
      q.push_back(n);
    }
  }
  if (parent[env.index(b)] < 0) return std::nullopt;
  std::vector<CellCoord> cells;
  CellCoord cur = b;
  while (!(cur == a)) {
    cells.push_back(cur);
    const auto pi = parent[env.index(cur)];
    cur = {static_cast<int>(pi % env.width()), static_cast<int>(pi / env.width())};
  }
  cells.push_back(a);
  std::reverse(cells.begin(), cells.end());
  return PathResult{cells, (cells.size() - 1) * env.cell_size()};
}

EpisodeSpec sample_episode(const GridEnvironment& env, uint64_t episode_seed,
                           int t_exp, double eta) {
  if (t_exp <= 0) throw std::invalid_argument("t_exp must be positive");
  if (eta < 0.0) throw std::invalid_argument("eta must be non-negative");
  Rng rng(mix_key(mix_key(env.seed(), hash_string("episode")), episode_seed));
  const auto free = env.free_cells();
  if (free.empty()) throw std::runtime_error("environment has no free cells");
  EpisodeSpec spec;
  spec.env_seed = env.seed();
  spec.episode_seed = episode_seed;
  spec.start.cell = free[rng.index(free.size())];
  spec.start.heading = rng.uniform_int(0, kHeadings - 1);
  spec.t_exp = t_exp;
  spec.eta = eta;
  return spec;
}

// --- Serialization ---

std::string serialize_environment(const GridEnvironment& env) {
  json j;
  j["format"] = "explorebench-env";
  j["version"] = 1;
  j["width"] = env.width();
  j["height"] = env.height();
  j["cell_size"] = env.cell_size();
  j["preset"] = to_string(env.preset());
  j["seed"] = env.seed();
  std::vector<std::string> rows;
  for (int y = env.height() - 1; y >= 0; --y) {
    std::string row(env.width(), '.');
    for (int x = 0; x < env.width(); ++x) {
      if (env.obstacle({x, y})) row[x] = '#';
    }
    rows.push_back(std::move(row));
  }
  j["occupancy"] = rows;
  json sigs = json::array();
  for (int y = 0; y < env.height(); ++y) {
    for (int x = 0; x < env.width(); ++x) {
      const auto& s = env.signature({x, y});
      sigs.push_back(std::vector<double>(s.begin(), s.end()));
    }
  }
  j["signatures"] = std::move(sigs);
  json objs = json::array();
  for (const auto& o : env.objects()) objs.push_back({o.cell.x, o.cell.y, o.id});
  j["objects"] = std::move(objs);
  json lms = json::array();
  for (const auto& l : env.landmark_views()) {
    lms.push_back({l.cell.x, l.cell.y, l.heading});
  }
  j["landmarks"] = std::move(lms);
  return j.dump();
}

GridEnvironment deserialize_environment(const std::string& text) {
  json j = json::parse(text);
  if (j.value("format", "") != "explorebench-env") {
    throw std::runtime_error("not an explorebench environment file");
  }
  if (j.value("version", 0) != 1) {
    throw std::runtime_error("unsupported environment file version");
  }
  const int w = j.at("width").get<int>();
  const int h = j.at("height").get<int>();
  auto preset = preset_from_string(j.at("preset").get<std::string>());
  if (!preset) throw std::runtime_error("unknown preset in environment file");
  GridEnvironment env(w, h, j.at("cell_size").get<double>(), *preset,
                      j.at("seed").get<uint64_t>());
  const auto rows = j.at("occupancy").get<std::vector<std::string>>();
  if (static_cast<int>(rows.size()) != h) {
    throw std::runtime_error("occupancy rows mismatch");
  }
  for (int r = 0; r < h; ++r) {
    if (static_cast<int>(rows[r].size()) != w) {
      throw std::runtime_error("occupancy row width mismatch");
    }
    for (int x = 0; x < w; ++x) {
      env.set_obstacle({x, h - 1 - r}, rows[r][x] == '#');
    }
  }
  const auto& sigs = j.at("signatures");
  if (static_cast<int>(sigs.size()) != w * h) {
    throw std::runtime_error("signature table size mismatch");
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto& row = sigs[static_cast<size_t>(y) * w + x];
      Signature s{};
      for (int i = 0; i < kSignatureDim; ++i) s[i] = row.at(i).get<double>();
      env.set_signature({x, y}, s);
    }
  }
  std::vector<ObjectInstance> objs;
  for (const auto& o : j.at("objects")) {
    objs.push_back({{o.at(0).get<int>(), o.at(1).get<int>()}, o.at(2).get<int>()});
  }
  env.set_objects(std::move(objs));
  std::vector<Pose> lms;
  for (const auto& l : j.at("landmarks")) {
    lms.push_back({{l.at(0).get<int>(), l.at(1).get<int>()}, l.at(2).get<int>()});
  }
  env.set_landmark_views(std::move(lms));
  return env;
}

void save_environment(const GridEnvironment& env, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << serialize_environment(env);
}

GridEnvironment load_environment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_environment(ss.str());
}

}  // namespace explore::world
