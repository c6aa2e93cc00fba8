#include "explore/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace explore::mapping {

PoseEstimate integrate_odometry(const PoseEstimate& est,
                                const OdometryReading& reading) {
  const double c = std::cos(est.theta), s = std::sin(est.theta);
  return {est.x + c * reading.dx - s * reading.dy,
          est.y + s * reading.dx + c * reading.dy,
          est.theta + reading.dtheta};
}

OdometryReading sample_odometry_noise(const OdometryNoiseModel& model,
                                      world::Action action, Rng& rng) {
  OdometryReading r;
  switch (action) {
    case world::Action::Forward:
      r.dx = model.sample(model.forward_magnitude, rng);
      break;
    case world::Action::TurnLeft:
    case world::Action::TurnRight:
      r.dtheta = model.sample(model.rotation_magnitude, rng);
      break;
    case world::Action::Stop:
      break;
  }
  return r;
}

OccupancyMap::OccupancyMap(double bin_size) : bin_(bin_size) {
  if (bin_size <= 0.0) throw std::invalid_argument("bin_size must be positive");
}

CellState OccupancyMap::state(CellCoord c) const {
  return inside(c) ? st_[idx(c)] : CellState::Unexplored;
}

uint32_t OccupancyMap::count(CellCoord c) const {
  return inside(c) ? cnt_[idx(c)] : 0;
}

void OccupancyMap::grow_to_include(CellCoord c) {
  if (inside(c)) return;
  if (w_ == 0) {
    // First touch: allocate a block around the origin and the cell.
    min_x_ = std::min(c.x, -8);
    min_y_ = std::min(c.y, -8);
    w_ = std::max(c.x + 9, 9) - min_x_;
    h_ = std::max(c.y + 9, 9) - min_y_;
    st_.assign(static_cast<size_t>(w_) * h_, CellState::Unexplored);
    cnt_.assign(static_cast<size_t>(w_) * h_, 0);
    return;
  }
  int nmin_x = min_x_, nmin_y = min_y_, nmax_x = min_x_ + w_, nmax_y = min_y_ + h_;
  while (c.x < nmin_x) nmin_x -= std::max(8, w_ / 2);
  while (c.y < nmin_y) nmin_y -= std::max(8, h_ / 2);
  while (c.x >= nmax_x) nmax_x += std::max(8, w_ / 2);
  while (c.y >= nmax_y) nmax_y += std::max(8, h_ / 2);
  const int nw = nmax_x - nmin_x, nh = nmax_y - nmin_y;
  std::vector<CellState> nst(static_cast<size_t>(nw) * nh, CellState::Unexplored);
  std::vector<uint32_t> ncnt(static_cast<size_t>(nw) * nh, 0);
  for (int y = 0; y < h_; ++y) {
    const size_t src = static_cast<size_t>(y) * w_;
    const size_t dst = static_cast<size_t>(y + min_y_ - nmin_y) * nw +
                       (min_x_ - nmin_x);
    std::copy_n(st_.begin() + src, w_, nst.begin() + dst);
    std::copy_n(cnt_.begin() + src, w_, ncnt.begin() + dst);
  }
  st_ = std::move(nst);
  cnt_ = std::move(ncnt);
  min_x_ = nmin_x;
  min_y_ = nmin_y;
  w_ = nw;
  h_ = nh;
}

void OccupancyMap::apply(CellCoord c, CellState label) {
  grow_to_include(c);
  const size_t i = idx(c);
  if (st_[i] == CellState::Unexplored && label != CellState::Unexplored) {
    ++explored_;
  }
  st_[i] = label;
  ++cnt_[i];
}

namespace {

// Egocentric offset of a world cell as seen from the true sensor pose,
// re-anchored through the pose estimate. This is the only place the true pose
// is consulted, and only to express the scan relative to the sensor.
Vec2 register_position(const world::Observation& obs, const PoseEstimate& est,
                       CellCoord world_cell) {
  const double theta_true = world::heading_angle(obs.sensor_pose.heading);
  const Vec2 rel{(world_cell.x - obs.sensor_pose.cell.x) * obs.cell_size,
                 (world_cell.y - obs.sensor_pose.cell.y) * obs.cell_size};
  const Vec2 ego = rotate(rel, -theta_true);
  const Vec2 placed = rotate(ego, est.theta);
  return {est.x + placed.x, est.y + placed.y};
}

}  // namespace

RegisterStats register_scan(OccupancyMap& map, const world::Observation& obs,
                            const PoseEstimate& est, const ScanNoise* noise) {
  // Stage labels first: within a scan, obstacle beats free.
  std::unordered_map<uint64_t, CellState, CellKeyHash> staged;
  staged.reserve(obs.visible.size() * 2);
  for (const auto& vc : obs.visible) {
    bool obstacle = vc.obstacle;
    if (noise != nullptr && noise->flip_prob > 0.0 && noise->rng != nullptr &&
        noise->rng->uniform() < noise->flip_prob) {
      obstacle = !obstacle;
    }
    const CellCoord mc = map.bin_of(register_position(obs, est, vc.cell));
    const CellState label = obstacle ? CellState::Obstacle : CellState::Free;
    auto [it, inserted] = staged.emplace(cell_key(mc), label);
    if (!inserted && label == CellState::Obstacle) it->second = label;
  }

  RegisterStats stats;
  stats.touched_cells.reserve(staged.size());
  for (const auto& [key, label] : staged) {
    stats.touched_cells.push_back(
        {static_cast<int>(static_cast<int32_t>(key >> 32)),
         static_cast<int>(static_cast<int32_t>(key & 0xffffffffULL))});
  }
  std::sort(stats.touched_cells.begin(), stats.touched_cells.end());
  for (const auto& mc : stats.touched_cells) {
    const bool was_unexplored = map.state(mc) == CellState::Unexplored;
    map.apply(mc, staged.at(cell_key(mc)));
    ++stats.touched;
    if (was_unexplored) ++stats.newly_explored;
  }
  return stats;
}

void SignatureMap::record(const world::Observation& obs, const PoseEstimate& est) {
  for (const auto& vc : obs.visible) {
    const Vec2 pos = register_position(obs, est, vc.cell);
    const CellCoord mc{static_cast<int>(std::lround(pos.x / bin_)),
                       static_cast<int>(std::lround(pos.y / bin_))};
    sig_[cell_key(mc)] = vc.signature;
  }
}

const world::Signature* SignatureMap::find(CellCoord c) const {
  auto it = sig_.find(cell_key(c));
  return it == sig_.end() ? nullptr : &it->second;
}

EgocentricCrop egocentric_crop(const OccupancyMap& map, const PoseEstimate& est,
                               double size_m) {
  if (size_m <= 0.0) throw std::invalid_argument("crop size must be positive");
  const double s = map.bin_size();
  const int side = std::max(1, static_cast<int>(std::lround(size_m / s)));
  EgocentricCrop crop;
  crop.side = side;
  crop.cells.resize(static_cast<size_t>(side) * side, CellState::Unexplored);
  const double half = (side - 1) / 2.0;
  // Row 0 is farthest forward; sampling offsets sit on the bin-center lattice.
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const double forward = (half - r) * s;
      const double lateral = (half - c) * s;  // +lateral = agent's left
      const Vec2 off = rotate({forward, lateral}, est.theta);
      const CellCoord mc = map.bin_of({est.x + off.x, est.y + off.y});
      crop.cells[static_cast<size_t>(r) * side + c] = map.state(mc);
    }
  }
  return crop;
}

std::vector<Vec3> project_depth_to_points(const DepthImage& img,
                                          const CameraIntrinsics& k,
                                          const Mat3& rotation,
                                          const Vec3& translation) {
  const Mat3 km = k.matrix();
  if (std::abs(km.det()) < 1e-12)
    throw std::invalid_argument("intrinsic matrix is singular");
  const Mat3 kinv = km.inverse();
  std::vector<Vec3> out;
  out.reserve(img.depth.size());
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const double d = img.at(u, v);
      if (!(d > 0.0) || !std::isfinite(d)) continue;
      const Vec3 cam = kinv.apply({u * d, v * d, d});
      const Vec3 w = rotation.apply(cam);
      out.push_back({w.x + translation.x, w.y + translation.y, w.z + translation.z});
    }
  }
  return out;
}

std::vector<std::pair<CellCoord, CellState>> classify_cells(
    const std::vector<Vec3>& points, double bin_size, double eta_lo,
    double eta_hi) {
  if (bin_size <= 0.0) throw std::invalid_argument("bin_size must be positive");
  if (eta_lo > eta_hi) throw std::invalid_argument("eta_lo must not exceed eta_hi");
  std::unordered_map<uint64_t, CellState, CellKeyHash> bins;
  std::unordered_map<uint64_t, CellCoord, CellKeyHash> coords;
  for (const auto& p : points) {
    if (p.y > eta_hi) continue;  // above the agent's height band
    const CellCoord c{static_cast<int>(std::lround(p.x / bin_size)),
                      static_cast<int>(std::lround(p.z / bin_size))};
    const CellState label =
        p.y >= eta_lo ? CellState::Obstacle : CellState::Free;
    auto [it, inserted] = bins.emplace(cell_key(c), label);
    if (!inserted && label == CellState::Obstacle) it->second = label;
    coords.emplace(cell_key(c), c);
  }
  std::vector<std::pair<CellCoord, CellState>> out;
  out.reserve(bins.size());
  for (const auto& [key, label] : bins) out.push_back({coords.at(key), label});
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

OccupancyMap map_from_environment(const world::GridEnvironment& env,
                                  CellCoord anchor) {
  OccupancyMap map(env.cell_size());
  for (int y = 0; y < env.height(); ++y) {
    for (int x = 0; x < env.width(); ++x) {
      const CellCoord mc{x - anchor.x, y - anchor.y};
      map.apply(mc, env.obstacle({x, y}) ? CellState::Obstacle : CellState::Free);
    }
  }
  return map;
}

}  // namespace explore::mapping
