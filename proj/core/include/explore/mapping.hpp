#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "explore/geometry.hpp"
#include "explore/noise.hpp"
#include "explore/world.hpp"

namespace explore::mapping {

enum class CellState : uint8_t { Unexplored = 0, Free = 1, Obstacle = 2 };

// Pose belief in meters/radians relative to the episode start cell center,
// axes world-aligned. Maintained purely by integrating odometry readings.
struct PoseEstimate {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
};

PoseEstimate integrate_odometry(const PoseEstimate& est,
                                const OdometryReading& reading);

OdometryReading sample_odometry_noise(const OdometryNoiseModel& model,
                                      world::Action action, Rng& rng);

// Agent-side occupancy belief. Logically unbounded: the dense store grows on
// demand and everything outside it reads as Unexplored with count 0. Bins are
// centered on the start lattice (cell k covers [(k-0.5)s, (k+0.5)s)).
class OccupancyMap {
 public:
  explicit OccupancyMap(double bin_size = 0.25);

  double bin_size() const { return bin_; }
  CellCoord bin_of(Vec2 pos_m) const {
    return {static_cast<int>(std::lround(pos_m.x / bin_)),
            static_cast<int>(std::lround(pos_m.y / bin_))};
  }

  CellState state(CellCoord c) const;
  uint32_t count(CellCoord c) const;
  int64_t explored_cells() const { return explored_; }

  // Applies one observation of a cell: obstacle beats free within a scan is
  // handled by the caller staging labels; across scans the latest label wins.
  void apply(CellCoord c, CellState label);

  int min_x() const { return min_x_; }
  int min_y() const { return min_y_; }
  int width() const { return w_; }
  int height() const { return h_; }
  bool empty() const { return w_ == 0; }

  template <typename Fn>  // Fn(CellCoord, CellState, count) in row-major order
  void for_each(Fn&& fn) const {
    for (int y = min_y_; y < min_y_ + h_; ++y) {
      for (int x = min_x_; x < min_x_ + w_; ++x) {
        const size_t i = idx({x, y});
        fn(CellCoord{x, y}, st_[i], cnt_[i]);
      }
    }
  }

 private:
  void grow_to_include(CellCoord c);
  size_t idx(CellCoord c) const {
    return static_cast<size_t>(c.y - min_y_) * w_ + (c.x - min_x_);
  }
  bool inside(CellCoord c) const {
    return w_ > 0 && c.x >= min_x_ && c.x < min_x_ + w_ && c.y >= min_y_ &&
           c.y < min_y_ + h_;
  }

  double bin_;
  int min_x_ = 0, min_y_ = 0, w_ = 0, h_ = 0;
  std::vector<CellState> st_;
  std::vector<uint32_t> cnt_;
  int64_t explored_ = 0;
};

// Optional per-scan label corruption (the noisy-occupancy condition).
struct ScanNoise {
  double flip_prob = 0.0;
  Rng* rng = nullptr;
};

struct RegisterStats {
  int touched = 0;
  int newly_explored = 0;
  std::vector<CellCoord> touched_cells;  // unique, sorted
};

// Registers one scan: visible free cells -> Free, sensed obstacles ->
// Obstacle. Cells are placed by composing the scan's egocentric offsets with
// the pose estimate, so estimate drift mis-registers geometry. Each touched
// cell's observation count increments by exactly one per scan.
RegisterStats register_scan(OccupancyMap& map, const world::Observation& obs,
                            const PoseEstimate& est,
                            const ScanNoise* noise = nullptr);

// Last observed appearance per map bin; same registration transform as
// register_scan.
class SignatureMap {
 public:
  explicit SignatureMap(double bin_size = 0.25) : bin_(bin_size) {}
  void record(const world::Observation& obs, const PoseEstimate& est);
  const world::Signature* find(CellCoord c) const;
  size_t size() const { return sig_.size(); }

 private:
  double bin_;
  std::unordered_map<uint64_t, world::Signature, CellKeyHash> sig_;
};

struct EgocentricCrop {
  int side = 0;                 // cells per side
  std::vector<CellState> cells;  // row 0 = farthest ahead, agent at center
  CellState at(int row, int col) const { return cells[static_cast<size_t>(row) * side + col]; }
};

// Rotated nearest-neighbor crop, agent centered, heading pointing up.
EgocentricCrop egocentric_crop(const OccupancyMap& map, const PoseEstimate& est,
                               double size_m);

// --- 3D scan math (reference implementation, exercised by tests) ---

struct CameraIntrinsics {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;

  Mat3 matrix() const {
    Mat3 k;
    k.m = {fx, 0, cx, 0, fy, cy, 0, 0, 1};
    return k;
  }
};

struct DepthImage {
  int width = 0, height = 0;
  std::vector<double> depth;  // row-major, <=0 or non-finite means invalid

  double at(int u, int v) const { return depth[static_cast<size_t>(v) * width + u]; }
};

// w = [R t; 0 1] K^-1 (u*d, v*d, d) for every valid pixel.
std::vector<Vec3> project_depth_to_points(const DepthImage& img,
                                          const CameraIntrinsics& k,
                                          const Mat3& rotation, const Vec3& translation);

// Height rule over ground-plane bins (x, z): any point with y in
// [eta_lo, eta_hi] makes the bin an obstacle; only lower points make it free;
// points above eta_hi are ignored; empty bins are unexplored.
std::vector<std::pair<CellCoord, CellState>> classify_cells(
    const std::vector<Vec3>& points, double bin_size, double eta_lo, double eta_hi);

// Ground-truth map of an environment in map-frame coordinates anchored at
// `anchor` (the exploration start cell).
OccupancyMap map_from_environment(const world::GridEnvironment& env,
                                  CellCoord anchor);

}  // namespace explore::mapping
