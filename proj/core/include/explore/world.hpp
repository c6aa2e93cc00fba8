#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "explore/geometry.hpp"
#include "explore/noise.hpp"
#include "explore/rng.hpp"

namespace explore::world {

inline constexpr int kSignatureDim = 16;
inline constexpr int kHeadings = 12;

using Signature = std::array<double, kSignatureDim>;

enum class Action : uint8_t { Forward, TurnLeft, TurnRight, Stop };
enum class Preset : uint8_t { SmallCluttered, LargeOpen };

const char* to_string(Action a);
const char* to_string(Preset p);
std::optional<Preset> preset_from_string(const std::string& s);

// Heading h points at angle h * 30 degrees; heading 0 is +x (east),
// heading 3 is +y (north). Turns move one heading step.
struct Pose {
  CellCoord cell;
  int heading = 0;

  bool operator==(const Pose&) const = default;
};

inline double heading_angle(int heading) {
  return heading * (std::numbers::pi / 6.0);
}

// Nearest cardinal of a heading: 0=+x, 1=+y, 2=-x, 3=-y. Forward motion with
// 30-degree headings stays on the 4-connected lattice via this bucketing.
inline int cardinal_of_heading(int heading) {
  return ((heading + 1) / 3) % 4;
}

inline CellCoord cardinal_delta(int cardinal) {
  constexpr int dx[4] = {1, 0, -1, 0};
  constexpr int dy[4] = {0, 1, 0, -1};
  return {dx[cardinal], dy[cardinal]};
}

struct SensorConfig {
  int rays = 32;
  double fov_deg = 90.0;
  double max_range_cells = 16.0;

  double max_range_m(double cell_size) const { return max_range_cells * cell_size; }
};

struct VisibleCell {
  CellCoord cell;
  bool obstacle = false;
  Signature signature{};
};

struct Observation {
  std::vector<double> depth;      // meters, one per ray
  std::vector<uint8_t> hit;       // 0 = ray reached max_range without a hit
  std::vector<VisibleCell> visible;
  bool collision = false;
  mapping::OdometryReading odometry;  // ego frame, includes sampled noise
  Pose sensor_pose;                   // true pose the scan was taken from
  double cell_size = 0.25;
};

struct ObjectInstance {
  CellCoord cell;
  int id = 0;
};

struct GenerationParams {
  int width = 0;    // 0 = preset default
  int height = 0;
  double cell_size = 0.25;
  double clutter_fraction = 0.18;   // small-cluttered interior target
  int signature_regions = 9;        // small-cluttered appearance patches
  int object_count = 0;             // 0 = preset default
  int landmark_count = 0;           // 0 = preset default
  double signature_noise = 0.02;
};

class GridEnvironment {
 public:
  GridEnvironment() = default;
  GridEnvironment(int width, int height, double cell_size, Preset preset,
                  uint64_t seed);

  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size() const { return cell_size_; }
  Preset preset() const { return preset_; }
  uint64_t seed() const { return seed_; }

  bool in_bounds(CellCoord c) const {
    return c.x >= 0 && c.x < width_ && c.y >= 0 && c.y < height_;
  }
  // Out-of-bounds reads as obstacle; the boundary ring is solid by contract.
  bool obstacle(CellCoord c) const {
    return !in_bounds(c) || occupancy_[index(c)] != 0;
  }
  bool free(CellCoord c) const { return in_bounds(c) && occupancy_[index(c)] == 0; }

  void set_obstacle(CellCoord c, bool v) { occupancy_[index(c)] = v ? 1 : 0; }
  const Signature& signature(CellCoord c) const { return signatures_[index(c)]; }
  void set_signature(CellCoord c, const Signature& s) { signatures_[index(c)] = s; }

  const std::vector<ObjectInstance>& objects() const { return objects_; }
  const std::vector<Pose>& landmark_views() const { return landmark_views_; }
  void set_objects(std::vector<ObjectInstance> v) { objects_ = std::move(v); }
  void set_landmark_views(std::vector<Pose> v) { landmark_views_ = std::move(v); }

  std::vector<CellCoord> free_cells() const;
  size_t free_cell_count() const;
  size_t index(CellCoord c) const {
    return static_cast<size_t>(c.y) * width_ + c.x;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  double cell_size_ = 0.25;
  Preset preset_ = Preset::SmallCluttered;
  uint64_t seed_ = 0;
  std::vector<uint8_t> occupancy_;
  std::vector<Signature> signatures_;
  std::vector<ObjectInstance> objects_;
  std::vector<Pose> landmark_views_;
};

// Deterministic per (seed, preset, params). Guarantees: solid boundary, free
// cells form one 4-connected component, objects and landmark views sit on
// free cells.
GridEnvironment generate_environment(uint64_t seed, Preset preset,
                                     const GenerationParams& params = {});

// Test/fixture helper: '#' obstacle, '.' free; rows listed top row first.
GridEnvironment environment_from_ascii(const std::vector<std::string>& rows,
                                       double cell_size = 0.25);

struct StepResult {
  Pose pose;
  Observation obs;
};

Observation observe(const GridEnvironment& env, const Pose& pose,
                    const SensorConfig& sensor);

// Executes one action. Forward into an obstacle leaves the pose unchanged and
// flags collision; odometry reads true ego delta plus sampled noise.
StepResult step(const GridEnvironment& env, const Pose& pose, Action action,
                const SensorConfig& sensor,
                const mapping::OdometryNoiseModel& noise, Rng& rng);

struct RayHit {
  double depth_m = 0.0;   // center-to-center distance, clamped to max_range
  bool hit = false;
  CellCoord cell;         // hit cell when hit == true
};

// R rays at fov bin centers around the exact heading angle.
std::vector<RayHit> raycast(const GridEnvironment& env, const Pose& pose,
                            int rays, double fov_deg, double max_range_m);

// Single ray along the exact heading; used for center-ray depths.
RayHit center_ray(const GridEnvironment& env, const Pose& pose,
                  double max_range_m);

// Cells whose center-to-center segment from the pose is unobstructed, within
// the fov cone and range. The first obstacle along a segment is itself
// visible; anything past it is not. fov >= 360 disables the cone check.
std::vector<VisibleCell> visible_cells(const GridEnvironment& env,
                                       const Pose& pose, double fov_deg,
                                       double max_range_m);

// Center-to-center occlusion test; the target cell itself may be an obstacle.
bool line_of_sight(const GridEnvironment& env, CellCoord from, CellCoord to);

// Mean of visible cell signatures weighted by 1/(1+distance); the per-step
// appearance fingerprint used for memory, localization and landmark mining.
Signature view_signature(const GridEnvironment& env, const Pose& pose,
                         const SensorConfig& sensor);

struct PathResult {
  std::vector<CellCoord> cells;   // start..goal inclusive
  double length_m = 0.0;          // (cells - 1) * cell_size
};

// 4-connected BFS over true occupancy.
std::optional<PathResult> shortest_path(const GridEnvironment& env,
                                        CellCoord a, CellCoord b);

struct EpisodeSpec {
  uint64_t env_seed = 0;
  uint64_t episode_seed = 0;
  Pose start;
  int t_exp = 0;
  double eta = 0.0;
};

// Start uniform over free cells x headings, deterministic per seed.
EpisodeSpec sample_episode(const GridEnvironment& env, uint64_t episode_seed,
                           int t_exp, double eta);

// Versioned JSON round-trip for generated environments.
std::string serialize_environment(const GridEnvironment& env);
GridEnvironment deserialize_environment(const std::string& text);
void save_environment(const GridEnvironment& env, const std::string& path);
GridEnvironment load_environment(const std::string& path);

}  // namespace explore::world
