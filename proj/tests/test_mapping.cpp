// Mapping: pose integration, scan registration, crops, 3D scan math.
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "doctest.h"
#include "explore/mapping.hpp"
#include "explore/world.hpp"
#include "helpers.hpp"

using namespace explore;
using namespace explore::mapping;
using testref::near;

namespace {

// Closed-form pinhole back-projection for one pixel. Written against the
// camera equations directly, not against project_depth_to_points.
Vec3 pinhole_point(int u, int v, double d, const CameraIntrinsics& k) {
  return {(u - k.cx) * d / k.fx, (v - k.cy) * d / k.fy, d};
}

world::SensorConfig default_sensor() { return {}; }

}  // namespace

TEST_CASE("project_depth_to_points: principal pixel and translation") {
  DepthImage img;
  img.width = 1;
  img.height = 1;
  img.depth = {1.7};
  CameraIntrinsics k{2.0, 3.0, 0.0, 0.0};
  Mat3 eye;  // identity by default

  auto pts = project_depth_to_points(img, k, eye, {0, 0, 0});
  REQUIRE(pts.size() == 1);
  CHECK(near(pts[0].x, 0.0, 1e-12));
  CHECK(near(pts[0].y, 0.0, 1e-12));
  CHECK(near(pts[0].z, 1.7, 1e-12));

  pts = project_depth_to_points(img, k, eye, {1.0, -2.0, 3.0});
  REQUIRE(pts.size() == 1);
  CHECK(near(pts[0].x, 1.0, 1e-12));
  CHECK(near(pts[0].y, -2.0, 1e-12));
  CHECK(near(pts[0].z, 4.7, 1e-12));
}

TEST_CASE("project_depth_to_points: fronto-parallel wall matches pinhole oracle") {
  DepthImage img;
  img.width = 8;
  img.height = 6;
  const double d = 2.5;
  img.depth.assign(48, d);
  CameraIntrinsics k{100.0, 120.0, 3.5, 2.5};
  Mat3 eye;

  const auto pts = project_depth_to_points(img, k, eye, {0, 0, 0});
  REQUIRE(pts.size() == 48);
  size_t i = 0;
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u, ++i) {
      const Vec3 want = pinhole_point(u, v, d, k);
      CHECK(near(pts[i].x, want.x, 1e-12));
      CHECK(near(pts[i].y, want.y, 1e-12));
      CHECK(near(pts[i].z, d, 1e-12));  // equal forward coordinate
    }
  }
}

TEST_CASE("project_depth_to_points: pose transform applied after back-projection") {
  DepthImage img;
  img.width = 3;
  img.height = 2;
  img.depth = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  CameraIntrinsics k{50.0, 40.0, 1.0, 0.5};
  // Rotation by 90 degrees about the y axis: (x, y, z) -> (z, y, -x).
  Mat3 rot;
  rot.m = {0, 0, 1, 0, 1, 0, -1, 0, 0};
  const Vec3 t{0.3, -0.1, 0.7};

  const auto pts = project_depth_to_points(img, k, rot, t);
  REQUIRE(pts.size() == 6);
  size_t i = 0;
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u, ++i) {
      const Vec3 c = pinhole_point(u, v, img.at(u, v), k);
      CHECK(near(pts[i].x, c.z + t.x, 1e-12));
      CHECK(near(pts[i].y, c.y + t.y, 1e-12));
      CHECK(near(pts[i].z, -c.x + t.z, 1e-12));
    }
  }
}

TEST_CASE("project_depth_to_points: invalid depths skipped, singular K rejected") {
  DepthImage img;
  img.width = 5;
  img.height = 1;
  img.depth = {1.0, 0.0, -2.0, std::nan(""), 3.0};
  CameraIntrinsics k{10.0, 10.0, 2.0, 0.0};
  Mat3 eye;
  const auto pts = project_depth_to_points(img, k, eye, {0, 0, 0});
  CHECK(pts.size() == 2);

  CameraIntrinsics bad{0.0, 10.0, 2.0, 0.0};
  CHECK_THROWS_AS(project_depth_to_points(img, bad, eye, {0, 0, 0}),
                  std::invalid_argument);
}

TEST_CASE("classify_cells: height band rule") {
  const double lo = 0.5, hi = 2.0;

  SUBCASE("point inside band marks obstacle") {
    auto out = classify_cells({{0.1, 1.0, 0.1}}, 0.25, lo, hi);
    REQUIRE(out.size() == 1);
    CHECK(out[0].first == CellCoord{0, 0});
    CHECK(out[0].second == CellState::Obstacle);
  }

  SUBCASE("low points mark free") {
    auto out = classify_cells({{0.1, 0.1, 0.1}, {0.5, 0.1, 0.0}}, 0.25, lo, hi);
    REQUIRE(out.size() == 2);
    for (const auto& [c, s] : out) CHECK(s == CellState::Free);
  }

  SUBCASE("obstacle wins within a bin regardless of order") {
    const Vec3 low{0.0, 0.1, 0.0}, mid{0.0, 1.0, 0.0};
    for (auto pts : {std::vector<Vec3>{low, mid}, std::vector<Vec3>{mid, low}}) {
      auto out = classify_cells(pts, 0.25, lo, hi);
      REQUIRE(out.size() == 1);
      CHECK(out[0].second == CellState::Obstacle);
    }
  }

  SUBCASE("points above the band leave the bin unexplored") {
    CHECK(classify_cells({{0.0, 3.0, 0.0}}, 0.25, lo, hi).empty());
    CHECK(classify_cells({}, 0.25, lo, hi).empty());
  }

  SUBCASE("band edges are inclusive") {
    auto out = classify_cells({{0.0, hi, 0.0}}, 0.25, lo, hi);
    REQUIRE(out.size() == 1);
    CHECK(out[0].second == CellState::Obstacle);
    out = classify_cells({{0.0, lo, 0.0}}, 0.25, lo, hi);
    CHECK(out[0].second == CellState::Obstacle);
    out = classify_cells({{0.0, lo - 1e-9, 0.0}}, 0.25, lo, hi);
    CHECK(out[0].second == CellState::Free);
  }

  SUBCASE("output sorted by cell, bad params rejected") {
    auto out = classify_cells(
        {{1.0, 0.1, 0.0}, {0.0, 0.1, 1.0}, {0.0, 0.1, 0.0}}, 0.25, lo, hi);
    REQUIRE(out.size() == 3);
    CHECK(std::is_sorted(out.begin(), out.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; }));
    CHECK_THROWS_AS(classify_cells({}, 0.0, lo, hi), std::invalid_argument);
    CHECK_THROWS_AS(classify_cells({}, 0.25, hi, lo), std::invalid_argument);
  }
}

TEST_CASE("register_scan: corridor fixture lands cells at estimate-relative bins") {
  const auto env = world::environment_from_ascii({
      "#######",
      "#.....#",
      "#######",
  });
  const auto obs = world::observe(env, {{1, 1}, 0}, default_sensor());

  OccupancyMap map(0.25);
  PoseEstimate est{0.0, 0.0, 0.0};
  const auto stats = register_scan(map, obs, est);

  // Corridor interior shifts to x-1; the far wall at (6,1) lands at (5,0).
  for (int x = 0; x <= 4; ++x) {
    CHECK(map.state({x, 0}) == CellState::Free);
    CHECK(map.count({x, 0}) == 1);
  }
  CHECK(map.state({5, 0}) == CellState::Obstacle);
  CHECK(stats.touched == 6);
  CHECK(stats.newly_explored == 6);
  CHECK(stats.touched_cells.size() == 6);
  CHECK(std::is_sorted(stats.touched_cells.begin(), stats.touched_cells.end()));
  CHECK(map.explored_cells() == 6);

  SUBCASE("estimate rotation rotates the registered scan") {
    OccupancyMap rot(0.25);
    register_scan(rot, obs, {0.0, 0.0, std::numbers::pi / 2});
    CHECK(rot.state({0, 5}) == CellState::Obstacle);
    for (int y = 0; y <= 4; ++y) CHECK(rot.state({0, y}) == CellState::Free);
  }

  SUBCASE("re-observation keeps states and increments counts once") {
    const auto again = register_scan(map, obs, est);
    CHECK(again.touched == 6);
    CHECK(again.newly_explored == 0);
    for (int x = 0; x <= 4; ++x) {
      CHECK(map.state({x, 0}) == CellState::Free);
      CHECK(map.count({x, 0}) == 2);
    }
    CHECK(map.state({5, 0}) == CellState::Obstacle);
    CHECK(map.count({5, 0}) == 2);
    CHECK(map.explored_cells() == 6);
  }

  SUBCASE("scan noise flips labels; zero probability is a no-op") {
    Rng rng(99);
    ScanNoise all{1.0, &rng};
    OccupancyMap noisy(0.25);
    register_scan(noisy, obs, est, &all);
    CHECK(noisy.state({5, 0}) == CellState::Free);
    for (int x = 0; x <= 4; ++x) CHECK(noisy.state({x, 0}) == CellState::Obstacle);

    ScanNoise off{0.0, &rng};
    OccupancyMap clean(0.25);
    register_scan(clean, obs, est, &off);
    for (int x = 0; x <= 4; ++x) CHECK(clean.state({x, 0}) == CellState::Free);
    CHECK(clean.state({5, 0}) == CellState::Obstacle);
  }
}

// Drives a live episode with exact odometry and checks, at every step, that
// the registered map never mislabels ground truth, that exploration counts
// are conserved, and that explored area is monotone. Doubles as the map
// monotonicity property suite (150 scans per environment).
TEST_CASE("register_scan: noiseless episodes never fabricate geometry") {
  const world::SensorConfig sensor = default_sensor();
  const OdometryNoiseModel noiseless;  // eta = 0
  for (uint64_t seed : {3u, 14u}) {
    const auto env = world::generate_environment(seed, world::Preset::SmallCluttered);
    const auto ep = world::sample_episode(env, 7, 150, 0.0);
    world::Pose pose = ep.start;
    const CellCoord anchor = ep.start.cell;
    PoseEstimate est{0.0, 0.0, world::heading_angle(ep.start.heading)};

    OccupancyMap map(env.cell_size());
    Rng rng(Rng::stream(seed, 4055));
    std::unordered_map<uint64_t, uint32_t, CellKeyHash> expected_counts;

    auto absorb = [&](const world::Observation& obs) {
      const int64_t before = map.explored_cells();
      const auto stats = register_scan(map, obs, est);
      CHECK(map.explored_cells() >= before);
      CHECK(map.explored_cells() - before == stats.newly_explored);
      CHECK(static_cast<int>(stats.touched_cells.size()) == stats.touched);
      for (const auto& c : stats.touched_cells) ++expected_counts[cell_key(c)];
    };

    absorb(world::observe(env, pose, sensor));
    for (int t = 0; t < 150; ++t) {
      const auto a = static_cast<world::Action>(rng.uniform_int(0, 2));
      const auto sr = world::step(env, pose, a, sensor, noiseless, rng);
      pose = sr.pose;
      est = integrate_odometry(est, sr.obs.odometry);
      absorb(sr.obs);

      // Exact odometry keeps the believed pose pinned to the true one.
      CHECK(near(est.x, (pose.cell.x - anchor.x) * env.cell_size(), 1e-9));
      CHECK(near(est.y, (pose.cell.y - anchor.y) * env.cell_size(), 1e-9));
      CHECK(near(wrap_angle(est.theta - world::heading_angle(pose.heading)), 0.0, 1e-9));
    }

    // No false labels: every believed state matches the world.
    map.for_each([&](CellCoord c, CellState s, uint32_t cnt) {
      const CellCoord wc{c.x + anchor.x, c.y + anchor.y};
      if (s == CellState::Obstacle) CHECK(env.obstacle(wc));
      if (s == CellState::Free) {
        CHECK(env.in_bounds(wc));
        CHECK(!env.obstacle(wc));
      }
      const auto it = expected_counts.find(cell_key(c));
      CHECK(cnt == (it == expected_counts.end() ? 0u : it->second));
      if (s == CellState::Unexplored) CHECK(cnt == 0);
    });
  }
}

TEST_CASE("SignatureMap: records appearance at registered bins, last wins") {
  std::vector<std::string> rows{"#######", "#.....#", "#######"};
  auto env_a = world::environment_from_ascii(rows);
  auto env_b = world::environment_from_ascii(rows);
  world::Signature s1{}, s2{};
  s1[0] = 1.0;
  s2[0] = -1.0;
  for (int y = 0; y < env_a.height(); ++y)
    for (int x = 0; x < env_a.width(); ++x) {
      env_a.set_signature({x, y}, s1);
      env_b.set_signature({x, y}, s2);
    }

  SignatureMap sigs(0.25);
  const PoseEstimate est{0.0, 0.0, 0.0};
  sigs.record(world::observe(env_a, {{1, 1}, 0}, default_sensor()), est);
  REQUIRE(sigs.find({5, 0}) != nullptr);
  CHECK(near((*sigs.find({5, 0}))[0], 1.0, 1e-12));
  CHECK(sigs.find({0, 0}) != nullptr);
  CHECK(sigs.find({40, 40}) == nullptr);
  const size_t n = sigs.size();

  sigs.record(world::observe(env_b, {{1, 1}, 0}, default_sensor()), est);
  CHECK(sigs.size() == n);
  CHECK(near((*sigs.find({5, 0}))[0], -1.0, 1e-12));
}

TEST_CASE("sample_odometry_noise: truncation bounds and symmetry") {
  Rng rng(2024);

  SUBCASE("eta zero is exact for all actions") {
    OdometryNoiseModel off;
    for (auto a : {world::Action::Forward, world::Action::TurnLeft,
                   world::Action::TurnRight, world::Action::Stop}) {
      const auto r = sample_odometry_noise(off, a, rng);
      CHECK(r.dx == 0.0);
      CHECK(r.dy == 0.0);
      CHECK(r.dtheta == 0.0);
    }
  }

  SUBCASE("forward noise bounded by eta times step length") {
    OdometryNoiseModel m;
    m.eta = 0.15;
    const double bound = 0.15 * m.forward_magnitude;
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const auto r = sample_odometry_noise(m, world::Action::Forward, rng);
      CHECK(std::abs(r.dx) <= bound + 1e-15);
      CHECK(r.dy == 0.0);
      CHECK(r.dtheta == 0.0);
      sum += r.dx;
    }
    CHECK(std::abs(sum / n) <= 3.0 * bound / std::sqrt(double(n)));
  }

  SUBCASE("turn noise perturbs only the rotation") {
    OdometryNoiseModel m;
    m.eta = 0.3;
    const double bound = 0.3 * m.rotation_magnitude;
    for (int i = 0; i < 2000; ++i) {
      const auto a = (i % 2) ? world::Action::TurnLeft : world::Action::TurnRight;
      const auto r = sample_odometry_noise(m, a, rng);
      CHECK(r.dx == 0.0);
      CHECK(r.dy == 0.0);
      CHECK(std::abs(r.dtheta) <= bound + 1e-15);
    }
    const auto r = sample_odometry_noise(m, world::Action::Stop, rng);
    CHECK(r.dtheta == 0.0);
  }
}

TEST_CASE("integrate_odometry: composition in the believed frame") {
  const PoseEstimate base{1.0, 2.0, std::numbers::pi / 2};
  auto est = integrate_odometry(base, {});
  CHECK(est.x == base.x);
  CHECK(est.y == base.y);
  CHECK(est.theta == base.theta);

  est = integrate_odometry(base, {0.25, 0.0, 0.0});
  CHECK(near(est.x, 1.0, 1e-12));
  CHECK(near(est.y, 2.25, 1e-12));

  est = integrate_odometry(base, {0.0, 0.0, 0.1});
  CHECK(est.x == base.x);
  CHECK(near(est.theta, base.theta + 0.1, 1e-15));

  // Constant bias accumulates linearly.
  PoseEstimate drift{0.0, 0.0, 0.0};
  for (int t = 0; t < 40; ++t) drift = integrate_odometry(drift, {1e-3, 0.0, 0.0});
  CHECK(near(drift.x, 0.04, 1e-12));
  CHECK(near(drift.y, 0.0, 1e-12));
}

TEST_CASE("egocentric_crop: orientation, purity and off-map padding") {
  // 5x5 free block with pillars ahead of and left of the center.
  auto map = testref::map_from_ascii({
      "..#..",   // (2,4): left of agent
      ".....",
      "....#",   // (4,2): ahead of agent
      ".....",
      ".....",
  });
  const PoseEstimate center{2 * 0.25, 2 * 0.25, 0.0};
  const auto crop = egocentric_crop(map, center, 1.25);
  REQUIRE(crop.side == 5);
  CHECK(crop.at(0, 2) == CellState::Obstacle);  // ahead
  CHECK(crop.at(2, 0) == CellState::Obstacle);  // left
  CHECK(crop.at(2, 2) == CellState::Free);      // under the agent
  CHECK(crop.at(4, 2) == CellState::Free);      // behind

  SUBCASE("pure function of its arguments") {
    const auto again = egocentric_crop(map, center, 1.25);
    CHECK(again.cells == crop.cells);
  }

  SUBCASE("half-turn reverses the crop") {
    PoseEstimate flipped = center;
    flipped.theta = std::numbers::pi;
    const auto back = egocentric_crop(map, flipped, 1.25);
    std::vector<CellState> reversed(crop.cells.rbegin(), crop.cells.rend());
    CHECK(back.cells == reversed);
  }

  SUBCASE("rejects non-positive size") {
    CHECK_THROWS_AS(egocentric_crop(map, center, 0.0), std::invalid_argument);
  }
}

TEST_CASE("egocentric_crop: corner placement pads three quadrants unexplored") {
  OccupancyMap map(0.25);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) map.apply({x, y}, CellState::Free);

  const auto crop = egocentric_crop(map, {0.0, 0.0, 0.0}, 15 * 0.25);
  REQUIRE(crop.side == 15);
  const int mid = 7;
  int fully_unexplored = 0;
  bool agent_quadrant_seen = false;
  for (int qr = 0; qr < 2; ++qr) {
    for (int qc = 0; qc < 2; ++qc) {
      bool all_unknown = true, any_free = false;
      for (int r = qr * (mid + 1); r < qr * (mid + 1) + mid; ++r) {
        for (int c = qc * (mid + 1); c < qc * (mid + 1) + mid; ++c) {
          if (crop.at(r, c) != CellState::Unexplored) all_unknown = false;
          if (crop.at(r, c) == CellState::Free) any_free = true;
        }
      }
      fully_unexplored += all_unknown;
      agent_quadrant_seen |= any_free;
    }
  }
  CHECK(fully_unexplored == 3);
  CHECK(agent_quadrant_seen);
}

TEST_CASE("OccupancyMap: growth preserves content, outside reads unexplored") {
  OccupancyMap map(0.25);
  CHECK(map.empty());
  CHECK(map.state({100, -3}) == CellState::Unexplored);
  CHECK(map.count({100, -3}) == 0);

  map.apply({0, 0}, CellState::Free);
  map.apply({-30, 17}, CellState::Obstacle);  // forces several growth rounds
  map.apply({44, -26}, CellState::Free);
  CHECK(map.state({0, 0}) == CellState::Free);
  CHECK(map.state({-30, 17}) == CellState::Obstacle);
  CHECK(map.state({44, -26}) == CellState::Free);
  CHECK(map.explored_cells() == 3);
  CHECK(map.count({-30, 17}) == 1);

  // Relabeling flips state but never un-explores.
  map.apply({0, 0}, CellState::Obstacle);
  CHECK(map.state({0, 0}) == CellState::Obstacle);
  CHECK(map.explored_cells() == 3);
  CHECK(map.count({0, 0}) == 2);

  CHECK_THROWS_AS(OccupancyMap(0.0), std::invalid_argument);
}
