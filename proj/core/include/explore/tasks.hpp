#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "explore/agents.hpp"
#include "explore/mapping.hpp"
#include "explore/rewards.hpp"
#include "explore/rng.hpp"
#include "explore/world.hpp"

namespace explore::tasks {

// --- Point-goal navigation ---

struct NavEpisode {
  world::Pose start;
  CellCoord goal;
  int t_nav = 200;
  double eta_success = 0.5;  // meters
};

struct NavResult {
  bool success = false;
  bool stopped = false;
  double path_length_m = 0.0;  // p: forward moves actually executed
  double shortest_m = 0.0;     // l: true geodesic start -> goal
  int steps = 0;
  int collisions = 0;

  double spl_term() const;
};

struct NavParams {
  world::SensorConfig sensor;
  double eta = 0.0;            // odometry noise during navigation
  bool online_updates = false; // frozen map when false
  uint64_t seed = 0;
};

// Navigates on the explored map (anchored at map_anchor in env coordinates):
// each step closes the map, runs A* from the believed cell to the goal, stops
// once the believed remaining path is within eta_success, and falls back to a
// random action when planning fails. Success requires a Stop whose true
// geodesic distance to the goal is within eta_success.
NavResult pointnav_run(const world::GridEnvironment& env,
                       const mapping::OccupancyMap& explored,
                       CellCoord map_anchor, const NavEpisode& episode,
                       const NavParams& params);

double spl(std::span<const NavResult> results);

// Uniform (start, goal) pairs over free cells with geodesic >= min_geodesic_m.
std::vector<NavEpisode> sample_nav_episodes(const world::GridEnvironment& env,
                                            int n, int t_nav,
                                            double eta_success,
                                            double min_geodesic_m,
                                            uint64_t seed);

struct DifficultEpisode {
  NavEpisode episode;
  double geodesic_m = 0.0;
  double naive_ratio = 0.0;  // naive replanner cost / geodesic cost
};

struct DifficultEpisodeSet {
  std::vector<DifficultEpisode> episodes;
  int requested = 0;

  int shortfall() const {
    return requested - static_cast<int>(episodes.size());
  }
};

struct DifficultNavParams {
  double detour_threshold = 1.5;
  int t_nav = 200;
  double eta_success = 0.5;
  double min_geodesic_m = 1.0;
  int max_attempts_per_episode = 400;
};

// Cost of a replanner that believes everything free, walks shortest believed
// paths and records obstacles only by bumping into them; expressed as a ratio
// to the true geodesic (1 = no detour). Infinity when the walk exceeds its
// step budget.
double naive_detour_ratio(const world::GridEnvironment& env, CellCoord start,
                          CellCoord goal);

// Pairs whose naive detour ratio is >= detour_threshold and whose geodesic is
// preserved by the 3x3 map close (so a perfect map still admits an optimal
// route). Deterministic per seed; fewer than n qualifying pairs is reported
// via the set's shortfall.
DifficultEpisodeSet generate_difficult_nav_episodes(
    const world::GridEnvironment& env, int n, const DifficultNavParams& params,
    uint64_t seed);

// --- View localization ---

struct MemoryEntry {
  world::Signature signature{};
  mapping::PoseEstimate est;     // stored pose belief at record time
  double center_depth_m = 0.0;
  Vec2 true_pos_m{};             // ground truth, held out of the prediction
  double true_theta = 0.0;
  int t = 0;
};

struct EpisodicMemory {
  std::vector<MemoryEntry> entries;
};

struct LocalizationQuery {
  world::Signature signature{};
  double center_depth_m = 0.0;
  Vec2 true_pos_m{};  // scoring only
  double true_theta = 0.0;
};

// Relative geometry (d_i, d_j, beta) for a query/retrieval pair. The
// candidate pose is stored_pos + R(stored_theta) * (d_i - d_j cos(beta),
//                                                   -d_j sin(beta)).
struct PairEstimate {
  double d_i = 0.0;
  double d_j = 0.0;
  double beta = 0.0;
};

using PairEstimator =
    std::function<PairEstimate(const LocalizationQuery&, const MemoryEntry&)>;

// Ground-truth pair geometry (exact whenever the query/retrieval headings
// differ) plus Gaussian noise on depths and angle. Pass sigmas of zero for
// the noiseless estimator.
PairEstimator make_gt_pair_estimator(double sigma_depth_m,
                                     double sigma_beta_rad, Rng* rng);

struct LocalizationParams {
  int top_k = 5;
  double similarity_threshold = 0.95;
  int median_window = 3;
  int ransac_iters = 100;
  double inlier_radius_m = 0.5;
  int min_inliers = 2;
};

struct LocalizationResult {
  bool localized = false;
  Vec2 position{};
  double theta = 0.0;
  int candidates = 0;
};

struct RansacResult {
  Vec2 centroid{};
  int inliers = 0;
  size_t sample_index = 0;
};

// Best-inlier-set aggregation: repeatedly pick a candidate, count candidates
// within the inlier radius, return the centroid of the best set.
std::optional<RansacResult> ransac_aggregate(std::span<const Vec2> candidates,
                                             int iters, double inlier_radius_m,
                                             int min_inliers, Rng& rng);

LocalizationResult localize_view(const EpisodicMemory& memory,
                                 const LocalizationQuery& query,
                                 const PairEstimator& estimator,
                                 const LocalizationParams& params, Rng& rng);

// Fraction of predictions with position error < k_m; unlocalized = infinite.
double psr_at_k(std::span<const LocalizationResult> predictions,
                std::span<const Vec2> truths, double k_m);

// --- Concept reconstruction ---

struct ReconstructionParams {
  double range_m = 4.0;
  double eps = 1e-3;
};

// Distribution over concepts of what is visible from the query cell through
// the believed map, weighted by 1/(1+d); uniform when nothing was observed.
std::vector<double> reconstruct_concepts(const mapping::OccupancyMap& map,
                                         const mapping::SignatureMap& sigs,
                                         CellCoord query,
                                         const rewards::ConceptSpace& space,
                                         const ReconstructionParams& params = {});

// |top-k(predicted) ∩ support(truth)| / k, ties by lower concept index.
double precision_at_k(std::span<const double> predicted,
                      std::span<const double> truth, int k);

// --- Landmark mining ---

struct LandmarkMiningParams {
  int samples = 256;
  int clusters = 12;
  int kmeans_iters = 25;
  double variance_threshold_m2 = 2.0;
  int min_cluster_size = 3;
  world::SensorConfig sensor;
};

// Clusters sampled view signatures and keeps clusters that are spatially
// tight: their member views are landmark views. Deduplicated, deterministic
// per seed; empty result when no cluster qualifies.
std::vector<world::Pose> mine_landmarks(const world::GridEnvironment& env,
                                        const LandmarkMiningParams& params,
                                        uint64_t seed);

}  // namespace explore::tasks
