#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "explore/geometry.hpp"
#include "explore/rng.hpp"
#include "explore/world.hpp"

namespace explore::rewards {

// Visit counts on a coarse reward grid of width cell_width meters, anchored
// at the episode start. Sum of counts equals the number of recorded steps.
struct NoveltyState {
  double cell_width = 0.5;
  double scale = 0.1;
  std::unordered_map<uint64_t, int, CellKeyHash> counts;

  CellCoord grid_cell(Vec2 pos_m) const {
    return {static_cast<int>(std::lround(pos_m.x / cell_width)),
            static_cast<int>(std::lround(pos_m.y / cell_width))};
  }
  int count(Vec2 pos_m) const {
    auto it = counts.find(cell_key(grid_cell(pos_m)));
    return it == counts.end() ? 0 : it->second;
  }
};

// Increments the visit count for the current position, then pays
// scale / sqrt(n).
double novelty_update_and_reward(NoveltyState& state, Vec2 pos_m);

struct CoverageState {
  double scale = 0.3;                // smooth-coverage scale
  double area_scale = 0.001;         // area-coverage scale
  double area_m2 = 0.0;              // cumulative A_t
  std::unordered_map<uint64_t, int, CellKeyHash> region_counts;
};

// r = area_scale * (A_t - A_{t-1}); newly_seen_area_m2 must be >= 0.
double area_coverage_reward(CoverageState& state, double newly_seen_area_m2);

// Regions currently in view get their counts incremented, then
// r = scale * mean(1/sqrt(n_i)) over those regions. Empty view pays 0.
double smooth_coverage_reward(CoverageState& state,
                              std::span<const CellCoord> seen_now);

// Per-action affine one-step predictor over a feature embedding; reward is
// the squared prediction error before a single SGD step on that transition.
class CuriosityModel {
 public:
  CuriosityModel(int feature_dim, int action_count, double learning_rate,
                 double scale);

  int feature_dim() const { return dim_; }
  double scale() const { return scale_; }

  std::vector<double> predict(std::span<const double> phi, int action) const;
  // Returns scale * ||D_a(phi_t) - phi_next||^2, then updates D_a.
  double reward_and_update(std::span<const double> phi_t, int action,
                           std::span<const double> phi_next);

 private:
  int dim_;
  int actions_;
  double alpha_;
  double scale_;
  std::vector<std::vector<double>> w_;  // per action, dim x dim row-major
  std::vector<std::vector<double>> b_;
};

// Feature embedding used by the greedy curiosity agent: flattened one-hot of
// an NxN egocentric state patch plus a heading one-hot.
std::vector<double> one_hot_patch_feature(std::span<const uint8_t> states,
                                          int heading, int heading_count);

struct ConceptSpace {
  int k = 0;
  int dim = 0;
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
};

// k-means with k-means++ seeding and Lloyd iterations; deterministic per
// seed. Rejects k > sample count. When inertia_trace is given it receives the
// inertia after every Lloyd update (a non-increasing sequence).
ConceptSpace discover_concepts(const std::vector<std::vector<double>>& samples,
                               int k, int max_iters, uint64_t seed,
                               std::vector<double>* inertia_trace = nullptr);

int nearest_concept(std::span<const double> sig, const ConceptSpace& space);

// Uniform 1/J over the J nearest centroids; ties broken by lower index.
std::vector<double> true_concept_distribution(std::span<const double> sig,
                                              const ConceptSpace& space, int j);

// KL(p || q); q entries are raised to at least eps and renormalized. Inputs
// must each sum to 1 within 1e-9.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double eps = 1e-6);

// Query set for the reconstruction paradigm. Rewards are issued every
// `period` steps as scale * (L_{t-period} - L_t), L = mean query KL.
struct ReconstructionTask {
  std::vector<CellCoord> query_cells;           // map-frame bins
  std::vector<std::vector<double>> true_dists;
  int period = 5;
  double scale = 1.0;
  double last_loss = 0.0;
  bool has_last = false;
  std::vector<double> query_losses;             // updated on each evaluation
};

double reconstruction_loss(const ReconstructionTask& task,
                           const std::vector<std::vector<double>>& predictions);
// Evaluates at step t; returns 0 when t is not a period boundary.
double reconstruction_reward(ReconstructionTask& task,
                             const std::vector<std::vector<double>>& predictions,
                             int t);

std::string serialize_concepts(const ConceptSpace& space);
ConceptSpace deserialize_concepts(const std::string& text);
void save_concepts(const ConceptSpace& space, const std::string& path);
ConceptSpace load_concepts(const std::string& path);

}  // namespace explore::rewards
