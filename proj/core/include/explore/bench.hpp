#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "explore/agents.hpp"
#include "explore/mapping.hpp"
#include "explore/rewards.hpp"
#include "explore/tasks.hpp"
#include "explore/world.hpp"

namespace explore::bench {

// Per-preset constants: episode budgets, reward scales, metric thresholds.
struct PresetDefaults {
  int t_exp = 200;
  int t_nav = 200;
  double eta_success_m = 0.5;
  int frontier_t_max = 20;
  double novelty_cell_m = 0.3;
  double novelty_scale = 0.1;
  double area_scale = 0.01;
  double smooth_scale = 0.3;
  double curiosity_scale = 0.001;
  double curiosity_lr = 0.002;
  int curiosity_patch_cells = 11;
  int recon_period = 1;
  double recon_scale = 0.1;
  double query_spacing_m = 1.0;
  int concept_k = 8;
  int concept_j = 3;
  int concept_samples = 192;
  int concept_iters = 25;
  double object_dist_m = 3.0;
  double object_bearing_deg = 60.0;
  double landmark_bearing_deg = 30.0;
  double landmark_geo_m = 1.0;
  double landmark_depth_diff_m = -1.0;  // < 0: depth check disabled
  double psr_k_m = 1.0;
  bool nav_online_updates = false;
};

PresetDefaults defaults_for(world::Preset preset);

struct ExperimentConfig {
  world::Preset preset = world::Preset::SmallCluttered;
  std::vector<agents::AgentKind> agents;
  uint64_t master_seed = 1;
  std::vector<uint64_t> env_seeds;      // empty: derived from master_seed
  std::vector<uint64_t> episode_seeds;  // empty: derived from master_seed
  int env_count = 2;                    // used when env_seeds is empty
  int episodes_per_env = 2;
  int t_exp = 0;  // 0 = preset default
  std::vector<double> etas = {0.0};
  double gamma = 0.95;  // recorded for completeness; unused by these agents
  bool noisy_occupancy = false;
  double flip_prob = 0.05;
  bool metric_objects = true;
  bool metric_landmarks = true;
  std::vector<int> checkpoints;  // empty = {T/8, T/4, T/2, T}
  std::string output_dir;        // empty = no artifacts written
  int threads = 0;               // 0 = hardware concurrency
};

// Fills env/episode seed lists from master_seed, t_exp and checkpoints from
// the preset; validates invariants (throws std::invalid_argument).
ExperimentConfig resolve_config(ExperimentConfig cfg);

std::string serialize_config(const ExperimentConfig& cfg);
ExperimentConfig deserialize_config(const std::string& text);
void save_config(const ExperimentConfig& cfg, const std::string& path);
ExperimentConfig load_config(const std::string& path);

// --- Episode runner ---

struct StepLog {
  int t = 0;  // 1-based
  world::Action action = world::Action::Forward;
  bool collision = false;
  world::Pose pose;           // true pose after the action
  mapping::PoseEstimate est;  // estimate after the action
  double reward = 0.0;
};

struct Checkpoint {
  int t = 0;
  double area_m2 = 0.0;  // true visited area so far
  int objects = 0;       // distinct objects visited so far
  int landmarks = 0;     // distinct landmark views visited so far
  int64_t explored_cells = 0;
  double reward_sum = 0.0;
  int collisions = 0;
};

struct EpisodeResult {
  world::EpisodeSpec spec;
  agents::AgentKind agent = agents::AgentKind::Random;
  CellCoord anchor;  // env cell of the map origin (episode start)
  std::vector<StepLog> steps;
  std::vector<Checkpoint> checkpoints;
  double reward_sum = 0.0;
  int collisions = 0;
  double area_m2 = 0.0;
  int objects = 0;
  int landmarks = 0;
  mapping::OccupancyMap map{0.25};
  mapping::SignatureMap signatures{0.25};
  tasks::EpisodicMemory memory;
  world::Pose final_pose;
  mapping::PoseEstimate final_est;
};

// Precomputed landmark-visitation data: center-ray depth and focus point of
// the stored view plus a geodesic field from its cell.
struct LandmarkMeta {
  world::Pose pose;
  double depth_m = 0.0;
  double max_range_m = 4.0;  // range the reference depth was measured with
  Vec2 focus_m{};
  std::vector<int32_t> geodesic;  // steps per env cell; -1 unreachable
};

LandmarkMeta make_landmark_meta(const world::GridEnvironment& env,
                                const world::Pose& pose,
                                const world::SensorConfig& sensor);

// Grid analog of the object-visitation rule: Euclidean distance, bearing
// cone, unobstructed line of sight.
bool object_visited_from(const world::GridEnvironment& env,
                         const world::Pose& pose,
                         const world::ObjectInstance& obj,
                         const PresetDefaults& d);

// Landmark rule: heading aligned with the stored view's focus point, small
// geodesic distance, and (large preset) matching center-ray depths.
bool landmark_visited_from(const world::GridEnvironment& env,
                           const world::Pose& pose, const LandmarkMeta& meta,
                           const PresetDefaults& d);

// Signature samples clustered into the environment's concept vocabulary;
// deterministic per environment.
rewards::ConceptSpace env_concept_space(const world::GridEnvironment& env,
                                        const PresetDefaults& d,
                                        const world::SensorConfig& sensor);

// Query grid for the reconstruction paradigm, cells in map coordinates
// (relative to anchor).
rewards::ReconstructionTask make_reconstruction_task(
    const world::GridEnvironment& env, CellCoord anchor,
    const rewards::ConceptSpace& space, const PresetDefaults& d);

struct EpisodeRunParams {
  world::SensorConfig sensor;
  PresetDefaults defaults;
  agents::AgentParams agent_params;
  bool noisy_occupancy = false;
  double flip_prob = 0.05;
  bool metric_objects = true;
  bool metric_landmarks = true;
  std::vector<int> checkpoints;                     // ascending
  const rewards::ConceptSpace* concepts = nullptr;  // reconstruction agent
  std::span<const LandmarkMeta> landmark_metas;     // may be empty
};

// RNG stream base shared by every run of the same (env, episode, agent)
// triple, so conditions (eta, occupancy noise) stay paired.
uint64_t episode_stream_base(uint64_t env_seed, uint64_t episode_seed,
                             agents::AgentKind agent);

// Runs exactly spec.t_exp actions from spec.start, registering scans into a
// fresh map anchored at the start cell. Deterministic.
EpisodeResult run_episode(const world::GridEnvironment& env,
                          agents::AgentKind agent,
                          const world::EpisodeSpec& spec,
                          const EpisodeRunParams& params);

// Deterministic per-environment context exactly as run_suite builds it; the
// CLI rebuilds it to replay suite episodes for eval and rendering. Takes a
// resolved config.
struct EnvContext {
  world::GridEnvironment env;
  rewards::ConceptSpace concepts;
  std::vector<LandmarkMeta> metas;
  std::vector<world::EpisodeSpec> specs;  // one per episode seed, eta 0
};

EnvContext make_env_context(const ExperimentConfig& cfg, size_t env_index);

// Episode parameters a suite job uses; concepts/landmark_metas point into ctx.
EpisodeRunParams suite_run_params(const ExperimentConfig& cfg,
                                  const EnvContext& ctx);

// job index = ((agent * envs + env) * episodes + episode) * etas + eta
struct JobCoord {
  size_t agent = 0, env = 0, episode = 0, eta = 0;
};
size_t job_count(const ExperimentConfig& cfg);
size_t job_index(const ExperimentConfig& cfg, const JobCoord& c);
JobCoord job_coord(const ExperimentConfig& cfg, size_t index);

// --- Metrics & normalization ---

struct OracleBest {
  double area_m2 = 0.0;
  int objects = 0;
  int landmarks = 0;
};

// Best raw score per metric over the three oracle variants on the identical
// episode (eta 0, clean occupancy).
OracleBest best_oracle_scores(const world::GridEnvironment& env,
                              const world::EpisodeSpec& spec,
                              const EpisodeRunParams& params);

struct Normalized {
  double value = 0.0;
  bool absolute = false;  // oracle score was zero; value is the raw score
};

Normalized normalize_metric(double raw, double oracle_best);

// Noise-robustness coefficient: noisy / clean normalized means.
double nrc(double noisy_norm, double clean_norm);

// (method - random) / (oracle - random); nullopt when the denominator
// degenerates.
std::optional<double> skill_value(double method, double random_score,
                                  double oracle_score);

struct MetricRecord {
  std::string kind;  // explore | nav | loc | recon
  std::string preset;
  std::string agent;
  uint64_t env_seed = 0;
  uint64_t episode_seed = 0;
  double eta = 0.0;
  bool noisy = false;
  int t = 0;
  std::optional<double> area_m2, norm_area;
  std::optional<int> objects;
  std::optional<double> norm_objects;
  std::optional<int> landmarks;
  std::optional<double> norm_landmarks;
  std::optional<int64_t> explored_cells;
  std::optional<double> reward_sum;
  std::optional<int> collisions;
  std::optional<double> spl, success_rate, psr, precision, kl;
  std::string flags;  // e.g. "area_abs" when oracle score was zero
  std::string error;
};

std::string csv_header();
std::string to_csv_row(const MetricRecord& r);

// --- Suite ---

struct SuiteResult {
  ExperimentConfig config;  // resolved
  std::vector<MetricRecord> records;
  int episode_failures = 0;
  std::string run_dir;  // empty when nothing was written
};

// Cross product agents x env seeds x episode seeds x etas; episodes may run
// concurrently but records are emitted in job-index order, so the output is
// a pure function of the config. Writes config.json, records.csv and
// episodes/*.jsonl under output_dir when set.
SuiteResult run_suite(const ExperimentConfig& cfg);

struct CheckReport {
  int failures = 0;
  std::vector<std::string> messages;
};

// Post-run assertions (--check): complete record grid, area curves
// non-decreasing, best oracle normalizes to 1 on clean eta-0 episodes.
CheckReport check_suite(const SuiteResult& suite);

// --- Rendering ---

// Occupancy map as PGM: unexplored black, free grey, obstacle white.
void write_map_pgm(const mapping::OccupancyMap& map, const std::string& path);

// Believed map with the true trajectory as PPM: unexplored black, free
// green, obstacle white, trajectory shaded blue (early) to red (late).
void write_trajectory_ppm(const mapping::OccupancyMap& map,
                          std::span<const StepLog> steps, CellCoord anchor,
                          world::Pose start, const std::string& path);

std::string episode_log_json(const EpisodeResult& r,
                             const std::string& preset_name, bool noisy);

}  // namespace explore::bench
