#include "explore/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <unordered_set>
#include <utility>

#include <json.hpp>

namespace explore::bench {

using nlohmann::json;

PresetDefaults defaults_for(world::Preset preset) {
  PresetDefaults d;  // small-cluttered values are the member defaults
  if (preset == world::Preset::LargeOpen) {
    d.t_exp = 500;
    d.t_nav = 500;
    d.eta_success_m = 0.25;
    d.frontier_t_max = 200;
    d.novelty_cell_m = 0.5;
    d.area_scale = 0.001;
    d.curiosity_scale = 0.0001;
    d.recon_period = 5;
    d.recon_scale = 1.0;
    d.query_spacing_m = 2.0;
    d.landmark_bearing_deg = 20.0;
    d.landmark_geo_m = 2.0;
    d.landmark_depth_diff_m = 0.5;
    d.nav_online_updates = true;
  }
  return d;
}

ExperimentConfig resolve_config(ExperimentConfig cfg) {
  const PresetDefaults d = defaults_for(cfg.preset);
  if (cfg.t_exp <= 0) cfg.t_exp = d.t_exp;

  if (cfg.env_seeds.empty()) {
    if (cfg.env_count <= 0)
      throw std::invalid_argument("config: env_count must be positive");
    for (int i = 0; i < cfg.env_count; ++i)
      cfg.env_seeds.push_back(
          mix_key(cfg.master_seed, mix_key(hash_string("env"), i)));
  }
  if (cfg.episode_seeds.empty()) {
    if (cfg.episodes_per_env <= 0)
      throw std::invalid_argument("config: episodes_per_env must be positive");
    for (int i = 0; i < cfg.episodes_per_env; ++i)
      cfg.episode_seeds.push_back(
          mix_key(cfg.master_seed, mix_key(hash_string("episode"), i)));
  }
  cfg.env_count = static_cast<int>(cfg.env_seeds.size());
  cfg.episodes_per_env = static_cast<int>(cfg.episode_seeds.size());

  if (cfg.agents.empty())
    cfg.agents.assign(std::begin(agents::kAllAgentKinds),
                      std::end(agents::kAllAgentKinds));

  if (cfg.etas.empty()) throw std::invalid_argument("config: etas is empty");
  for (double eta : cfg.etas)
    if (!(eta >= 0.0))
      throw std::invalid_argument("config: eta must be >= 0");
  if (cfg.flip_prob < 0.0 || cfg.flip_prob > 1.0)
    throw std::invalid_argument("config: flip_prob outside [0, 1]");
  if (cfg.threads < 0)
    throw std::invalid_argument("config: threads must be >= 0");

  if (cfg.checkpoints.empty()) {
    for (int div : {8, 4, 2, 1}) {
      const int t = cfg.t_exp / div;
      if (t > 0) cfg.checkpoints.push_back(t);
    }
  }
  std::sort(cfg.checkpoints.begin(), cfg.checkpoints.end());
  cfg.checkpoints.erase(
      std::unique(cfg.checkpoints.begin(), cfg.checkpoints.end()),
      cfg.checkpoints.end());
  for (int t : cfg.checkpoints)
    if (t < 0 || t > cfg.t_exp)
      throw std::invalid_argument("config: checkpoint outside [0, t_exp]");
  // the final step is always a checkpoint; summaries key off it
  if (cfg.checkpoints.empty() || cfg.checkpoints.back() != cfg.t_exp)
    cfg.checkpoints.push_back(cfg.t_exp);
  return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json j;
  j["version"] = 1;
  j["preset"] = world::to_string(cfg.preset);
  std::vector<std::string> names;
  names.reserve(cfg.agents.size());
  for (auto a : cfg.agents) names.emplace_back(agents::to_string(a));
  j["agents"] = names;
  j["master_seed"] = cfg.master_seed;
  j["env_seeds"] = cfg.env_seeds;
  j["episode_seeds"] = cfg.episode_seeds;
  j["env_count"] = cfg.env_count;
  j["episodes_per_env"] = cfg.episodes_per_env;
  j["t_exp"] = cfg.t_exp;
  j["etas"] = cfg.etas;
  j["gamma"] = cfg.gamma;
  j["noisy_occupancy"] = cfg.noisy_occupancy;
  j["flip_prob"] = cfg.flip_prob;
  j["metric_objects"] = cfg.metric_objects;
  j["metric_landmarks"] = cfg.metric_landmarks;
  j["checkpoints"] = cfg.checkpoints;
  j["output_dir"] = cfg.output_dir;
  j["threads"] = cfg.threads;
  return j.dump(2) + "\n";
}

ExperimentConfig deserialize_config(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig cfg;
  if (j.contains("preset")) {
    const auto p = world::preset_from_string(j.at("preset").get<std::string>());
    if (!p) throw std::invalid_argument("config: unknown preset");
    cfg.preset = *p;
  }
  if (j.contains("agents")) {
    cfg.agents.clear();
    for (const auto& s : j.at("agents")) {
      const auto k = agents::agent_from_string(s.get<std::string>());
      if (!k)
        throw std::invalid_argument("config: unknown agent " +
                                    s.get<std::string>());
      cfg.agents.push_back(*k);
    }
  }
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  if (j.contains("env_seeds"))
    cfg.env_seeds = j.at("env_seeds").get<std::vector<uint64_t>>();
  if (j.contains("episode_seeds"))
    cfg.episode_seeds = j.at("episode_seeds").get<std::vector<uint64_t>>();
  cfg.env_count = j.value("env_count", cfg.env_count);
  cfg.episodes_per_env = j.value("episodes_per_env", cfg.episodes_per_env);
  cfg.t_exp = j.value("t_exp", cfg.t_exp);
  if (j.contains("etas")) cfg.etas = j.at("etas").get<std::vector<double>>();
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.noisy_occupancy = j.value("noisy_occupancy", cfg.noisy_occupancy);
  cfg.flip_prob = j.value("flip_prob", cfg.flip_prob);
  cfg.metric_objects = j.value("metric_objects", cfg.metric_objects);
  cfg.metric_landmarks = j.value("metric_landmarks", cfg.metric_landmarks);
  if (j.contains("checkpoints"))
    cfg.checkpoints = j.at("checkpoints").get<std::vector<int>>();
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.threads = j.value("threads", cfg.threads);
  return cfg;
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << serialize_config(cfg);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return deserialize_config(text);
}

// --- Episode runner ---

namespace {

// Same definition as world::view_signature, computed from an already-taken
// observation: weights fall off with center distance in cells.
world::Signature signature_from_observation(const world::Observation& obs) {
  world::Signature acc{};
  double wsum = 0.0;
  for (const auto& vc : obs.visible) {
    const double dist = std::hypot(vc.cell.x - obs.sensor_pose.cell.x,
                                   vc.cell.y - obs.sensor_pose.cell.y);
    const double w = 1.0 / (1.0 + dist);
    for (int i = 0; i < world::kSignatureDim; ++i) acc[i] += w * vc.signature[i];
    wsum += w;
  }
  if (wsum > 0.0)
    for (auto& v : acc) v /= wsum;
  return acc;
}

std::vector<double> curiosity_feature(const mapping::OccupancyMap& map,
                                      const mapping::PoseEstimate& est,
                                      int patch_cells) {
  const auto crop =
      mapping::egocentric_crop(map, est, patch_cells * map.bin_size());
  const std::span<const uint8_t> states{
      reinterpret_cast<const uint8_t*>(crop.cells.data()), crop.cells.size()};
  return rewards::one_hot_patch_feature(
      states, agents::heading_from_angle(est.theta), world::kHeadings);
}

enum class Paradigm { None, Novelty, Area, Smooth, Curiosity, Recon };

Paradigm paradigm_of(agents::AgentKind k) {
  switch (k) {
    case agents::AgentKind::GreedyNovelty: return Paradigm::Novelty;
    case agents::AgentKind::GreedyCoverage: return Paradigm::Area;
    case agents::AgentKind::GreedySmoothCoverage: return Paradigm::Smooth;
    case agents::AgentKind::GreedyCuriosity: return Paradigm::Curiosity;
    case agents::AgentKind::GreedyReconstruction: return Paradigm::Recon;
    default: return Paradigm::None;
  }
}

}  // namespace

LandmarkMeta make_landmark_meta(const world::GridEnvironment& env,
                                const world::Pose& pose,
                                const world::SensorConfig& sensor) {
  LandmarkMeta m;
  m.pose = pose;
  const double cs = env.cell_size();
  m.max_range_m = sensor.max_range_m(cs);
  const auto ray = world::center_ray(env, pose, m.max_range_m);
  m.depth_m = ray.depth_m;
  const double th = world::heading_angle(pose.heading);
  m.focus_m = {pose.cell.x * cs + m.depth_m * std::cos(th),
               pose.cell.y * cs + m.depth_m * std::sin(th)};

  m.geodesic.assign(static_cast<size_t>(env.width()) * env.height(), -1);
  if (!env.free(pose.cell)) return m;
  std::deque<CellCoord> queue;
  m.geodesic[env.index(pose.cell)] = 0;
  queue.push_back(pose.cell);
  while (!queue.empty()) {
    const CellCoord c = queue.front();
    queue.pop_front();
    const int32_t dist = m.geodesic[env.index(c)];
    for (int k = 0; k < 4; ++k) {
      const CellCoord step = world::cardinal_delta(k);
      const CellCoord n{c.x + step.x, c.y + step.y};
      if (!env.free(n)) continue;
      int32_t& g = m.geodesic[env.index(n)];
      if (g >= 0) continue;
      g = dist + 1;
      queue.push_back(n);
    }
  }
  return m;
}

bool object_visited_from(const world::GridEnvironment& env,
                         const world::Pose& pose,
                         const world::ObjectInstance& obj,
                         const PresetDefaults& d) {
  const double cs = env.cell_size();
  const double dx = (obj.cell.x - pose.cell.x) * cs;
  const double dy = (obj.cell.y - pose.cell.y) * cs;
  if (std::hypot(dx, dy) >= d.object_dist_m) return false;
  if (obj.cell == pose.cell) return true;
  const double bearing = std::abs(
      wrap_angle(std::atan2(dy, dx) - world::heading_angle(pose.heading)));
  if (bearing > d.object_bearing_deg * std::numbers::pi / 180.0 + 1e-12)
    return false;
  return world::line_of_sight(env, pose.cell, obj.cell);
}

bool landmark_visited_from(const world::GridEnvironment& env,
                           const world::Pose& pose, const LandmarkMeta& meta,
                           const PresetDefaults& d) {
  if (!env.in_bounds(pose.cell) || meta.geodesic.empty()) return false;
  const double cs = env.cell_size();
  const int32_t steps = meta.geodesic[env.index(pose.cell)];
  if (steps < 0) return false;
  if (steps * cs >= d.landmark_geo_m) return false;

  const Vec2 here{pose.cell.x * cs, pose.cell.y * cs};
  const Vec2 to{meta.focus_m.x - here.x, meta.focus_m.y - here.y};
  double theta;
  if (std::hypot(to.x, to.y) < 1e-9) {
    // standing on the focus point: compare headings directly
    theta = std::abs(wrap_angle(world::heading_angle(pose.heading) -
                                world::heading_angle(meta.pose.heading)));
  } else {
    theta = std::abs(wrap_angle(std::atan2(to.y, to.x) -
                                world::heading_angle(pose.heading)));
  }
  if (theta >= d.landmark_bearing_deg * std::numbers::pi / 180.0) return false;

  if (d.landmark_depth_diff_m >= 0.0) {
    const auto ray = world::center_ray(env, pose, meta.max_range_m);
    if (std::abs(ray.depth_m - meta.depth_m) >= d.landmark_depth_diff_m)
      return false;
  }
  return true;
}

rewards::ConceptSpace env_concept_space(const world::GridEnvironment& env,
                                        const PresetDefaults& d,
                                        const world::SensorConfig& sensor) {
  const auto free = env.free_cells();
  if (free.empty())
    throw std::invalid_argument("env_concept_space: environment has no free cells");
  Rng rng = Rng::stream(env.seed(), hash_string("concept-views"));
  const int n = std::max(d.concept_samples, d.concept_k);
  std::vector<std::vector<double>> samples;
  samples.reserve(n);
  for (int i = 0; i < n; ++i) {
    const world::Pose pose{free[rng.index(free.size())],
                           static_cast<int>(rng.index(world::kHeadings))};
    const auto sig = world::view_signature(env, pose, sensor);
    samples.emplace_back(sig.begin(), sig.end());
  }
  return rewards::discover_concepts(
      samples, d.concept_k, d.concept_iters,
      mix_key(env.seed(), hash_string("concept-kmeans")));
}

rewards::ReconstructionTask make_reconstruction_task(
    const world::GridEnvironment& env, CellCoord anchor,
    const rewards::ConceptSpace& space, const PresetDefaults& d) {
  rewards::ReconstructionTask task;
  task.period = d.recon_period;
  task.scale = d.recon_scale;
  const double cs = env.cell_size();
  const int q =
      std::max(1, static_cast<int>(std::lround(d.query_spacing_m / cs)));
  for (const CellCoord& c : env.free_cells()) {
    if (c.x % q != 0 || c.y % q != 0) continue;
    task.query_cells.push_back({c.x - anchor.x, c.y - anchor.y});
    const auto& sig = env.signature(c);
    task.true_dists.push_back(rewards::true_concept_distribution(
        std::span<const double>(sig.data(), sig.size()), space, d.concept_j));
  }
  return task;
}

uint64_t episode_stream_base(uint64_t env_seed, uint64_t episode_seed,
                             agents::AgentKind agent) {
  return mix_key(mix_key(env_seed, episode_seed),
                 hash_string(agents::to_string(agent)));
}

EpisodeResult run_episode(const world::GridEnvironment& env,
                          agents::AgentKind kind,
                          const world::EpisodeSpec& spec,
                          const EpisodeRunParams& params) {
  if (spec.t_exp < 0)
    throw std::invalid_argument("run_episode: negative t_exp");
  if (!env.free(spec.start.cell))
    throw std::invalid_argument("run_episode: start cell is not free");

  const PresetDefaults& d = params.defaults;
  const double cs = env.cell_size();

  EpisodeResult r;
  r.spec = spec;
  r.agent = kind;
  r.anchor = spec.start.cell;
  r.map = mapping::OccupancyMap(cs);
  r.signatures = mapping::SignatureMap(cs);
  r.steps.reserve(spec.t_exp);

  // Stream keys deliberately exclude eta and the noise flags, so conditions
  // of the same (env, episode, agent) triple stay paired draw-for-draw.
  const uint64_t base = episode_stream_base(env.seed(), spec.episode_seed, kind);
  Rng motion_rng = Rng::stream(base, hash_string("motion"));
  Rng scan_rng = Rng::stream(base, hash_string("scan"));
  auto agent = agents::make_agent(kind, params.agent_params,
                                  mix_key(base, hash_string("policy")));

  mapping::OdometryNoiseModel noise;
  noise.eta = spec.eta;
  noise.forward_magnitude = cs;
  mapping::ScanNoise scan_noise{params.flip_prob, &scan_rng};
  const mapping::ScanNoise* scan =
      params.noisy_occupancy ? &scan_noise : nullptr;

  const Paradigm paradigm = paradigm_of(kind);
  rewards::NoveltyState nov;
  nov.cell_width = d.novelty_cell_m;
  nov.scale = d.novelty_scale;
  rewards::CoverageState cov;
  cov.scale = d.smooth_scale;
  cov.area_scale = d.area_scale;
  std::optional<rewards::CuriosityModel> cur;
  rewards::ReconstructionTask recon;
  if (paradigm == Paradigm::Curiosity) {
    const int dim =
        d.curiosity_patch_cells * d.curiosity_patch_cells * 3 + world::kHeadings;
    cur.emplace(dim, 3, d.curiosity_lr, d.curiosity_scale);
  }
  if (paradigm == Paradigm::Recon && params.concepts != nullptr)
    recon = make_reconstruction_task(env, r.anchor, *params.concepts, d);
  const tasks::ReconstructionParams recon_eval{params.sensor.max_range_m(cs),
                                               1e-3};

  std::unordered_set<uint64_t, CellKeyHash> seen;
  std::vector<uint8_t> obj_seen(env.objects().size(), 0);
  std::vector<uint8_t> lm_seen(params.landmark_metas.size(), 0);
  int obj_count = 0;
  int lm_count = 0;
  const auto update_visitation = [&](const world::Pose& pose,
                                     const world::Observation& obs) {
    for (const auto& vc : obs.visible) seen.insert(cell_key(vc.cell));
    if (params.metric_objects) {
      const auto& objs = env.objects();
      for (size_t i = 0; i < objs.size(); ++i) {
        if (!obj_seen[i] && object_visited_from(env, pose, objs[i], d)) {
          obj_seen[i] = 1;
          ++obj_count;
        }
      }
    }
    if (params.metric_landmarks) {
      for (size_t i = 0; i < params.landmark_metas.size(); ++i) {
        if (!lm_seen[i] &&
            landmark_visited_from(env, pose, params.landmark_metas[i], d)) {
          lm_seen[i] = 1;
          ++lm_count;
        }
      }
    }
  };

  world::Pose pose = spec.start;
  mapping::PoseEstimate est{0.0, 0.0, world::heading_angle(pose.heading)};
  world::Observation obs = world::observe(env, pose, params.sensor);
  mapping::register_scan(r.map, obs, est, scan);
  r.signatures.record(obs, est);
  update_visitation(pose, obs);
  cov.area_m2 = static_cast<double>(seen.size()) * cs * cs;  // A_0

  size_t ckpt_i = 0;
  const auto maybe_checkpoint = [&](int t) {
    while (ckpt_i < params.checkpoints.size() &&
           params.checkpoints[ckpt_i] <= t) {
      if (params.checkpoints[ckpt_i] == t)
        r.checkpoints.push_back({t, static_cast<double>(seen.size()) * cs * cs,
                                 obj_count, lm_count, r.map.explored_cells(),
                                 r.reward_sum, r.collisions});
      ++ckpt_i;
    }
  };
  maybe_checkpoint(0);

  double last_reward = 0.0;
  for (int t = 1; t <= spec.t_exp; ++t) {
    agents::AgentStepView view;
    view.env = &env;
    view.obs = &obs;
    view.map = &r.map;
    view.est = &est;
    view.rewards.novelty = &nov;
    view.rewards.coverage = &cov;
    view.rewards.reconstruction = &recon;
    view.rewards.last_reward = last_reward;
    view.t = t - 1;

    std::vector<double> phi_t;
    if (cur) phi_t = curiosity_feature(r.map, est, d.curiosity_patch_cells);

    const world::Action action = agent->act(view);
    auto sr = world::step(env, pose, action, params.sensor, noise, motion_rng);
    pose = sr.pose;
    obs = std::move(sr.obs);
    if (obs.collision) ++r.collisions;
    est = mapping::integrate_odometry(est, obs.odometry);
    mapping::register_scan(r.map, obs, est, scan);
    r.signatures.record(obs, est);

    tasks::MemoryEntry me;
    me.signature = signature_from_observation(obs);
    me.est = est;
    me.center_depth_m =
        world::center_ray(env, pose, params.sensor.max_range_m(cs)).depth_m;
    me.true_pos_m = {(pose.cell.x - r.anchor.x) * cs,
                     (pose.cell.y - r.anchor.y) * cs};
    me.true_theta = world::heading_angle(pose.heading);
    me.t = t;
    r.memory.entries.push_back(std::move(me));

    update_visitation(pose, obs);

    double reward = 0.0;
    switch (paradigm) {
      case Paradigm::None:
        break;
      case Paradigm::Novelty:
        reward = rewards::novelty_update_and_reward(
            nov, {(pose.cell.x - r.anchor.x) * cs,
                  (pose.cell.y - r.anchor.y) * cs});
        break;
      case Paradigm::Area: {
        const double now = static_cast<double>(seen.size()) * cs * cs;
        reward = rewards::area_coverage_reward(cov, now - cov.area_m2);
        break;
      }
      case Paradigm::Smooth: {
        std::vector<CellCoord> in_view;
        in_view.reserve(obs.visible.size());
        for (const auto& vc : obs.visible)
          in_view.push_back({vc.cell.x - r.anchor.x, vc.cell.y - r.anchor.y});
        reward = rewards::smooth_coverage_reward(cov, in_view);
        break;
      }
      case Paradigm::Curiosity: {
        const auto phi_next =
            curiosity_feature(r.map, est, d.curiosity_patch_cells);
        reward =
            cur->reward_and_update(phi_t, static_cast<int>(action), phi_next);
        break;
      }
      case Paradigm::Recon: {
        if (!recon.query_cells.empty() && recon.period > 0 &&
            t % recon.period == 0) {
          std::vector<std::vector<double>> preds;
          preds.reserve(recon.query_cells.size());
          for (const CellCoord& qc : recon.query_cells)
            preds.push_back(tasks::reconstruct_concepts(
                r.map, r.signatures, qc, *params.concepts, recon_eval));
          reward = rewards::reconstruction_reward(recon, preds, t);
        }
        break;
      }
    }
    r.reward_sum += reward;
    last_reward = reward;
    r.steps.push_back({t, action, obs.collision, pose, est, reward});
    maybe_checkpoint(t);
  }

  r.area_m2 = static_cast<double>(seen.size()) * cs * cs;
  r.objects = obj_count;
  r.landmarks = lm_count;
  r.final_pose = pose;
  r.final_est = est;
  return r;
}

EnvContext make_env_context(const ExperimentConfig& cfg, size_t env_index) {
  if (env_index >= cfg.env_seeds.size())
    throw std::out_of_range("make_env_context: env_index");
  const PresetDefaults d = defaults_for(cfg.preset);
  const world::SensorConfig sensor;
  EnvContext ctx;
  ctx.env = world::generate_environment(cfg.env_seeds[env_index], cfg.preset);
  ctx.concepts = env_concept_space(ctx.env, d, sensor);
  ctx.metas.reserve(ctx.env.landmark_views().size());
  for (const auto& lv : ctx.env.landmark_views())
    ctx.metas.push_back(make_landmark_meta(ctx.env, lv, sensor));
  ctx.specs.reserve(cfg.episode_seeds.size());
  for (uint64_t es : cfg.episode_seeds)
    ctx.specs.push_back(world::sample_episode(ctx.env, es, cfg.t_exp, 0.0));
  return ctx;
}

EpisodeRunParams suite_run_params(const ExperimentConfig& cfg,
                                  const EnvContext& ctx) {
  const PresetDefaults d = defaults_for(cfg.preset);
  EpisodeRunParams p;
  p.sensor = world::SensorConfig{};
  p.defaults = d;
  p.agent_params.frontier.t_max = d.frontier_t_max;
  p.noisy_occupancy = cfg.noisy_occupancy;
  p.flip_prob = cfg.flip_prob;
  p.metric_objects = cfg.metric_objects;
  p.metric_landmarks = cfg.metric_landmarks;
  p.checkpoints = cfg.checkpoints;
  p.concepts = &ctx.concepts;
  p.landmark_metas = ctx.metas;
  return p;
}

size_t job_count(const ExperimentConfig& cfg) {
  return cfg.agents.size() * cfg.env_seeds.size() * cfg.episode_seeds.size() *
         cfg.etas.size();
}

size_t job_index(const ExperimentConfig& cfg, const JobCoord& c) {
  return ((c.agent * cfg.env_seeds.size() + c.env) * cfg.episode_seeds.size() +
          c.episode) *
             cfg.etas.size() +
         c.eta;
}

JobCoord job_coord(const ExperimentConfig& cfg, size_t index) {
  JobCoord c;
  c.eta = index % cfg.etas.size();
  index /= cfg.etas.size();
  c.episode = index % cfg.episode_seeds.size();
  index /= cfg.episode_seeds.size();
  c.env = index % cfg.env_seeds.size();
  c.agent = index / cfg.env_seeds.size();
  return c;
}

// --- Metrics & normalization ---

OracleBest best_oracle_scores(const world::GridEnvironment& env,
                              const world::EpisodeSpec& spec,
                              const EpisodeRunParams& params) {
  world::EpisodeSpec clean = spec;
  clean.eta = 0.0;
  EpisodeRunParams p = params;
  p.noisy_occupancy = false;
  p.concepts = nullptr;
  p.checkpoints.clear();
  OracleBest best;
  for (const auto kind :
       {agents::AgentKind::OracleRandom, agents::AgentKind::OracleLandmarks,
        agents::AgentKind::OracleObjects}) {
    const auto res = run_episode(env, kind, clean, p);
    best.area_m2 = std::max(best.area_m2, res.area_m2);
    best.objects = std::max(best.objects, res.objects);
    best.landmarks = std::max(best.landmarks, res.landmarks);
  }
  return best;
}

Normalized normalize_metric(double raw, double oracle_best) {
  if (oracle_best <= 0.0) return {raw, true};
  return {raw / oracle_best, false};
}

double nrc(double noisy_norm, double clean_norm) {
  if (clean_norm == 0.0)
    throw std::invalid_argument("nrc: clean score is zero");
  return noisy_norm / clean_norm;
}

std::optional<double> skill_value(double method, double random_score,
                                  double oracle_score) {
  const double denom = oracle_score - random_score;
  if (std::abs(denom) < 1e-12) return std::nullopt;
  return (method - random_score) / denom;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void append_int(std::string& out, int64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void append_uint(std::string& out, uint64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace

std::string csv_header() {
  return "kind,preset,agent,env_seed,episode_seed,eta,noisy,t,"
         "area_m2,norm_area,objects,norm_objects,landmarks,norm_landmarks,"
         "explored_cells,reward_sum,collisions,spl,success_rate,psr,"
         "precision,kl,flags,error";
}

std::string to_csv_row(const MetricRecord& r) {
  std::string out;
  out.reserve(256);
  const auto optf = [&](const std::optional<double>& v) {
    out.push_back(',');
    if (v) append_double(out, *v);
  };
  const auto opti = [&](const std::optional<int>& v) {
    out.push_back(',');
    if (v) append_int(out, *v);
  };

  out += csv_safe(r.kind);
  out.push_back(',');
  out += csv_safe(r.preset);
  out.push_back(',');
  out += csv_safe(r.agent);
  out.push_back(',');
  append_uint(out, r.env_seed);
  out.push_back(',');
  append_uint(out, r.episode_seed);
  out.push_back(',');
  append_double(out, r.eta);
  out.push_back(',');
  out += r.noisy ? '1' : '0';
  out.push_back(',');
  append_int(out, r.t);
  optf(r.area_m2);
  optf(r.norm_area);
  opti(r.objects);
  optf(r.norm_objects);
  opti(r.landmarks);
  optf(r.norm_landmarks);
  out.push_back(',');
  if (r.explored_cells) append_int(out, *r.explored_cells);
  optf(r.reward_sum);
  opti(r.collisions);
  optf(r.spl);
  optf(r.success_rate);
  optf(r.psr);
  optf(r.precision);
  optf(r.kl);
  out.push_back(',');
  out += csv_safe(r.flags);
  out.push_back(',');
  out += csv_safe(r.error);
  return out;
}

// --- Suite ---

SuiteResult run_suite(const ExperimentConfig& raw) {
  SuiteResult out;
  ExperimentConfig cfg = resolve_config(raw);
  out.config = cfg;

  const size_t ne = cfg.env_seeds.size();
  const size_t ns = cfg.episode_seeds.size();

  const int threads =
      cfg.threads > 0
          ? cfg.threads
          : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  std::mutex err_mu;
  std::exception_ptr first_error;
  const auto parallel_for = [&](size_t n, auto&& body) {
    const auto run_one = [&](size_t i) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    };
    const size_t tn = std::min(static_cast<size_t>(threads), n);
    if (tn <= 1) {
      for (size_t i = 0; i < n; ++i) run_one(i);
    } else {
      std::atomic<size_t> next{0};
      std::vector<std::thread> pool;
      pool.reserve(tn);
      for (size_t w = 0; w < tn; ++w)
        pool.emplace_back([&] {
          for (size_t i; (i = next.fetch_add(1)) < n;) run_one(i);
        });
      for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
  };

  std::vector<EnvContext> envs(ne);
  parallel_for(ne, [&](size_t e) { envs[e] = make_env_context(cfg, e); });

  std::vector<OracleBest> obest(ne * ns);
  parallel_for(ne * ns, [&](size_t i) {
    const size_t e = i / ns, s = i % ns;
    obest[i] = best_oracle_scores(envs[e].env, envs[e].specs[s],
                                  suite_run_params(cfg, envs[e]));
  });

  const size_t total = job_count(cfg);
  std::vector<std::vector<MetricRecord>> rows(total);
  std::vector<std::string> logs(total);
  std::vector<uint8_t> failed(total, 0);
  const bool write_logs = !cfg.output_dir.empty();

  parallel_for(total, [&](size_t i) {
    const JobCoord jc = job_coord(cfg, i);
    const size_t a = jc.agent, e = jc.env, s = jc.episode, h = jc.eta;

    const EnvContext& ctx = envs[e];
    world::EpisodeSpec spec = ctx.specs[s];
    spec.eta = cfg.etas[h];

    const EpisodeRunParams p = suite_run_params(cfg, ctx);

    MetricRecord proto;
    proto.kind = "explore";
    proto.preset = world::to_string(cfg.preset);
    proto.agent = agents::to_string(cfg.agents[a]);
    proto.env_seed = cfg.env_seeds[e];
    proto.episode_seed = cfg.episode_seeds[s];
    proto.eta = cfg.etas[h];
    proto.noisy = cfg.noisy_occupancy;

    try {
      const EpisodeResult res = run_episode(ctx.env, cfg.agents[a], spec, p);
      const OracleBest& ob = obest[e * ns + s];
      for (const Checkpoint& c : res.checkpoints) {
        MetricRecord rec = proto;
        rec.t = c.t;
        rec.area_m2 = c.area_m2;
        std::string flags;
        const auto narea = normalize_metric(c.area_m2, ob.area_m2);
        rec.norm_area = narea.value;
        if (narea.absolute) flags += "area_abs;";
        if (cfg.metric_objects) {
          rec.objects = c.objects;
          const auto nobj = normalize_metric(c.objects, ob.objects);
          rec.norm_objects = nobj.value;
          if (nobj.absolute) flags += "objects_abs;";
        }
        if (cfg.metric_landmarks) {
          rec.landmarks = c.landmarks;
          const auto nlm = normalize_metric(c.landmarks, ob.landmarks);
          rec.norm_landmarks = nlm.value;
          if (nlm.absolute) flags += "landmarks_abs;";
        }
        rec.explored_cells = c.explored_cells;
        rec.reward_sum = c.reward_sum;
        rec.collisions = c.collisions;
        rec.flags = std::move(flags);
        rows[i].push_back(std::move(rec));
      }
      if (write_logs)
        logs[i] = episode_log_json(res, proto.preset, cfg.noisy_occupancy);
    } catch (const std::exception& ex) {
      MetricRecord rec = proto;
      rec.t = cfg.t_exp;
      rec.error = ex.what();
      rows[i].push_back(std::move(rec));
      failed[i] = 1;
    }
  });

  for (size_t i = 0; i < total; ++i) {
    out.episode_failures += failed[i];
    for (auto& rec : rows[i]) out.records.push_back(std::move(rec));
  }

  if (!cfg.output_dir.empty()) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir / "episodes");
    save_config(cfg, (dir / "config.json").string());
    std::ofstream csv(dir / "records.csv");
    if (!csv)
      throw std::runtime_error("run_suite: cannot write records.csv under " +
                               cfg.output_dir);
    csv << csv_header() << '\n';
    for (const auto& rec : out.records) csv << to_csv_row(rec) << '\n';
    for (size_t i = 0; i < total; ++i) {
      if (logs[i].empty()) continue;
      char name[32];
      std::snprintf(name, sizeof(name), "ep-%06zu.jsonl", i);
      std::ofstream f(dir / "episodes" / name);
      f << logs[i];
    }
    out.run_dir = dir.string();
  }
  return out;
}

CheckReport check_suite(const SuiteResult& suite) {
  CheckReport rep;
  const ExperimentConfig& cfg = suite.config;
  const auto fail = [&](std::string msg) {
    ++rep.failures;
    rep.messages.push_back(std::move(msg));
  };

  const size_t expect = cfg.agents.size() * cfg.env_seeds.size() *
                        cfg.episode_seeds.size() * cfg.etas.size() *
                        cfg.checkpoints.size();
  size_t clean_rows = 0;
  for (const auto& r : suite.records) {
    if (r.error.empty())
      ++clean_rows;
    else
      fail("episode failed (" + r.agent + "): " + r.error);
  }
  if (clean_rows != expect)
    fail("record grid incomplete: expected " + std::to_string(expect) +
         " rows, got " + std::to_string(clean_rows));

  // area curves must be non-decreasing in t within a condition
  std::map<std::tuple<std::string, uint64_t, uint64_t, double>,
           std::pair<int, double>>
      last;
  for (const auto& r : suite.records) {
    if (!r.error.empty() || !r.area_m2) continue;
    const auto key = std::make_tuple(r.agent, r.env_seed, r.episode_seed, r.eta);
    auto it = last.find(key);
    if (it != last.end() && r.t > it->second.first &&
        *r.area_m2 < it->second.second - 1e-9)
      fail("area decreased for " + r.agent + " at t=" + std::to_string(r.t));
    if (it == last.end() || r.t > it->second.first)
      last[key] = {r.t, *r.area_m2};
  }

  // on clean eta-0 episodes the best oracle must normalize to exactly 1
  const auto has_agent = [&](agents::AgentKind k) {
    return std::find(cfg.agents.begin(), cfg.agents.end(), k) !=
           cfg.agents.end();
  };
  const bool oracles_present = has_agent(agents::AgentKind::OracleRandom) &&
                               has_agent(agents::AgentKind::OracleLandmarks) &&
                               has_agent(agents::AgentKind::OracleObjects);
  const bool eta0 =
      std::find(cfg.etas.begin(), cfg.etas.end(), 0.0) != cfg.etas.end();
  if (oracles_present && eta0 && !cfg.noisy_occupancy &&
      !cfg.checkpoints.empty()) {
    const int t_final = cfg.checkpoints.back();
    std::map<std::pair<uint64_t, uint64_t>, double> best_norm;
    for (const auto& r : suite.records) {
      if (!r.error.empty() || r.t != t_final || r.eta != 0.0 || !r.norm_area)
        continue;
      const auto kind = agents::agent_from_string(r.agent);
      if (!kind || !agents::is_oracle(*kind)) continue;
      auto [it, inserted] =
          best_norm.try_emplace(std::make_pair(r.env_seed, r.episode_seed), 0.0);
      it->second = std::max(it->second, *r.norm_area);
    }
    for (const auto& [key, v] : best_norm)
      if (std::abs(v - 1.0) > 1e-9)
        fail("best oracle normalized area is " + std::to_string(v) +
             " on env_seed " + std::to_string(key.first));
  }
  return rep;
}

// --- Rendering ---

void write_map_pgm(const mapping::OccupancyMap& map, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  const int w = std::max(1, map.width());
  const int h = std::max(1, map.height());
  std::vector<uint8_t> img(static_cast<size_t>(w) * h, 0);
  if (!map.empty()) {
    map.for_each([&](CellCoord c, mapping::CellState st, uint32_t) {
      const size_t row = static_cast<size_t>(map.min_y() + map.height() - 1 - c.y);
      const size_t col = static_cast<size_t>(c.x - map.min_x());
      uint8_t v = 0;
      if (st == mapping::CellState::Free) v = 128;
      if (st == mapping::CellState::Obstacle) v = 255;
      img[row * w + col] = v;
    });
  }
  f << "P5\n" << w << ' ' << h << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.data()),
          static_cast<std::streamsize>(img.size()));
}

void write_trajectory_ppm(const mapping::OccupancyMap& map,
                          std::span<const StepLog> steps, CellCoord anchor,
                          world::Pose start, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);

  std::vector<CellCoord> traj;
  traj.reserve(steps.size() + 1);
  traj.push_back({start.cell.x - anchor.x, start.cell.y - anchor.y});
  for (const auto& s : steps)
    traj.push_back({s.pose.cell.x - anchor.x, s.pose.cell.y - anchor.y});

  int min_x = traj[0].x, max_x = traj[0].x;
  int min_y = traj[0].y, max_y = traj[0].y;
  if (!map.empty()) {
    min_x = std::min(min_x, map.min_x());
    max_x = std::max(max_x, map.min_x() + map.width() - 1);
    min_y = std::min(min_y, map.min_y());
    max_y = std::max(max_y, map.min_y() + map.height() - 1);
  }
  for (const auto& c : traj) {
    min_x = std::min(min_x, c.x);
    max_x = std::max(max_x, c.x);
    min_y = std::min(min_y, c.y);
    max_y = std::max(max_y, c.y);
  }
  const int w = max_x - min_x + 1;
  const int h = max_y - min_y + 1;
  std::vector<uint8_t> img(static_cast<size_t>(w) * h * 3, 0);
  const auto paint = [&](CellCoord c, uint8_t r, uint8_t g, uint8_t b) {
    const size_t row = static_cast<size_t>(max_y - c.y);
    const size_t col = static_cast<size_t>(c.x - min_x);
    uint8_t* px = &img[(row * w + col) * 3];
    px[0] = r;
    px[1] = g;
    px[2] = b;
  };
  if (!map.empty()) {
    map.for_each([&](CellCoord c, mapping::CellState st, uint32_t) {
      if (st == mapping::CellState::Free) paint(c, 30, 140, 30);
      if (st == mapping::CellState::Obstacle) paint(c, 230, 230, 230);
    });
  }
  const size_t n = traj.size();
  for (size_t i = 0; i < n; ++i) {
    const double frac = n <= 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    paint(traj[i], static_cast<uint8_t>(std::lround(255.0 * frac)), 40,
          static_cast<uint8_t>(std::lround(255.0 * (1.0 - frac))));
  }
  f << "P6\n" << w << ' ' << h << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.data()),
          static_cast<std::streamsize>(img.size()));
}

std::string episode_log_json(const EpisodeResult& r,
                             const std::string& preset_name, bool noisy) {
  std::string out;
  json hdr;
  hdr["type"] = "header";
  hdr["preset"] = preset_name;
  hdr["agent"] = agents::to_string(r.agent);
  hdr["env_seed"] = r.spec.env_seed;
  hdr["episode_seed"] = r.spec.episode_seed;
  hdr["eta"] = r.spec.eta;
  hdr["noisy_occupancy"] = noisy;
  hdr["t_exp"] = r.spec.t_exp;
  hdr["start"] = {r.spec.start.cell.x, r.spec.start.cell.y,
                  r.spec.start.heading};
  hdr["anchor"] = {r.anchor.x, r.anchor.y};
  out += hdr.dump();
  out += '\n';
  for (const auto& s : r.steps) {
    json js;
    js["type"] = "step";
    js["t"] = s.t;
    js["action"] = world::to_string(s.action);
    js["collision"] = s.collision;
    js["pose"] = {s.pose.cell.x, s.pose.cell.y, s.pose.heading};
    js["est"] = {s.est.x, s.est.y, s.est.theta};
    js["reward"] = s.reward;
    out += js.dump();
    out += '\n';
  }
  json sum;
  sum["type"] = "summary";
  sum["area_m2"] = r.area_m2;
  sum["objects"] = r.objects;
  sum["landmarks"] = r.landmarks;
  sum["reward_sum"] = r.reward_sum;
  sum["collisions"] = r.collisions;
  sum["explored_cells"] = r.map.explored_cells();
  sum["final_pose"] = {r.final_pose.cell.x, r.final_pose.cell.y,
                       r.final_pose.heading};
  sum["final_est"] = {r.final_est.x, r.final_est.y, r.final_est.theta};
  json cks = json::array();
  for (const auto& c : r.checkpoints)
    cks.push_back({{"t", c.t},
                   {"area_m2", c.area_m2},
                   {"objects", c.objects},
                   {"landmarks", c.landmarks},
                   {"explored_cells", c.explored_cells},
                   {"reward_sum", c.reward_sum},
                   {"collisions", c.collisions}});
  sum["checkpoints"] = cks;
  out += sum.dump();
  out += '\n';
  return out;
}

}  // namespace explore::bench
