#include "explore/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "explore/planner.hpp"

namespace explore::tasks {

using mapping::CellState;

double NavResult::spl_term() const {
  if (!success) return 0.0;
  const double denom = std::max(path_length_m, shortest_m);
  return denom <= 0.0 ? 1.0 : shortest_m / denom;
}

double spl(std::span<const NavResult> results) {
  if (results.empty()) return 0.0;
  double sum = 0.0;
  for (const NavResult& r : results) sum += r.spl_term();
  return sum / results.size();
}

namespace {

mapping::PoseEstimate shift_to_map(const mapping::PoseEstimate& est,
                                   CellCoord nav_origin, double cs) {
  return {est.x + nav_origin.x * cs, est.y + nav_origin.y * cs, est.theta};
}

world::Action random_move(Rng& rng) {
  constexpr world::Action moves[3] = {world::Action::Forward,
                                      world::Action::TurnLeft,
                                      world::Action::TurnRight};
  return moves[rng.index(3)];
}

}  // namespace

NavResult pointnav_run(const world::GridEnvironment& env,
                       const mapping::OccupancyMap& explored,
                       CellCoord map_anchor, const NavEpisode& episode,
                       const NavParams& params) {
  NavResult res;
  const double cs = env.cell_size();
  if (const auto sp = world::shortest_path(env, episode.start.cell, episode.goal))
    res.shortest_m = sp->length_m;
  else
    res.shortest_m = std::numeric_limits<double>::infinity();

  mapping::OccupancyMap map = explored;
  Rng rng = Rng::stream(params.seed, hash_string("pointnav"));
  mapping::OdometryNoiseModel noise;
  noise.eta = params.eta;
  noise.forward_magnitude = cs;

  world::Pose pose = episode.start;
  mapping::PoseEstimate est{0.0, 0.0, world::heading_angle(pose.heading)};
  const CellCoord nav_origin{episode.start.cell.x - map_anchor.x,
                             episode.start.cell.y - map_anchor.y};
  const CellCoord goal_map{episode.goal.x - map_anchor.x,
                           episode.goal.y - map_anchor.y};

  if (params.online_updates) {
    const auto obs = world::observe(env, pose, params.sensor);
    mapping::register_scan(map, obs, shift_to_map(est, nav_origin, cs));
  }

  for (int t = 0; t < episode.t_nav; ++t) {
    const auto grid = agents::process_map(map);
    const CellCoord cur_map{
        nav_origin.x + static_cast<int>(std::lround(est.x / cs)),
        nav_origin.y + static_cast<int>(std::lround(est.y / cs))};
    const auto path = planner::astar_path(grid, cur_map, goal_map);

    if (path) {
      const double remaining = (static_cast<double>(path->size()) - 1.0) * cs;
      if (remaining <= episode.eta_success + 1e-9) {
        res.stopped = true;  // Stop action: episode ends here
        break;
      }
    }
    world::Action a = random_move(rng);
    if (path) {
      const auto fa = agents::follow_path_action(
          *path, agents::heading_from_angle(est.theta));
      if (fa) a = *fa;
    }
    const auto sr = world::step(env, pose, a, params.sensor, noise, rng);
    if (a == world::Action::Forward) {
      if (sr.obs.collision)
        ++res.collisions;
      else
        res.path_length_m += cs;
    }
    pose = sr.pose;
    est = mapping::integrate_odometry(est, sr.obs.odometry);
    if (params.online_updates)
      mapping::register_scan(map, sr.obs, shift_to_map(est, nav_origin, cs));
    res.steps = t + 1;
  }

  if (res.stopped) {
    const auto back = world::shortest_path(env, pose.cell, episode.goal);
    res.success = back && back->length_m <= episode.eta_success + 1e-9;
  }
  return res;
}

std::vector<NavEpisode> sample_nav_episodes(const world::GridEnvironment& env,
                                            int n, int t_nav,
                                            double eta_success,
                                            double min_geodesic_m,
                                            uint64_t seed) {
  std::vector<NavEpisode> out;
  const auto free = env.free_cells();
  if (free.size() < 2 || n <= 0) return out;
  Rng rng(mix_key(mix_key(seed, env.seed()), hash_string("nav-sample")));
  int budget = 400 * n;
  while (static_cast<int>(out.size()) < n && budget-- > 0) {
    const CellCoord s = free[rng.index(free.size())];
    const CellCoord g = free[rng.index(free.size())];
    const auto sp = world::shortest_path(env, s, g);
    if (!sp || sp->length_m < min_geodesic_m) continue;
    const int heading = static_cast<int>(rng.index(world::kHeadings));
    out.push_back({world::Pose{s, heading}, g, t_nav, eta_success});
  }
  return out;
}

double naive_detour_ratio(const world::GridEnvironment& env, CellCoord start,
                          CellCoord goal) {
  const auto sp = world::shortest_path(env, start, goal);
  if (!sp || sp->cells.size() < 2) return 1.0;
  const long geo = static_cast<long>(sp->cells.size()) - 1;

  planner::TraversabilityGrid g;
  g.min_x = 0;
  g.min_y = 0;
  g.width = env.width();
  g.height = env.height();
  g.open.assign(static_cast<size_t>(g.width) * g.height, 1);

  const long cap = 25 * geo + 4L * g.width * g.height;
  CellCoord cur = start;
  long cost = 0;
  while (!(cur == goal)) {
    const auto path = planner::astar_path(g, cur, goal);
    if (!path) return std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < path->size(); ++i) {
      const CellCoord nxt = (*path)[i];
      ++cost;  // every move attempt costs one step, bumps included
      if (env.obstacle(nxt)) {
        g.open[g.idx(nxt)] = 0;
        break;
      }
      cur = nxt;
      if (cur == goal) break;
    }
    if (cost > cap) return std::numeric_limits<double>::infinity();
  }
  return static_cast<double>(cost) / static_cast<double>(geo);
}

DifficultEpisodeSet generate_difficult_nav_episodes(
    const world::GridEnvironment& env, int n, const DifficultNavParams& params,
    uint64_t seed) {
  DifficultEpisodeSet out;
  out.requested = n;
  const auto free = env.free_cells();
  if (free.size() < 2 || n <= 0) return out;

  // A difficult pair must still admit an optimal route on the closed
  // ground-truth map, otherwise no amount of exploration can reach SPL 1.
  const auto gt = mapping::map_from_environment(env, {0, 0});
  const auto closed = agents::process_map(gt);

  Rng rng(mix_key(mix_key(seed, env.seed()), hash_string("difficult-nav")));
  long budget = static_cast<long>(params.max_attempts_per_episode) * n;
  while (static_cast<int>(out.episodes.size()) < n && budget-- > 0) {
    const CellCoord s = free[rng.index(free.size())];
    const CellCoord g = free[rng.index(free.size())];
    const auto sp = world::shortest_path(env, s, g);
    if (!sp || sp->length_m < params.min_geodesic_m) continue;
    const auto cp = planner::astar_path(closed, s, g);
    if (!cp || cp->size() != sp->cells.size()) continue;
    const double ratio = naive_detour_ratio(env, s, g);
    if (ratio < params.detour_threshold) continue;
    const int heading = static_cast<int>(rng.index(world::kHeadings));
    out.episodes.push_back(
        {NavEpisode{world::Pose{s, heading}, g, params.t_nav,
                    params.eta_success},
         sp->length_m, ratio});
  }
  return out;
}

// --- View localization ---

namespace {

double cosine_similarity(const world::Signature& a, const world::Signature& b) {
  double num = 0.0, na = 0.0, nb = 0.0;
  for (int i = 0; i < world::kSignatureDim; ++i) {
    num += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return num / std::sqrt(na * nb);
}

std::vector<double> median_filter(const std::vector<double>& s, int window) {
  const int n = static_cast<int>(s.size());
  if (window <= 1 || n <= 1) return s;
  const int half = window / 2;
  std::vector<double> out(s.size());
  std::vector<double> win;
  for (int i = 0; i < n; ++i) {
    win.clear();
    for (int k = -half; k <= half; ++k)
      win.push_back(s[std::clamp(i + k, 0, n - 1)]);
    std::sort(win.begin(), win.end());
    out[i] = win[win.size() / 2];
  }
  return out;
}

}  // namespace

PairEstimator make_gt_pair_estimator(double sigma_depth_m,
                                     double sigma_beta_rad, Rng* rng) {
  return [=](const LocalizationQuery& q, const MemoryEntry& e) {
    PairEstimate pe;
    pe.beta = wrap_angle(q.true_theta - e.true_theta);
    const Vec2 rel = rotate(q.true_pos_m - e.true_pos_m, -e.true_theta);
    // Depths are solved so the candidate lands exactly on the true query
    // position; near beta = 0 the lateral component is unrepresentable and
    // the measured retrieval depth is used instead.
    if (std::abs(std::sin(pe.beta)) > 1e-9) {
      pe.d_j = -rel.y / std::sin(pe.beta);
      pe.d_i = rel.x + pe.d_j * std::cos(pe.beta);
    } else {
      pe.d_j = e.center_depth_m;
      pe.d_i = rel.x + pe.d_j * std::cos(pe.beta);
    }
    if (rng) {
      if (sigma_depth_m > 0.0) {
        pe.d_i += rng->normal(0.0, sigma_depth_m);
        pe.d_j += rng->normal(0.0, sigma_depth_m);
      }
      if (sigma_beta_rad > 0.0)
        pe.beta = wrap_angle(pe.beta + rng->normal(0.0, sigma_beta_rad));
    }
    return pe;
  };
}

std::optional<RansacResult> ransac_aggregate(std::span<const Vec2> candidates,
                                             int iters, double inlier_radius_m,
                                             int min_inliers, Rng& rng) {
  if (candidates.empty() || iters <= 0) return std::nullopt;
  int best_count = 0;
  size_t best_i = 0;
  for (int it = 0; it < iters; ++it) {
    const size_t i = rng.index(candidates.size());
    int count = 0;
    for (const Vec2& c : candidates)
      if ((c - candidates[i]).norm() <= inlier_radius_m + 1e-12) ++count;
    if (count > best_count) {
      best_count = count;
      best_i = i;
    }
  }
  if (best_count < min_inliers) return std::nullopt;
  Vec2 centroid{};
  int n = 0;
  for (const Vec2& c : candidates) {
    if ((c - candidates[best_i]).norm() > inlier_radius_m + 1e-12) continue;
    centroid = centroid + c;
    ++n;
  }
  return RansacResult{{centroid.x / n, centroid.y / n}, best_count, best_i};
}

LocalizationResult localize_view(const EpisodicMemory& memory,
                                 const LocalizationQuery& query,
                                 const PairEstimator& estimator,
                                 const LocalizationParams& params, Rng& rng) {
  LocalizationResult res;
  const auto& entries = memory.entries;
  if (entries.empty()) return res;

  std::vector<double> scores(entries.size());
  for (size_t i = 0; i < entries.size(); ++i)
    scores[i] = cosine_similarity(query.signature, entries[i].signature);
  const auto filtered = median_filter(scores, params.median_window);

  std::vector<size_t> order(entries.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return filtered[a] > filtered[b];
  });

  std::vector<Vec2> cands;
  std::vector<double> thetas;
  for (size_t i : order) {
    if (static_cast<int>(cands.size()) >= params.top_k) break;
    if (filtered[i] < params.similarity_threshold) break;
    const MemoryEntry& e = entries[i];
    const PairEstimate pe = estimator(query, e);
    const Vec2 d{pe.d_i - pe.d_j * std::cos(pe.beta),
                 -pe.d_j * std::sin(pe.beta)};
    cands.push_back(e.est.position() + rotate(d, e.est.theta));
    thetas.push_back(e.est.theta + pe.beta);
  }
  if (cands.empty()) return res;  // unlocalized

  res.localized = true;
  res.candidates = static_cast<int>(cands.size());
  const auto rr = ransac_aggregate(cands, params.ransac_iters,
                                   params.inlier_radius_m, params.min_inliers,
                                   rng);
  if (rr) {
    res.position = rr->centroid;
    res.theta = thetas[rr->sample_index];
  } else {
    // Too little agreement for a consensus set: trust the best retrieval.
    res.position = cands[0];
    res.theta = thetas[0];
  }
  return res;
}

double psr_at_k(std::span<const LocalizationResult> predictions,
                std::span<const Vec2> truths, double k_m) {
  if (predictions.size() != truths.size())
    throw std::invalid_argument("psr_at_k: size mismatch");
  if (predictions.empty()) return 0.0;
  int hits = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (!predictions[i].localized) continue;
    if ((predictions[i].position - truths[i]).norm() < k_m) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

// --- Concept reconstruction ---

namespace {

bool believed_visible(const mapping::OccupancyMap& map, CellCoord a,
                      CellCoord b) {
  bool ok = true;
  supercover_segment(
      {static_cast<double>(a.x), static_cast<double>(a.y)},
      {static_cast<double>(b.x), static_cast<double>(b.y)},
      [&](CellCoord c) {
        if (c == a || c == b) return true;
        if (map.state(c) == CellState::Obstacle) {
          ok = false;
          return false;
        }
        return true;
      });
  return ok;
}

}  // namespace

std::vector<double> reconstruct_concepts(const mapping::OccupancyMap& map,
                                         const mapping::SignatureMap& sigs,
                                         CellCoord query,
                                         const rewards::ConceptSpace& space,
                                         const ReconstructionParams& params) {
  if (space.k <= 0) throw std::invalid_argument("reconstruct_concepts: empty space");
  std::vector<double> hist(static_cast<size_t>(space.k), 0.0);
  const double bin = map.bin_size();
  const int r = static_cast<int>(std::ceil(params.range_m / bin));
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const CellCoord c{query.x + dx, query.y + dy};
      const double d = std::hypot(dx, dy) * bin;
      if (d > params.range_m + 1e-9) continue;
      const world::Signature* sig = sigs.find(c);
      if (!sig) continue;
      if (!believed_visible(map, query, c)) continue;
      const int k = rewards::nearest_concept(
          std::span<const double>(sig->data(), sig->size()), space);
      hist[static_cast<size_t>(k)] += 1.0 / (1.0 + d);
    }
  }
  double total = 0.0;
  for (double& v : hist) {
    v += params.eps;
    total += v;
  }
  for (double& v : hist) v /= total;
  return hist;
}

double precision_at_k(std::span<const double> predicted,
                      std::span<const double> truth, int k) {
  if (predicted.size() != truth.size())
    throw std::invalid_argument("precision_at_k: size mismatch");
  if (k <= 0 || k > static_cast<int>(predicted.size()))
    throw std::invalid_argument("precision_at_k: bad k");
  std::vector<size_t> order(predicted.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return predicted[a] > predicted[b];
  });
  int hits = 0;
  for (int i = 0; i < k; ++i)
    if (truth[order[static_cast<size_t>(i)]] > 0.0) ++hits;
  return static_cast<double>(hits) / static_cast<double>(k);
}

// --- Landmark mining ---

std::vector<world::Pose> mine_landmarks(const world::GridEnvironment& env,
                                        const LandmarkMiningParams& params,
                                        uint64_t seed) {
  if (params.samples < params.clusters)
    throw std::invalid_argument("mine_landmarks: fewer samples than clusters");
  const auto free = env.free_cells();
  if (free.empty()) return {};
  Rng rng(mix_key(mix_key(seed, env.seed()), hash_string("landmark-mining")));
  const double cs = env.cell_size();

  std::vector<world::Pose> poses;
  std::vector<std::vector<double>> feats;
  poses.reserve(static_cast<size_t>(params.samples));
  for (int i = 0; i < params.samples; ++i) {
    const world::Pose p{free[rng.index(free.size())],
                        static_cast<int>(rng.index(world::kHeadings))};
    const auto sig = world::view_signature(env, p, params.sensor);
    poses.push_back(p);
    feats.emplace_back(sig.begin(), sig.end());
  }

  const auto space = rewards::discover_concepts(
      feats, params.clusters, params.kmeans_iters,
      mix_key(seed, hash_string("landmark-kmeans")));

  std::vector<std::vector<size_t>> members(static_cast<size_t>(space.k));
  for (size_t i = 0; i < feats.size(); ++i)
    members[static_cast<size_t>(rewards::nearest_concept(feats[i], space))]
        .push_back(i);

  std::vector<world::Pose> out;
  std::set<std::pair<uint64_t, int>> seen;
  for (const auto& m : members) {
    if (static_cast<int>(m.size()) < params.min_cluster_size) continue;
    Vec2 mean{};
    for (size_t i : m)
      mean = mean + Vec2{poses[i].cell.x * cs, poses[i].cell.y * cs};
    mean = mean * (1.0 / static_cast<double>(m.size()));
    double var = 0.0;
    for (size_t i : m) {
      const Vec2 p{poses[i].cell.x * cs, poses[i].cell.y * cs};
      const Vec2 d = p - mean;
      var += d.dot(d);
    }
    var /= static_cast<double>(m.size());
    if (var >= params.variance_threshold_m2) continue;
    for (size_t i : m)
      if (seen.insert({cell_key(poses[i].cell), poses[i].heading}).second)
        out.push_back(poses[i]);
  }
  return out;
}

}  // namespace explore::tasks
