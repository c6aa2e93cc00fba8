#include "explore/agents.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace explore::agents {

using mapping::CellState;
using mapping::OccupancyMap;
using world::Action;

const char* to_string(AgentKind k) {
  switch (k) {
    case AgentKind::Random: return "random";
    case AgentKind::Forward: return "forward";
    case AgentKind::ForwardPlus: return "forward+";
    case AgentKind::Frontier: return "frontier";
    case AgentKind::OracleRandom: return "oracle-random";
    case AgentKind::OracleLandmarks: return "oracle-landmarks";
    case AgentKind::OracleObjects: return "oracle-objects";
    case AgentKind::GreedyNovelty: return "greedy-novelty";
    case AgentKind::GreedyCoverage: return "greedy-coverage";
    case AgentKind::GreedySmoothCoverage: return "greedy-smooth-coverage";
    case AgentKind::GreedyCuriosity: return "greedy-curiosity";
    case AgentKind::GreedyReconstruction: return "greedy-reconstruction";
  }
  return "?";
}

std::optional<AgentKind> agent_from_string(const std::string& s) {
  for (AgentKind k : kAllAgentKinds)
    if (s == to_string(k)) return k;
  return std::nullopt;
}

bool is_oracle(AgentKind k) {
  return k == AgentKind::OracleRandom || k == AgentKind::OracleLandmarks ||
         k == AgentKind::OracleObjects;
}

bool is_greedy(AgentKind k) {
  switch (k) {
    case AgentKind::GreedyNovelty:
    case AgentKind::GreedyCoverage:
    case AgentKind::GreedySmoothCoverage:
    case AgentKind::GreedyCuriosity:
    case AgentKind::GreedyReconstruction:
      return true;
    default:
      return false;
  }
}

planner::TraversabilityGrid process_map(const OccupancyMap& map, int margin) {
  if (margin < 1) margin = 1;
  planner::TraversabilityGrid g;
  if (map.empty()) {
    g.min_x = g.min_y = -margin;
    g.width = g.height = 2 * margin + 1;
    g.open.assign(static_cast<size_t>(g.width) * g.height, 1);
    return g;
  }
  g.min_x = map.min_x() - margin;
  g.min_y = map.min_y() - margin;
  g.width = map.width() + 2 * margin;
  g.height = map.height() + 2 * margin;
  const size_t n = static_cast<size_t>(g.width) * g.height;

  std::vector<uint8_t> blocked(n, 0);
  map.for_each([&](CellCoord c, CellState s, uint32_t) {
    if (s == CellState::Obstacle) blocked[g.idx(c)] = 1;
  });

  // 3x3 close: blocked cells stay blocked and diagonal gaps seal shut, so a
  // path through the grid never squeezes between believed obstacle corners.
  auto pass = [&](const std::vector<uint8_t>& src, bool dilate) {
    std::vector<uint8_t> dst(n, 0);
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) {
        bool acc = !dilate;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            bool v = false;
            if (nx >= 0 && nx < g.width && ny >= 0 && ny < g.height)
              v = src[static_cast<size_t>(ny) * g.width + nx] != 0;
            if (dilate)
              acc = acc || v;
            else
              acc = acc && v;
          }
        }
        dst[static_cast<size_t>(y) * g.width + x] = acc ? 1 : 0;
      }
    }
    return dst;
  };
  const auto closed = pass(pass(blocked, true), false);

  g.open.resize(n);
  for (size_t i = 0; i < n; ++i) g.open[i] = closed[i] ? 0 : 1;
  return g;
}

bool is_frontier_cell(const OccupancyMap& map, CellCoord c) {
  if (map.state(c) != CellState::Free) return false;
  const CellCoord nb[4] = {
      {c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
  for (const CellCoord& m : nb)
    if (map.state(m) == CellState::Unexplored) return true;
  return false;
}

std::vector<Frontier> detect_frontiers(const OccupancyMap& map) {
  std::vector<Frontier> out;
  if (map.empty()) return out;
  const int w = map.width(), h = map.height();
  const int x0 = map.min_x(), y0 = map.min_y();
  std::vector<uint8_t> visited(static_cast<size_t>(w) * h, 0);
  auto vidx = [&](CellCoord c) {
    return static_cast<size_t>(c.y - y0) * w + (c.x - x0);
  };
  auto in_window = [&](CellCoord c) {
    return c.x >= x0 && c.x < x0 + w && c.y >= y0 && c.y < y0 + h;
  };

  map.for_each([&](CellCoord c, CellState, uint32_t) {
    if (visited[vidx(c)] || !is_frontier_cell(map, c)) return;
    Frontier f;
    std::deque<CellCoord> q{c};
    visited[vidx(c)] = 1;
    while (!q.empty()) {
      const CellCoord cur = q.front();
      q.pop_front();
      f.cells.push_back(cur);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const CellCoord nb{cur.x + dx, cur.y + dy};
          if (!in_window(nb) || visited[vidx(nb)]) continue;
          if (!is_frontier_cell(map, nb)) continue;
          visited[vidx(nb)] = 1;
          q.push_back(nb);
        }
      }
    }
    std::sort(f.cells.begin(), f.cells.end());
    out.push_back(std::move(f));
  });
  return out;
}

world::Action heuristic_action(AgentKind kind, const world::Observation& obs,
                               Rng& rng) {
  switch (kind) {
    case AgentKind::Forward:
      return Action::Forward;
    case AgentKind::ForwardPlus:
      return obs.collision ? Action::TurnLeft : Action::Forward;
    case AgentKind::Random: {
      constexpr Action moves[3] = {Action::Forward, Action::TurnLeft,
                                   Action::TurnRight};
      return moves[rng.index(3)];
    }
    default:
      throw std::invalid_argument("heuristic_action: not a heuristic agent");
  }
}

int heading_from_angle(double theta) {
  int h = static_cast<int>(std::lround(theta / (std::numbers::pi / 6.0)));
  h %= world::kHeadings;
  if (h < 0) h += world::kHeadings;
  return h;
}

namespace {

// Signed heading steps from h to target, in [-5, 6]; positive = TurnLeft.
int heading_diff(int h, int target) {
  int s = (target - h) % world::kHeadings;
  if (s < 0) s += world::kHeadings;
  return s <= 6 ? s : s - world::kHeadings;
}

Action turn_toward(int h, int target) {
  return heading_diff(h, target) > 0 ? Action::TurnLeft : Action::TurnRight;
}

// Turn into the nearest heading of a cardinal's bucket (ties turn left).
Action turn_toward_cardinal(int h, int cardinal) {
  int best = -1, best_abs = 100;
  for (int off = -1; off <= 1; ++off) {
    const int target =
        ((3 * cardinal + off) % world::kHeadings + world::kHeadings) %
        world::kHeadings;
    const int d = heading_diff(h, target);
    const int a = std::abs(d);
    if (a < best_abs || (a == best_abs && d > 0)) {
      best_abs = a;
      best = d;
    }
  }
  return best > 0 ? Action::TurnLeft : Action::TurnRight;
}

int chebyshev(CellCoord a, CellCoord b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

}  // namespace

std::optional<world::Action> follow_path_action(
    const std::vector<CellCoord>& path, int heading) {
  if (path.size() < 2) return std::nullopt;
  const CellCoord d{path[1].x - path[0].x, path[1].y - path[0].y};
  int cardinal = -1;
  for (int c = 0; c < 4; ++c)
    if (world::cardinal_delta(c) == d) cardinal = c;
  if (cardinal < 0) return std::nullopt;
  if (world::cardinal_of_heading(heading) == cardinal) return Action::Forward;
  return turn_toward_cardinal(heading, cardinal);
}

namespace {

class HeuristicAgent final : public Agent {
 public:
  HeuristicAgent(AgentKind kind, uint64_t seed) : kind_(kind), rng_(seed) {}
  Action act(const AgentStepView& view) override {
    return heuristic_action(kind_, *view.obs, rng_);
  }

 private:
  AgentKind kind_;
  Rng rng_;
};

class FrontierAgent final : public Agent {
 public:
  FrontierAgent(FrontierParams p, uint64_t seed) : p_(p), rng_(seed) {}

  Action act(const AgentStepView& view) override {
    const OccupancyMap& map = *view.map;
    const CellCoord cur = map.bin_of(view.est->position());
    const int heading = heading_from_angle(view.est->theta);

    bool resample = !target_.has_value();
    if (target_ && (chebyshev(cur, *target_) <= 1 || fails_ > p_.n_fail ||
                    steps_ >= p_.t_max))
      resample = true;
    if (resample) pick_target(map);
    ++steps_;
    if (!target_) return heuristic_action(AgentKind::Random, *view.obs, rng_);

    const auto grid = process_map(map);
    const auto path = planner::astar_path(grid, cur, *target_);
    std::optional<Action> a;
    if (path) a = follow_path_action(*path, heading);
    if (!a) {
      ++fails_;
      return heuristic_action(AgentKind::Random, *view.obs, rng_);
    }
    return *a;
  }

  std::optional<CellCoord> current_target() const override { return target_; }

 private:
  void pick_target(const OccupancyMap& map) {
    target_.reset();
    fails_ = 0;
    steps_ = 0;
    auto fronts = detect_frontiers(map);
    if (fronts.empty()) return;
    std::stable_sort(fronts.begin(), fronts.end(),
                     [](const Frontier& a, const Frontier& b) {
                       return a.length() > b.length();
                     });
    const size_t top = std::min<size_t>(3, fronts.size());
    const Frontier& f = fronts[rng_.index(top)];
    target_ = f.cells[rng_.index(f.cells.size())];
  }

  FrontierParams p_;
  Rng rng_;
  std::optional<CellCoord> target_;
  int fails_ = 0;
  int steps_ = 0;
};

// Oracles read the true environment and pose, plan true shortest paths and
// therefore never collide.
class OracleAgent final : public Agent {
 public:
  OracleAgent(AgentKind kind, uint64_t seed) : kind_(kind), rng_(seed) {}

  Action act(const AgentStepView& view) override {
    const world::GridEnvironment& env = *view.env;
    const world::Pose pose = view.obs->sensor_pose;

    for (int guard = 0; guard < 8; ++guard) {
      if (!target_) next_target(env);
      if (!target_) return Action::TurnLeft;
      if (pose.cell == target_->cell) {
        if (target_->heading >= 0 && pose.heading != target_->heading)
          return turn_toward(pose.heading, target_->heading);
        target_.reset();
        continue;
      }
      const auto path = world::shortest_path(env, pose.cell, target_->cell);
      if (!path || path->cells.size() < 2) {
        target_.reset();
        continue;
      }
      const auto a = follow_path_action(path->cells, pose.heading);
      if (a) return *a;
      target_.reset();
    }
    return Action::TurnLeft;
  }

  std::optional<CellCoord> current_target() const override {
    if (!target_) return std::nullopt;
    return target_->cell;
  }

 private:
  struct Target {
    CellCoord cell;
    int heading = -1;  // <0: position only
  };

  void next_target(const world::GridEnvironment& env) {
    if (kind_ == AgentKind::OracleLandmarks && !env.landmark_views().empty()) {
      const auto& lv = env.landmark_views();
      const world::Pose& p = lv[next_idx_++ % lv.size()];
      target_ = Target{p.cell, p.heading};
      return;
    }
    if (kind_ == AgentKind::OracleObjects && !env.objects().empty()) {
      const auto& obj = env.objects();
      target_ = Target{obj[next_idx_++ % obj.size()].cell, -1};
      return;
    }
    if (free_.empty()) free_ = env.free_cells();
    if (free_.empty()) return;
    target_ = Target{free_[rng_.index(free_.size())], -1};
  }

  AgentKind kind_;
  Rng rng_;
  std::optional<Target> target_;
  size_t next_idx_ = 0;
  std::vector<CellCoord> free_;
};

// Paradigm-greedy planner: every replan_interval steps, score candidate cells
// by estimated reward gain divided by (path cost + 1) and commit to the
// argmax; between replans it follows the planned path on the processed map.
class GreedyAgent final : public Agent {
 public:
  GreedyAgent(AgentKind kind, GreedyParams p, uint64_t seed)
      : kind_(kind), p_(p), rng_(seed) {}

  Action act(const AgentStepView& view) override {
    const OccupancyMap& map = *view.map;
    const CellCoord cur = map.bin_of(view.est->position());
    const int heading = heading_from_angle(view.est->theta);

    if (kind_ == AgentKind::GreedyCuriosity && prev_cell_)
      err_[cell_key(*prev_cell_)] = view.rewards.last_reward;
    prev_cell_ = cur;

    // Novelty keeps its own visitation tally over believed poses. Under
    // odometry noise the believed map drifts with the believed trajectory,
    // so counts in the same frame stay aligned with the cells the planner
    // can reach; with exact odometry it matches the paid reward anyway.
    if (kind_ == AgentKind::GreedyNovelty && view.rewards.novelty)
      ++visits_[cell_key(
          view.rewards.novelty->grid_cell(view.est->position()))];

    recent_.push_back(cur);
    if (recent_.size() > static_cast<size_t>(std::max(1, p_.replan_interval)))
      recent_.pop_front();

    // Walk the plan cached at the last replan; re-routing every step on a
    // belief map that shifts under each scan makes equal-cost routes
    // flip-flop and the agent spin in place. A bump means the plan crossed
    // terrain the map had wrong, so drop it.
    if (view.obs->collision) path_.clear();
    if (path_idx_ + 1 < path_.size() && path_[path_idx_ + 1] == cur)
      ++path_idx_;
    const bool consumed = path_idx_ + 1 >= path_.size();
    const bool off_plan = !consumed && !(path_[path_idx_] == cur);

    if (since_replan_ >= p_.replan_interval || consumed || off_plan) {
      const auto grid = process_map(map);
      replan(view, map, grid, cur);
      since_replan_ = 0;
      path_.clear();
      path_idx_ = 0;
      if (target_) {
        auto path = planner::astar_path(grid, cur, *target_);
        if (path && path->size() > 1)
          path_ = std::move(*path);
        else
          target_.reset();
      }
    }
    ++since_replan_;

    if (path_idx_ + 1 < path_.size()) {
      const std::vector<CellCoord> seg{path_[path_idx_], path_[path_idx_ + 1]};
      if (const auto a = follow_path_action(seg, heading)) return *a;
      path_.clear();  // believed pose left the lattice; replan next step
    }
    // No plan: the curiosity agent bootstraps by driving forward to gather
    // transitions, the rest fall back to random motion.
    if (kind_ == AgentKind::GreedyCuriosity && err_.empty())
      return Action::Forward;
    return heuristic_action(AgentKind::Random, *view.obs, rng_);
  }

  std::optional<CellCoord> current_target() const override { return target_; }

 private:
  // A frontier component's scoring spot: the median of its sorted cells.
  static CellCoord rep_of(const Frontier& f) {
    return f.cells[f.cells.size() / 2];
  }

  // Cells a 360-degree scan from c would cover on the believed map: rays
  // stop at believed obstacles, unknown is semi-transparent (a ray gives up
  // after a short run of unknown, long enough to reveal a room's worth but
  // short enough not to promise area across unseen walls). Unlike a blind
  // window count this decays honestly: sealed pockets and wall interiors
  // behind believed obstacles never enter the view.
  std::vector<CellCoord> predicted_view(const OccupancyMap& map,
                                        CellCoord c) const {
    const int range = std::max(1, p_.gain_window);
    const int side = 2 * range + 1;
    std::vector<uint8_t> mark(static_cast<size_t>(side) * side, 0);
    std::vector<CellCoord> out;
    constexpr int rays = 64;
    const int max_unknown_run = std::max(2, range / 4);
    for (int k = 0; k < rays; ++k) {
      const double a = 2.0 * std::numbers::pi * k / rays;
      const double dx = std::cos(a), dy = std::sin(a);
      int unknown_run = 0;
      CellCoord prev = c;
      for (double t = 0.0; t <= range; t += 0.5) {
        const int px = static_cast<int>(std::lround(c.x + dx * t));
        const int py = static_cast<int>(std::lround(c.y + dy * t));
        const CellState s = map.state({px, py});
        if (s == CellState::Obstacle) break;
        if (px != prev.x || py != prev.y) {
          prev = {px, py};
          if (s == CellState::Unexplored) {
            if (++unknown_run > max_unknown_run) break;
          } else {
            unknown_run = 0;
          }
        }
        const size_t m = static_cast<size_t>(py - c.y + range) * side +
                         static_cast<size_t>(px - c.x + range);
        if (!mark[m]) {
          mark[m] = 1;
          out.push_back({px, py});
        }
      }
    }
    return out;
  }

  // Unseen cells a scan at c is expected to reveal.
  int unknown_sky(const OccupancyMap& map, CellCoord c) const {
    int count = 0;
    for (const CellCoord& v : predicted_view(map, c))
      if (map.state(v) == CellState::Unexplored) ++count;
    return count;
  }

  // Estimated revisit reward left in the direction of c: the count payoff
  // summed over the predicted view. Fresh cells pay in full, well-swept
  // ones fade as 1/sqrt, so the gain tracks how much sweeping the spot
  // still offers.
  double smooth_gain_view(const rewards::CoverageState& cov,
                          const OccupancyMap& map, CellCoord c) const {
    double sum = 0.0;
    for (const CellCoord& v : predicted_view(map, c)) {
      const auto it = cov.region_counts.find(cell_key(v));
      const int cnt = it == cov.region_counts.end() ? 0 : it->second;
      sum += 1.0 / std::sqrt(static_cast<double>(cnt) + 1.0);
    }
    return cov.scale * sum;
  }

  double smooth_gain_window(const rewards::CoverageState& cov, CellCoord c) const {
    double sum = 0.0;
    int n = 0;
    for (int dy = -p_.gain_window; dy <= p_.gain_window; ++dy)
      for (int dx = -p_.gain_window; dx <= p_.gain_window; ++dx) {
        const auto it = cov.region_counts.find(cell_key({c.x + dx, c.y + dy}));
        const int cnt = it == cov.region_counts.end() ? 0 : it->second;
        sum += 1.0 / std::sqrt(static_cast<double>(cnt) + 1.0);
        ++n;
      }
    return cov.scale * sum / n;
  }

  void replan(const AgentStepView& view, const OccupancyMap& map,
              const planner::TraversabilityGrid& grid, CellCoord cur) {
    target_.reset();
    // Candidate gains keyed by cell; sorted iteration makes the argmax
    // tie-break the lowest cell deterministically.
    std::map<CellCoord, double> cand;

    switch (kind_) {
      case AgentKind::GreedyNovelty: {
        const auto* nov = view.rewards.novelty;
        if (!nov) break;
        const double bin = map.bin_size();
        const auto bin_of = [&](CellCoord c) {
          return nov->grid_cell({c.x * bin, c.y * bin});
        };
        const auto payoff_bin = [&](CellCoord b) {
          const auto it = visits_.find(cell_key(b));
          const int n = it == visits_.end() ? 0 : it->second;
          return nov->scale / std::sqrt(n + 1.0);
        };
        // Payoff earned along the believed shortest path to each cell.
        std::vector<double> acc(grid.open.size(), 0.0);
        std::vector<uint8_t> seen(grid.open.size(), 0);
        std::deque<size_t> q;
        if (grid.open_at(cur)) {
          const size_t s = grid.idx(cur);
          seen[s] = 1;
          q.push_back(s);
        }
        while (!q.empty()) {
          const size_t i = q.front();
          q.pop_front();
          const CellCoord c = grid.cell_at(i);
          const CellCoord nb[4] = {
              {c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
          for (const CellCoord& m : nb) {
            if (!grid.open_at(m)) continue;
            const size_t j = grid.idx(m);
            if (seen[j]) continue;
            seen[j] = 1;
            acc[j] = acc[i] + payoff_bin(bin_of(m));
            q.push_back(j);
          }
        }
        // Per visit-bin payoff over the reachable set, windowed by prefix
        // sums: the mass around a target estimates what roaming there for
        // the next interval still earns. Untrodden bins pay in full and
        // swept ones fade, so whole fresh regions outpull the nearest fresh
        // cell, which otherwise drags the agent into tight local snaking
        // that keeps revisiting what the sensor has already mapped.
        // Unreachable bins (sealed pockets, wall interiors) stay at zero.
        const CellCoord blo = bin_of({grid.min_x, grid.min_y});
        const CellCoord bhi =
            bin_of({grid.min_x + grid.width - 1, grid.min_y + grid.height - 1});
        const int bw = bhi.x - blo.x + 1, bh = bhi.y - blo.y + 1;
        std::vector<double> bpay(static_cast<size_t>(bw) * bh, 0.0);
        for (size_t i = 0; i < seen.size(); ++i) {
          if (!seen[i]) continue;
          const CellCoord b = bin_of(grid.cell_at(i));
          bpay[static_cast<size_t>(b.y - blo.y) * bw + (b.x - blo.x)] =
              payoff_bin(b);
        }
        std::vector<double> ps(static_cast<size_t>(bw + 1) * (bh + 1), 0.0);
        for (int y = 0; y < bh; ++y)
          for (int x = 0; x < bw; ++x)
            ps[static_cast<size_t>(y + 1) * (bw + 1) + x + 1] =
                bpay[static_cast<size_t>(y) * bw + x] +
                ps[static_cast<size_t>(y) * (bw + 1) + x + 1] +
                ps[static_cast<size_t>(y + 1) * (bw + 1) + x] -
                ps[static_cast<size_t>(y) * (bw + 1) + x];
        const int rb = std::max(
            1, static_cast<int>(std::lround(p_.replan_interval * bin /
                                            nov->cell_width)));
        const auto mass = [&](CellCoord b) {
          const int x0 = std::max(b.x - blo.x - rb, 0);
          const int y0 = std::max(b.y - blo.y - rb, 0);
          const int x1 = std::min(b.x - blo.x + rb, bw - 1);
          const int y1 = std::min(b.y - blo.y + rb, bh - 1);
          return ps[static_cast<size_t>(y1 + 1) * (bw + 1) + x1 + 1] -
                 ps[static_cast<size_t>(y0) * (bw + 1) + x1 + 1] -
                 ps[static_cast<size_t>(y1 + 1) * (bw + 1) + x0] +
                 ps[static_cast<size_t>(y0) * (bw + 1) + x0];
        };
        // Staying put also earns revisit payoff, so a target is only worth
        // its mass in excess of the mass right here; otherwise the fading
        // but never-zero count payoff next door always beats a distant
        // fresh region on rate and the agent never leaves swept ground.
        const double here = mass(bin_of(cur));
        for (size_t i = 0; i < seen.size(); ++i) {
          if (!seen[i]) continue;
          const CellCoord c = grid.cell_at(i);
          cand[c] = acc[i] + std::max(0.0, mass(bin_of(c)) - here);
        }
        break;
      }
      case AgentKind::GreedyCoverage: {
        const auto* cov = view.rewards.coverage;
        if (!cov) break;
        // Expected reveal of a component: its boundary length (a longer lip
        // to the unknown promises more behind it) plus the unseen cells a
        // scan at its middle would reach. Components with no sky left are
        // retired.
        const double cell_area = map.bin_size() * map.bin_size();
        for (const Frontier& f : detect_frontiers(map)) {
          const int sky = unknown_sky(map, rep_of(f));
          if (sky <= 0) continue;
          const double g = cov->area_scale * cell_area *
                           (static_cast<double>(f.cells.size()) + sky);
          for (const CellCoord& c : f.cells) cand[c] = g;
        }
        break;
      }
      case AgentKind::GreedySmoothCoverage: {
        const auto* cov = view.rewards.coverage;
        if (!cov) break;
        // A frontier is worth one scan's payoff in excess of the ambient
        // level the agent earns anyway: per cell, fresh pays in full and
        // swept pays by count, minus the mean payoff of the current view,
        // clamped at zero. Under-scanned rooms count their surplus,
        // well-worn corridors count nothing, and the cells just past the
        // lip are uncounted so the component length rides at the fresh
        // surplus. Frontiers that reveal nothing are not worth a trip.
        const auto pay_at = [&](CellCoord v) {
          const auto it = cov->region_counts.find(cell_key(v));
          return it == cov->region_counts.end()
                     ? 1.0
                     : 1.0 / std::sqrt(it->second + 1.0);
        };
        double amb = 0.0;
        {
          const auto vc = predicted_view(map, cur);
          double s = 0.0;
          for (const CellCoord& v : vc) s += pay_at(v);
          if (!vc.empty()) amb = s / static_cast<double>(vc.size());
        }
        for (const Frontier& f : detect_frontiers(map)) {
          const CellCoord rep = rep_of(f);
          if (unknown_sky(map, rep) <= 0) continue;
          double sum = 0.0;
          for (const CellCoord& v : predicted_view(map, rep))
            sum += std::max(0.0, pay_at(v) - amb);
          sum += std::max(0.0, 1.0 - amb) * static_cast<double>(f.cells.size());
          const double g = cov->scale * sum;
          if (g <= 0.0) continue;
          for (const CellCoord& c : f.cells) cand[c] = g;
        }
        if (cand.empty()) {
          // Fully explored belief: chase the least revisited regions.
          map.for_each([&](CellCoord c, CellState s, uint32_t) {
            if (s == CellState::Free) cand[c] = smooth_gain_window(*cov, c);
          });
        }
        break;
      }
      case AgentKind::GreedyCuriosity: {
        double max_err = 0.0;
        for (const auto& [k, e] : err_) max_err = std::max(max_err, e);
        for (const auto& [k, e] : err_) {
          if (e <= 0.0) continue;
          cand[cell_from_key(k)] = e;
        }
        if (max_err > 0.0) {
          // Unseen terrain is optimistically worth more than the worst
          // prediction error measured so far, in proportion to how much a
          // frontier still has to reveal.
          for (const Frontier& f : detect_frontiers(map)) {
            const int sky = unknown_sky(map, rep_of(f));
            if (sky <= 0) continue;
            for (const CellCoord& c : f.cells) cand[c] = 1.5 * max_err * sky;
          }
        }
        break;
      }
      case AgentKind::GreedyReconstruction: {
        const auto* rec = view.rewards.reconstruction;
        if (!rec) break;
        for (size_t i = 0; i < rec->query_cells.size(); ++i) {
          // A query whose cell is already mapped has been seen up close;
          // whatever loss remains there, a revisit won't reduce it. Chase
          // the queries still in the dark.
          if (map.state(rec->query_cells[i]) != CellState::Unexplored)
            continue;
          const double loss =
              i < rec->query_losses.size() ? rec->query_losses[i] : 1.0;
          if (loss <= 0.0) continue;
          cand[rec->query_cells[i]] = rec->scale * loss;
        }
        break;
      }
      default:
        break;
    }
    if (cand.empty()) return;

    const auto costs = planner::bfs_costs(grid, cur);
    const auto visited_lately = [&](CellCoord c) {
      for (const CellCoord& r : recent_)
        if (r == c) return true;
      return false;
    };
    double best = 0.0;
    for (const auto& [c, gain] : cand) {
      // A spot occupied within the last interval has no realizable gain
      // left; skipping it breaks ping-pong between two flanking targets.
      if (gain <= 0.0 || c == cur || !grid.open_at(c)) continue;
      if (visited_lately(c)) continue;
      const int cost = costs[grid.idx(c)];
      if (cost < 0) continue;
      // Reaching a target early still spends the whole interval there, so
      // a nearby sliver amortizes over the interval, not its tiny cost.
      const double score =
          gain / (std::max(cost, p_.replan_interval) + 1.0);
      if (score > best) {
        best = score;
        target_ = c;
      }
    }
  }

  static CellCoord cell_from_key(uint64_t k) {
    return {static_cast<int32_t>(k >> 32),
            static_cast<int32_t>(k & 0xffffffffu)};
  }

  AgentKind kind_;
  GreedyParams p_;
  Rng rng_;
  std::optional<CellCoord> target_;
  std::vector<CellCoord> path_;
  size_t path_idx_ = 0;
  int since_replan_ = 0;
  std::deque<CellCoord> recent_;
  std::optional<CellCoord> prev_cell_;
  std::unordered_map<uint64_t, double, CellKeyHash> err_;
  std::unordered_map<uint64_t, int, CellKeyHash> visits_;
};

}  // namespace

std::unique_ptr<Agent> make_agent(AgentKind kind, const AgentParams& params,
                                  uint64_t rng_seed) {
  switch (kind) {
    case AgentKind::Random:
    case AgentKind::Forward:
    case AgentKind::ForwardPlus:
      return std::make_unique<HeuristicAgent>(kind, rng_seed);
    case AgentKind::Frontier:
      return std::make_unique<FrontierAgent>(params.frontier, rng_seed);
    case AgentKind::OracleRandom:
    case AgentKind::OracleLandmarks:
    case AgentKind::OracleObjects:
      return std::make_unique<OracleAgent>(kind, rng_seed);
    default:
      return std::make_unique<GreedyAgent>(kind, params.greedy, rng_seed);
  }
}

}  // namespace explore::agents
