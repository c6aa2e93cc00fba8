#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "explore/mapping.hpp"
#include "explore/planner.hpp"
#include "explore/rewards.hpp"
#include "explore/rng.hpp"
#include "explore/world.hpp"

namespace explore::agents {

enum class AgentKind : uint8_t {
  Random,
  Forward,
  ForwardPlus,
  Frontier,
  OracleRandom,
  OracleLandmarks,
  OracleObjects,
  GreedyNovelty,
  GreedyCoverage,
  GreedySmoothCoverage,
  GreedyCuriosity,
  GreedyReconstruction,
};

inline constexpr AgentKind kAllAgentKinds[] = {
    AgentKind::Random,          AgentKind::Forward,
    AgentKind::ForwardPlus,     AgentKind::Frontier,
    AgentKind::OracleRandom,    AgentKind::OracleLandmarks,
    AgentKind::OracleObjects,   AgentKind::GreedyNovelty,
    AgentKind::GreedyCoverage,  AgentKind::GreedySmoothCoverage,
    AgentKind::GreedyCuriosity, AgentKind::GreedyReconstruction,
};

const char* to_string(AgentKind k);
std::optional<AgentKind> agent_from_string(const std::string& s);
bool is_oracle(AgentKind k);
bool is_greedy(AgentKind k);

// Treats free and unexplored map cells as traversable, then seals the blocked
// set with a 3x3 morphological close (dilate then erode). The grid extends
// `margin` cells beyond the map bounds so paths may skirt the known area.
planner::TraversabilityGrid process_map(const mapping::OccupancyMap& map,
                                        int margin = 2);

// A frontier cell is a Free cell 4-adjacent to at least one Unexplored cell
// (out-of-map reads as unexplored). Contours are 8-connected components,
// cells sorted, contours ordered by first cell.
struct Frontier {
  std::vector<CellCoord> cells;
  size_t length() const { return cells.size(); }
};
std::vector<Frontier> detect_frontiers(const mapping::OccupancyMap& map);
bool is_frontier_cell(const mapping::OccupancyMap& map, CellCoord c);

// One step of the heuristic policies (random / forward / forward+).
world::Action heuristic_action(AgentKind kind, const world::Observation& obs,
                               Rng& rng);

// Everything an agent may look at when choosing an action. Oracles read the
// environment and true pose; mapped agents read only belief state.
struct RewardView {
  const rewards::NoveltyState* novelty = nullptr;
  const rewards::CoverageState* coverage = nullptr;
  const rewards::ReconstructionTask* reconstruction = nullptr;
  double last_reward = 0.0;
};

struct AgentStepView {
  const world::GridEnvironment* env = nullptr;
  const world::Observation* obs = nullptr;
  const mapping::OccupancyMap* map = nullptr;
  const mapping::PoseEstimate* est = nullptr;
  RewardView rewards;
  int t = 0;
};

class Agent {
 public:
  virtual ~Agent() = default;
  // Emits exactly one action per step; never Stop during exploration.
  virtual world::Action act(const AgentStepView& view) = 0;
  // Debug hook for tests: current navigation target in map coordinates.
  virtual std::optional<CellCoord> current_target() const { return std::nullopt; }
};

struct FrontierParams {
  int n_fail = 2;
  int t_max = 200;
};

struct GreedyParams {
  int replan_interval = 8;
  int gain_window = 16;  // gain-estimate view radius (cells); sensor-matched
};

struct AgentParams {
  FrontierParams frontier;
  GreedyParams greedy;
};

std::unique_ptr<Agent> make_agent(AgentKind kind, const AgentParams& params,
                                  uint64_t rng_seed);

// Heading index nearest to a continuous angle.
int heading_from_angle(double theta);

// Next action to follow `path` (start..goal, 4-connected): rotate into the
// waypoint's cardinal bucket, then move. Returns nullopt when the path has no
// next waypoint.
std::optional<world::Action> follow_path_action(
    const std::vector<CellCoord>& path, int heading);

}  // namespace explore::agents
