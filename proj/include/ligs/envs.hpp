#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ligs/config.hpp"
#include "ligs/rng.hpp"

namespace ligs {

enum class EnvKind { kJointForage, kThreeSection, kSparseVersus, kCorridor };

// Per-agent primitive actions. The y axis grows downward, so kUp is y - 1.
enum Action : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4, kCollect = 5 };
inline constexpr int kNumActions = 6;

enum class SectionLock { kFree, kTop, kBottom };

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

struct Apple {
  Cell pos;
  int level = 1;
  bool alive = true;
};

struct EnvParams {
  EnvKind kind = EnvKind::kJointForage;
  int width = 8;
  int height = 8;
  int episode_limit = 50;
  std::vector<int> agent_levels = {1, 2};
  int num_apples = 3;
  int apple_level = 3;
  // Failed-coordination penalty (joint_forage).
  double penalty = 0.5;
  // three_section constants; reward per top tile is section_r / band tile count.
  double section_r = 1.0;
  double section_big_r = 0.75;
  double opponent_epsilon = 0.1;
};

EnvParams env_params_for(ExperimentId id);

struct StepResult {
  Eigen::VectorXd next_state;
  std::vector<double> per_agent_reward;
  double team_reward = 0.0;
  bool done = false;
  std::map<std::string, double> info;
};

struct OpponentMove {
  int action = kStay;
  bool explored = false;  // true when the epsilon branch produced the move
};

// Deterministic-transition gridworld with simultaneous joint actions.
//
// Movement resolution: every agent declares a target cell; a move is cancelled
// when the target is a wall, outside the grid, an apple, a forbidden band
// (three_section locks), a cell kept by an agent that stays, a swap, or a cell
// contested by a lower-index agent. Cancellations repeat until stable.
// In the corridor task the corridor segment holds at most one agent.
class GridEnv {
 public:
  explicit GridEnv(EnvParams params);

  Eigen::VectorXd reset(Rng& rng);
  // rng drives the scripted opponent in sparse_versus; other kinds ignore it.
  StepResult step(std::span<const int> joint_action, Rng& rng);
  Eigen::VectorXd encode_state() const;

  // Overrides the layout for tests and tooling; resets tick, locks and flags.
  void set_layout(std::vector<Cell> agents, std::vector<Apple> apples, Cell opponent = {});

  const EnvParams& params() const { return params_; }
  EnvKind kind() const { return params_.kind; }
  int num_agents() const { return static_cast<int>(params_.agent_levels.size()); }
  int state_dim() const;
  int tick() const { return tick_; }
  bool done() const { return done_; }
  bool success() const { return success_; }
  const std::vector<Cell>& agent_positions() const { return agents_; }
  const std::vector<Apple>& apples() const { return apples_; }
  const std::vector<SectionLock>& section_locks() const { return locks_; }
  const std::vector<bool>& finished() const { return finished_; }
  Cell opponent() const { return opponent_; }

  bool in_bounds(Cell c) const;
  bool is_wall(Cell c) const;
  bool in_corridor(Cell c) const;
  // Band index 0 (top), 1 (middle), 2 (bottom) for three_section.
  int band_of(Cell c) const;
  Cell goal_of(int agent) const;
  Cell special_tile() const;
  int band_tile_count() const;

  // Exact configuration tuple (positions, apples, locks, flags) used as the
  // discrete key for count-based novelty. Excludes the tick.
  std::vector<int> config_key() const;

 private:
  std::vector<Cell> resolve_moves(std::span<const int> actions) const;
  bool has_apples() const;

  EnvParams params_;
  std::vector<Cell> agents_;
  std::vector<Apple> apples_;
  std::vector<SectionLock> locks_;
  std::vector<bool> finished_;
  Cell opponent_;
  int tick_ = 0;
  bool done_ = false;
  bool success_ = false;
};

Cell apply_action(Cell c, int action);
bool adjacent(Cell a, Cell b);

// Greedy Manhattan step toward the apple with tie order up > left > down >
// right, collect when adjacent, and a uniform random move with probability
// params.opponent_epsilon. Only valid for sparse_versus.
OpponentMove scripted_opponent(const GridEnv& env, Rng& rng);

}  // namespace ligs
