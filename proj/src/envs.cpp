#include "ligs/envs.hpp"

#include <algorithm>
#include <cstdlib>

#include "ligs/errors.hpp"

namespace ligs {
namespace {

constexpr int kCorridorLength = 3;

int cell_index(Cell c, int width) { return c.y * width + c.x; }

Cell random_cell(Rng& rng, int x_lo, int x_hi, int y_lo, int y_hi) {
  const int x = x_lo + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(x_hi - x_lo + 1)));
  const int y = y_lo + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(y_hi - y_lo + 1)));
  return {x, y};
}

bool contains(const std::vector<Cell>& cells, Cell c) {
  return std::find(cells.begin(), cells.end(), c) != cells.end();
}

}  // namespace

Cell apply_action(Cell c, int action) {
  switch (action) {
    case kUp: return {c.x, c.y - 1};
    case kDown: return {c.x, c.y + 1};
    case kLeft: return {c.x - 1, c.y};
    case kRight: return {c.x + 1, c.y};
    default: return c;
  }
}

bool adjacent(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y) == 1; }

EnvParams env_params_for(ExperimentId id) {
  EnvParams p;
  switch (id) {
    case ExperimentId::kForaging1:
      p.kind = EnvKind::kJointForage;
      p.width = 8;
      p.height = 8;
      p.episode_limit = 50;
      p.agent_levels = {1, 2};
      p.num_apples = 3;
      p.apple_level = 3;
      break;
    case ExperimentId::kForaging2:
      p.kind = EnvKind::kThreeSection;
      p.width = 9;
      p.height = 9;
      p.episode_limit = 50;
      p.agent_levels = {1, 1};
      p.num_apples = 0;
      break;
    case ExperimentId::kForaging3:
      p.kind = EnvKind::kSparseVersus;
      p.width = 8;
      p.height = 8;
      p.episode_limit = 50;
      p.agent_levels = {1, 1};
      p.num_apples = 1;
      p.apple_level = 1;
      break;
    case ExperimentId::kCorridor:
      p.kind = EnvKind::kCorridor;
      p.width = 11;
      p.height = 5;
      p.episode_limit = 60;
      p.agent_levels = {1, 1};
      p.num_apples = 0;
      break;
  }
  return p;
}

GridEnv::GridEnv(EnvParams params) : params_(std::move(params)) {
  if (params_.width < 1 || params_.height < 1) throw PreconditionError("grid must be nonempty");
  if (params_.agent_levels.empty() || params_.agent_levels.size() > 4) {
    throw PreconditionError("agent count must be in [1,4]");
  }
  if (params_.episode_limit < 1) throw PreconditionError("episode_limit must be >= 1");
  if (params_.kind == EnvKind::kJointForage) {
    int total = 0;
    for (int l : params_.agent_levels) total += l;
    if (total != params_.apple_level) {
      throw PreconditionError("joint_forage requires sum of agent levels == apple level");
    }
  }
  if (params_.kind == EnvKind::kThreeSection && params_.height % 3 != 0) {
    throw PreconditionError("three_section height must be a multiple of 3");
  }
  if (params_.kind == EnvKind::kCorridor && (params_.width < kCorridorLength + 4 || params_.height < 3)) {
    throw PreconditionError("corridor grid too small");
  }
  const auto n = static_cast<std::size_t>(num_agents());
  agents_.assign(n, Cell{});
  locks_.assign(n, SectionLock::kFree);
  finished_.assign(n, false);
}

bool GridEnv::has_apples() const {
  return params_.kind == EnvKind::kJointForage || params_.kind == EnvKind::kSparseVersus;
}

int GridEnv::state_dim() const {
  const int cells = params_.width * params_.height;
  int d = num_agents() * cells + 1;
  if (has_apples()) d += cells + params_.num_apples;
  switch (params_.kind) {
    case EnvKind::kThreeSection: d += 2 * num_agents(); break;
    case EnvKind::kSparseVersus: d += cells; break;
    case EnvKind::kCorridor: d += num_agents(); break;
    case EnvKind::kJointForage: break;
  }
  return d;
}

bool GridEnv::in_bounds(Cell c) const {
  return c.x >= 0 && c.y >= 0 && c.x < params_.width && c.y < params_.height;
}

bool GridEnv::in_corridor(Cell c) const {
  if (params_.kind != EnvKind::kCorridor) return false;
  const int start = (params_.width - kCorridorLength) / 2;
  return c.y == params_.height / 2 && c.x >= start && c.x < start + kCorridorLength;
}

bool GridEnv::is_wall(Cell c) const {
  if (params_.kind != EnvKind::kCorridor) return false;
  const int start = (params_.width - kCorridorLength) / 2;
  return c.x >= start && c.x < start + kCorridorLength && c.y != params_.height / 2;
}

int GridEnv::band_of(Cell c) const {
  const int band_height = params_.height / 3;
  return std::clamp(c.y / band_height, 0, 2);
}

int GridEnv::band_tile_count() const { return params_.width * (params_.height / 3); }

Cell GridEnv::special_tile() const { return {params_.width - 1, params_.height - 1}; }

Cell GridEnv::goal_of(int agent) const {
  // Agent 0 starts on the left and heads right; every other agent the reverse.
  const int row = params_.height / 2;
  return agent == 0 ? Cell{params_.width - 1, row} : Cell{0, row};
}

void GridEnv::set_layout(std::vector<Cell> agents, std::vector<Apple> apples, Cell opponent) {
  if (agents.size() != agents_.size()) throw PreconditionError("set_layout: agent count mismatch");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (!in_bounds(agents[i]) || is_wall(agents[i])) {
      throw PreconditionError("set_layout: agent outside the walkable grid");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (agents[i] == agents[j]) throw PreconditionError("set_layout: agents share a cell");
    }
  }
  agents_ = std::move(agents);
  apples_ = std::move(apples);
  opponent_ = opponent;
  locks_.assign(agents_.size(), SectionLock::kFree);
  finished_.assign(agents_.size(), false);
  if (params_.kind == EnvKind::kThreeSection) {
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      const int band = band_of(agents_[i]);
      locks_[i] = band == 0 ? SectionLock::kTop : band == 2 ? SectionLock::kBottom : SectionLock::kFree;
    }
  }
  tick_ = 0;
  done_ = false;
  success_ = false;
}

Eigen::VectorXd GridEnv::reset(Rng& rng) {
  const int w = params_.width;
  const int h = params_.height;
  std::vector<Cell> taken;
  const auto draw_free = [&](int x_lo, int x_hi, int y_lo, int y_hi) {
    for (;;) {
      const Cell c = random_cell(rng, x_lo, x_hi, y_lo, y_hi);
      if (!contains(taken, c) && !is_wall(c)) {
        taken.push_back(c);
        return c;
      }
    }
  };

  std::vector<Cell> agents;
  std::vector<Apple> apples;
  Cell opponent{};
  switch (params_.kind) {
    case EnvKind::kJointForage: {
      // Interior apples, pairwise non-touching, so each keeps free neighbours.
      while (static_cast<int>(apples.size()) < params_.num_apples) {
        const Cell c = random_cell(rng, 1, w - 2, 1, h - 2);
        const bool clash = std::any_of(apples.begin(), apples.end(), [&](const Apple& a) {
          return std::abs(a.pos.x - c.x) <= 1 && std::abs(a.pos.y - c.y) <= 1;
        });
        if (!clash) {
          apples.push_back({c, params_.apple_level, true});
          taken.push_back(c);
        }
      }
      for (int i = 0; i < num_agents(); ++i) agents.push_back(draw_free(0, w - 1, 0, h - 1));
      break;
    }
    case EnvKind::kThreeSection: {
      const int row = h / 2;
      for (int i = 0; i < num_agents(); ++i) agents.push_back(draw_free(0, w - 1, row, row));
      break;
    }
    case EnvKind::kSparseVersus: {
      const int left = w / 2 - 1;
      for (int i = 0; i < params_.num_apples; ++i) {
        apples.push_back({draw_free(0, left, 0, h - 1), params_.apple_level, true});
      }
      for (int i = 0; i < num_agents(); ++i) agents.push_back(draw_free(0, left, 0, h - 1));
      opponent = draw_free(w - 1, w - 1, 0, h - 1);
      break;
    }
    case EnvKind::kCorridor: {
      const int start = (w - kCorridorLength) / 2;
      taken.push_back(goal_of(0));
      taken.push_back(goal_of(1));
      for (int i = 0; i < num_agents(); ++i) {
        agents.push_back(i == 0 ? draw_free(0, start - 1, 0, h - 1)
                                : draw_free(start + kCorridorLength, w - 1, 0, h - 1));
      }
      break;
    }
  }
  set_layout(std::move(agents), std::move(apples), opponent);
  return encode_state();
}

std::vector<Cell> GridEnv::resolve_moves(std::span<const int> actions) const {
  const bool versus = params_.kind == EnvKind::kSparseVersus;
  const std::size_t n_agents = agents_.size();
  const std::size_t n = n_agents + (versus ? 1 : 0);
  std::vector<Cell> pos(agents_);
  if (versus) pos.push_back(opponent_);
  std::vector<bool> active(n, true);
  for (std::size_t i = 0; i < n_agents; ++i) active[i] = !finished_[i];

  const auto blocked = [&](std::size_t i, Cell target) {
    if (!in_bounds(target) || is_wall(target)) return true;
    for (const Apple& a : apples_) {
      if (a.alive && a.pos == target) return true;
    }
    if (params_.kind == EnvKind::kThreeSection && i < n_agents && locks_[i] != SectionLock::kFree &&
        band_of(target) == 1) {
      return true;
    }
    return false;
  };

  std::vector<Cell> desired(pos);
  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i]) continue;
    const Cell target = apply_action(pos[i], actions[i]);
    if (!(target == pos[i]) && !blocked(i, target)) desired[i] = target;
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || desired[i] == pos[i]) continue;
      bool cancel = false;
      for (std::size_t j = 0; j < n && !cancel; ++j) {
        if (j == i || !active[j]) continue;
        const bool j_stays = desired[j] == pos[j];
        if (j_stays && pos[j] == desired[i]) cancel = true;                       // occupied
        else if (desired[j] == desired[i] && j < i) cancel = true;               // contested
        else if (desired[j] == pos[i] && desired[i] == pos[j]) cancel = true;   // swap
        else if (in_corridor(desired[i]) && !in_corridor(pos[i]) && in_corridor(desired[j]) &&
                 (in_corridor(pos[j]) || j < i)) {
          cancel = true;  // corridor already taken or claimed first
        }
      }
      if (cancel) {
        desired[i] = pos[i];
        changed = true;
      }
    }
  }
  return desired;
}

StepResult GridEnv::step(std::span<const int> joint_action, Rng& rng) {
  if (done_) throw EnvError("step called on a finished episode; call reset first");
  if (static_cast<int>(joint_action.size()) != num_agents()) {
    throw EnvError("joint action has " + std::to_string(joint_action.size()) + " entries, expected " +
                   std::to_string(num_agents()));
  }
  for (int a : joint_action) {
    if (a < 0 || a >= kNumActions) throw EnvError("action index out of range: " + std::to_string(a));
  }

  const std::size_t n = agents_.size();
  StepResult result;
  result.per_agent_reward.assign(n, 0.0);
  ++tick_;

  std::vector<int> actions(joint_action.begin(), joint_action.end());
  if (params_.kind == EnvKind::kSparseVersus) {
    const OpponentMove om = scripted_opponent(*this, rng);
    actions.push_back(om.action);
    result.info["opponent_action"] = om.action;
  }

  // Collection uses positions at the start of the tick; collectors do not move.
  if (params_.kind == EnvKind::kJointForage) {
    std::vector<bool> assigned(n, false);
    double collected = 0.0;
    for (Apple& apple : apples_) {
      if (!apple.alive) continue;
      std::vector<std::size_t> collectors;
      int level_sum = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!assigned[i] && actions[i] == kCollect && adjacent(agents_[i], apple.pos)) {
          collectors.push_back(i);
          level_sum += params_.agent_levels[i];
          assigned[i] = true;
        }
      }
      if (collectors.empty()) continue;
      if (level_sum >= apple.level) {
        apple.alive = false;
        collected += 1.0;
        for (std::size_t i = 0; i < n; ++i) result.per_agent_reward[i] += 1.0;
        result.team_reward += 1.0;
      } else {
        for (std::size_t i : collectors) {
          result.per_agent_reward[i] -= params_.penalty;
          result.team_reward -= params_.penalty;
        }
        result.info["failed_collect"] += static_cast<double>(collectors.size());
      }
    }
    result.info["apples_collected"] = collected;
    const bool all_collected =
        std::none_of(apples_.begin(), apples_.end(), [](const Apple& a) { return a.alive; });
    if (all_collected) {
      success_ = true;
      done_ = true;
    }
  } else if (params_.kind == EnvKind::kSparseVersus) {
    bool team_collects = false;
    bool opponent_collects = false;
    for (Apple& apple : apples_) {
      if (!apple.alive) continue;
      for (std::size_t i = 0; i < n; ++i) {
        if (actions[i] == kCollect && adjacent(agents_[i], apple.pos)) team_collects = true;
      }
      if (actions[n] == kCollect && adjacent(opponent_, apple.pos)) opponent_collects = true;
      if (team_collects || opponent_collects) apple.alive = false;
    }
    if (team_collects && !opponent_collects) {
      result.team_reward = 1.0;
      for (double& r : result.per_agent_reward) r = 1.0;
      success_ = true;
    }
    if (team_collects || opponent_collects) done_ = true;
    result.info["opponent_collected"] = opponent_collects ? 1.0 : 0.0;
  }

  const std::vector<Cell> next = resolve_moves(actions);
  for (std::size_t i = 0; i < n; ++i) agents_[i] = next[i];
  if (params_.kind == EnvKind::kSparseVersus) opponent_ = next[n];

  if (params_.kind == EnvKind::kThreeSection) {
    for (std::size_t i = 0; i < n; ++i) {
      if (locks_[i] != SectionLock::kFree) continue;
      const int band = band_of(agents_[i]);
      if (band == 0) locks_[i] = SectionLock::kTop;
      if (band == 2) locks_[i] = SectionLock::kBottom;
    }
    const double small = params_.section_r / band_tile_count();
    int top_rewarded = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (band_of(agents_[i]) == 0) {
        result.per_agent_reward[i] += small;
        ++top_rewarded;
      }
    }
    const bool all_bottom =
        std::all_of(agents_.begin(), agents_.end(), [&](Cell c) { return band_of(c) == 2; });
    const bool on_special = contains(agents_, special_tile());
    for (std::size_t i = 0; i < n; ++i) {
      if (band_of(agents_[i]) == 2) result.per_agent_reward[i] -= small * top_rewarded;
    }
    if (all_bottom && on_special) {
      for (double& r : result.per_agent_reward) r += params_.section_big_r;
      success_ = true;
      result.info["big_reward"] = 1.0;
    }
    for (double r : result.per_agent_reward) result.team_reward += r;
  } else if (params_.kind == EnvKind::kCorridor) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!finished_[i] && agents_[i] == goal_of(static_cast<int>(i))) {
        finished_[i] = true;
        result.per_agent_reward[i] += 1.0;
        result.team_reward += 1.0;
      }
    }
    if (std::all_of(finished_.begin(), finished_.end(), [](bool f) { return f; })) {
      success_ = true;
      done_ = true;
    }
  }

  if (tick_ >= params_.episode_limit) done_ = true;
  result.done = done_;
  result.next_state = encode_state();
  return result;
}

Eigen::VectorXd GridEnv::encode_state() const {
  const int w = params_.width;
  const int cells = w * params_.height;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(state_dim());
  int offset = 0;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    if (!finished_[i]) s[offset + cell_index(agents_[i], w)] = 1.0;
    offset += cells;
  }
  if (has_apples()) {
    for (const Apple& a : apples_) {
      if (a.alive) s[offset + cell_index(a.pos, w)] = 1.0;
    }
    offset += cells;
    int max_level = 0;
    for (int l : params_.agent_levels) max_level += l;
    for (int k = 0; k < params_.num_apples; ++k) {
      if (k < static_cast<int>(apples_.size()) && apples_[k].alive) {
        s[offset + k] = static_cast<double>(apples_[k].level) / std::max(max_level, 1);
      }
    }
    offset += params_.num_apples;
  }
  s[offset++] = static_cast<double>(tick_) / params_.episode_limit;
  switch (params_.kind) {
    case EnvKind::kThreeSection:
      for (SectionLock lock : locks_) {
        s[offset++] = lock == SectionLock::kTop ? 1.0 : 0.0;
        s[offset++] = lock == SectionLock::kBottom ? 1.0 : 0.0;
      }
      break;
    case EnvKind::kSparseVersus:
      s[offset + cell_index(opponent_, w)] = 1.0;
      offset += cells;
      break;
    case EnvKind::kCorridor:
      for (bool f : finished_) s[offset++] = f ? 1.0 : 0.0;
      break;
    case EnvKind::kJointForage: break;
  }
  return s;
}

std::vector<int> GridEnv::config_key() const {
  std::vector<int> key;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    key.push_back(agents_[i].x);
    key.push_back(agents_[i].y);
    key.push_back(finished_[i] ? 1 : 0);
    key.push_back(static_cast<int>(locks_[i]));
  }
  for (const Apple& a : apples_) {
    key.push_back(a.alive ? 1 : 0);
    key.push_back(a.pos.x);
    key.push_back(a.pos.y);
  }
  if (params_.kind == EnvKind::kSparseVersus) {
    key.push_back(opponent_.x);
    key.push_back(opponent_.y);
  }
  return key;
}

OpponentMove scripted_opponent(const GridEnv& env, Rng& rng) {
  if (env.kind() != EnvKind::kSparseVersus) {
    throw PreconditionError("scripted_opponent requires a sparse_versus environment");
  }
  const Cell me = env.opponent();
  const Apple* target = nullptr;
  for (const Apple& a : env.apples()) {
    if (a.alive) {
      target = &a;
      break;
    }
  }
  if (target == nullptr) return {kStay, false};
  if (adjacent(me, target->pos)) return {kCollect, false};
  if (rng.uniform() < env.params().opponent_epsilon) {
    return {static_cast<int>(rng.uniform_int(4)), true};
  }
  const int current = std::abs(me.x - target->pos.x) + std::abs(me.y - target->pos.y);
  for (int action : {kUp, kLeft, kDown, kRight}) {
    const Cell c = apply_action(me, action);
    if (!env.in_bounds(c) || c == target->pos) continue;
    const int d = std::abs(c.x - target->pos.x) + std::abs(c.y - target->pos.y);
    if (d < current) return {action, false};
  }
  return {kStay, false};
}

}  // namespace ligs
