#include "croprow/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace croprow {

Orientation orientation_from_int(int value) {
  if (value == 0) return Orientation::Up;
  if (value == 1) return Orientation::Down;
  throw DomainError("orientation must be 0 (up) or 1 (down), got " + std::to_string(value));
}

int FieldSpec::default_max_steps(int num_rows, int corridor_len) {
  return std::max(10 * (corridor_len + 2), 2 * (corridor_len + 2) + num_rows);
}

FieldSpec FieldSpec::make(int num_rows, int corridor_len) {
  FieldSpec field{num_rows, corridor_len, default_max_steps(num_rows, corridor_len)};
  field.validate();
  return field;
}

void FieldSpec::validate() const {
  if (num_rows < 2) {
    throw DomainError("field needs at least 2 rows, got " + std::to_string(num_rows));
  }
  if (corridor_len < 1) {
    throw DomainError("corridor length must be >= 1, got " + std::to_string(corridor_len));
  }
  const int min_budget = 2 * (corridor_len + 2) + num_rows;
  if (max_steps < min_budget) {
    throw DomainError("max_steps " + std::to_string(max_steps) + " is below the minimum " +
                      std::to_string(min_budget));
  }
}

int corridor_index_from_x(double corridor_x) {
  const double shifted = corridor_x - 0.5;
  const double rounded = std::round(shifted);
  if (std::abs(shifted - rounded) > 1e-9 || rounded < 0) {
    throw DomainError("corridor x must be a half-integer >= 0.5, got " +
                      std::to_string(corridor_x));
  }
  return static_cast<int>(rounded);
}

void validate_state(const RobotState& state, const FieldSpec& field) {
  if (state.corridor < 0 || state.corridor >= field.num_corridors()) {
    throw DomainError("corridor x " + std::to_string(state.corridor_x()) +
                      " outside the interior corridors of a " + std::to_string(field.num_rows) +
                      "-row field");
  }
  if (state.y < -1 || state.y > field.corridor_len) {
    throw DomainError("y " + std::to_string(state.y) + " outside [-1, " +
                      std::to_string(field.corridor_len) + "]");
  }
  if (state.orientation != Orientation::Up && state.orientation != Orientation::Down) {
    throw DomainError("invalid orientation");
  }
}

void validate_goal(const GoalSpec& goal, const FieldSpec& field) {
  if (goal.row < 0 || goal.row >= field.num_rows) {
    throw DomainError("goal row " + std::to_string(goal.row) + " outside [0, " +
                      std::to_string(field.num_rows - 1) + "]");
  }
  if (goal.y < 0 || goal.y >= field.corridor_len) {
    throw DomainError("goal y " + std::to_string(goal.y) + " outside [0, " +
                      std::to_string(field.corridor_len - 1) + "]");
  }
}

void validate_action(const Action& action, const FieldSpec& field) {
  if (action.orientation != Orientation::Up && action.orientation != Orientation::Down) {
    throw DomainError("invalid action orientation");
  }
  if (action.move < 0 || action.move > field.num_rows) {
    throw DomainError("move " + std::to_string(action.move) + " outside [0, " +
                      std::to_string(field.num_rows) + "]");
  }
}

Action vertical_action(Orientation o, int direction) {
  const bool forward = (direction > 0) == (o == Orientation::Up);
  return Action::vertical(o, forward ? Action::kForward : Action::kBackward);
}

int vertical_direction(const Action& action) {
  const int facing = action.orientation == Orientation::Up ? 1 : -1;
  return action.move == Action::kForward ? facing : -facing;
}

std::vector<GoalConfig> goal_configs(const FieldSpec& field, const GoalSpec& goal) {
  validate_goal(goal, field);
  std::vector<GoalConfig> configs;
  // East corridor (row + 0.5) has index `row`, west corridor (row - 0.5) has `row - 1`.
  if (goal.row <= field.num_corridors() - 1) {
    configs.push_back({goal.row, goal.y, Orientation::Up});
  }
  if (goal.row >= 1) {
    configs.push_back({goal.row - 1, goal.y, Orientation::Down});
  }
  return configs;
}

bool is_goal(const RobotState& state, const FieldSpec& field, const GoalSpec& goal) {
  for (const auto& config : goal_configs(field, goal)) {
    if (config.corridor == state.corridor && config.y == state.y &&
        config.orientation == state.orientation) {
      return true;
    }
  }
  return false;
}

StepOutcome step(const RobotState& state, const Action& action, const FieldSpec& field,
                 const GoalSpec& goal, const StepContext& context) {
  validate_state(state, field);
  validate_action(action, field);

  StepOutcome out;
  RewardParts& parts = out.reward_parts;
  RobotState next = state;
  const bool on_headland = field.is_headland(state.y);

  if (action.orientation != state.orientation && !on_headland) {
    parts.turn_penalty = reward::kTurn;
  }
  next.orientation = action.orientation;

  if (action.is_switch()) {
    if (!on_headland) {
      throw IllegalAction("corridor switch to x=" + std::to_string(action.target_corridor() + 0.5) +
                          " attempted inside a corridor at y=" + std::to_string(state.y));
    }
    const int rows = std::abs(action.target_corridor() - state.corridor);
    parts.switch_penalty = reward::kSwitchPerRow * rows;
    out.distance_delta = rows;
    next.corridor = action.target_corridor();
  } else {
    const int direction = vertical_direction(action);
    const int target_y = state.y + direction;
    if (target_y >= -1 && target_y <= field.corridor_len) {
      next.y = target_y;
      out.vertical_displacement = direction;
      out.distance_delta = 1.0;
    }
    parts.step_penalty = reward::kStep;
  }

  if (!on_headland && context.prev_displacement && out.vertical_displacement != 0 &&
      out.vertical_displacement == -*context.prev_displacement) {
    parts.oscillation_penalty = reward::kOscillation;
  }

  if (is_goal(next, field, goal)) {
    out.done = true;
    parts.goal_reward = reward::kGoal;
    const int initial = context.initial_corridor.value_or(state.corridor);
    int nearest = std::numeric_limits<int>::max();
    for (const auto& config : goal_configs(field, goal)) {
      nearest = std::min(nearest, std::abs(config.corridor - initial));
    }
    if (std::abs(next.corridor - initial) == nearest) {
      parts.closer_corridor_bonus = reward::kCloserCorridor;
    }
  }

  out.next_state = next;
  out.reward = parts.total();
  return out;
}

std::array<float, 5> observe(const RobotState& state, const GoalSpec& goal,
                             const FieldSpec& field) {
  const double rows = field.num_rows;
  const double len = field.corridor_len;
  return {static_cast<float>(state.corridor_x() / rows),
          static_cast<float>((state.y + 1) / (len + 1)),
          static_cast<float>(to_int(state.orientation)),
          static_cast<float>(goal.row / rows),
          static_cast<float>(goal.y / len)};
}

CropRowEnv::CropRowEnv(FieldSpec field, RobotState start, GoalSpec goal)
    : field_(field), goal_(goal), state_(start), initial_corridor_(start.corridor) {
  field_.validate();
  validate_state(state_, field_);
  validate_goal(goal_, field_);
  done_ = is_goal(state_, field_, goal_);
}

CropRowEnv::Transition CropRowEnv::step(const Action& action) {
  if (done_) throw DomainError("episode already finished");
  if (steps_ >= field_.max_steps) throw DomainError("episode step budget exhausted");
  Transition t;
  t.outcome = croprow::step(state_, action, field_, goal_,
                            StepContext{prev_displacement_, initial_corridor_});
  state_ = t.outcome.next_state;
  ++steps_;
  if (action.is_switch()) {
    prev_displacement_.reset();
  } else {
    prev_displacement_ = t.outcome.vertical_displacement;
  }
  done_ = t.outcome.done;
  t.truncated = !done_ && steps_ >= field_.max_steps;
  return t;
}

std::string to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::IllegalAction: return "illegal_action";
    case FailureReason::DomainError: return "domain_error";
    case FailureReason::BudgetExhausted: return "budget_exhausted";
    case FailureReason::ActionsExhausted: return "actions_exhausted";
    case FailureReason::PlannerException: return "planner_exception";
  }
  return "unknown";
}

std::optional<FailureReason> failure_reason_from_string(const std::string& text) {
  for (auto r : {FailureReason::IllegalAction, FailureReason::DomainError,
                 FailureReason::BudgetExhausted, FailureReason::ActionsExhausted,
                 FailureReason::PlannerException}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

SimulationResult simulate(const FieldSpec& field, const RobotState& start, const GoalSpec& goal,
                          const std::vector<Action>& actions) {
  CropRowEnv env(field, start, goal);
  SimulationResult result;
  result.final_state = start;
  if (env.done()) {
    result.success = true;
    return result;
  }

  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (env.steps() >= field.max_steps) {
      result.failure = FailureReason::BudgetExhausted;
      result.failed_step = i;
      result.message = "step budget of " + std::to_string(field.max_steps) + " exhausted";
      break;
    }
    try {
      const auto t = env.step(actions[i]);
      result.total_distance += t.outcome.distance_delta;
      result.total_reward += t.outcome.reward;
    } catch (const IllegalAction& e) {
      result.failure = FailureReason::IllegalAction;
      result.failed_step = i;
      result.message = e.what();
      break;
    } catch (const DomainError& e) {
      result.failure = FailureReason::DomainError;
      result.failed_step = i;
      result.message = e.what();
      break;
    }
    result.final_state = env.state();
    result.steps = env.steps();
    if (env.done()) {
      result.success = true;
      return result;
    }
  }

  if (!result.failure) {
    if (env.steps() >= field.max_steps) {
      result.failure = FailureReason::BudgetExhausted;
      result.message = "step budget of " + std::to_string(field.max_steps) + " exhausted";
    } else {
      result.failure = FailureReason::ActionsExhausted;
      result.message = "actions exhausted before reaching the goal";
    }
  }
  return result;
}

ActionEncoder::ActionEncoder(const RobotState& start)
    : current_(start), pending_corridor_(start.corridor), pending_orientation_(start.orientation) {}

void ActionEncoder::vertical(int direction) {
  if (pending_corridor_ != current_.corridor) {
    actions_.push_back(Action::switch_to(pending_orientation_, pending_corridor_));
    current_.corridor = pending_corridor_;
  }
  actions_.push_back(vertical_action(pending_orientation_, direction));
  current_.orientation = pending_orientation_;
  current_.y += direction;
}

void ActionEncoder::flip() { pending_orientation_ = flipped(pending_orientation_); }

void ActionEncoder::lateral(int direction) { pending_corridor_ += direction; }

std::vector<Action> ActionEncoder::finish() {
  if (pending_corridor_ != current_.corridor) {
    actions_.push_back(Action::switch_to(pending_orientation_, pending_corridor_));
    current_.corridor = pending_corridor_;
  }
  return std::move(actions_);
}

}  // namespace croprow
