// Discrete crop-row world: state space, transition dynamics, rewards, goal
// predicate and a ground-truth shortest-path oracle.
//
// Coordinates: planted rows sit at integer x = 0..R-1. Robots drive in the
// interior corridors at x = k + 0.5 for k = 0..R-2, which we store as the
// corridor index k. Vertical position y runs over 0..L-1 inside a corridor;
// y = -1 is the bottom headland and y = L the top headland. Lateral moves and
// free reorientation happen only on headlands.
#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace croprow {

enum class Orientation : std::uint8_t { Up = 0, Down = 1 };

constexpr int to_int(Orientation o) { return static_cast<int>(o); }
constexpr Orientation flipped(Orientation o) {
  return o == Orientation::Up ? Orientation::Down : Orientation::Up;
}
Orientation orientation_from_int(int value);

/// Thrown for malformed states, goals, actions or field dimensions.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown when a corridor switch is attempted away from a headland.
class IllegalAction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FieldSpec {
  int num_rows = 0;
  int corridor_len = 0;
  int max_steps = 0;

  /// Field with the default episode budget, max(10 (L + 2), 2 (L + 2) + R).
  static FieldSpec make(int num_rows, int corridor_len);
  static int default_max_steps(int num_rows, int corridor_len);

  int num_corridors() const { return num_rows - 1; }
  int top_headland() const { return corridor_len; }
  static constexpr int bottom_headland() { return -1; }
  bool is_headland(int y) const { return y == -1 || y == corridor_len; }

  void validate() const;

  friend bool operator==(const FieldSpec&, const FieldSpec&) = default;
};

struct RobotState {
  int corridor = 0;  // index k, world x = k + 0.5
  int y = 0;
  Orientation orientation = Orientation::Up;

  double corridor_x() const { return corridor + 0.5; }

  friend auto operator<=>(const RobotState&, const RobotState&) = default;
};

/// Half-integer corridor coordinate (0.5, 1.5, ...) to corridor index.
int corridor_index_from_x(double corridor_x);

void validate_state(const RobotState& state, const FieldSpec& field);

struct GoalSpec {
  int row = 0;
  int y = 0;

  friend bool operator==(const GoalSpec&, const GoalSpec&) = default;
};

void validate_goal(const GoalSpec& goal, const FieldSpec& field);

/// [orientation, move]. Moves 0/1 are unit forward/backward steps; a move
/// m >= 2 switches to corridor x = m - 1.5 (index m - 2).
struct Action {
  Orientation orientation = Orientation::Up;
  int move = 0;

  static constexpr int kForward = 0;
  static constexpr int kBackward = 1;

  static Action vertical(Orientation o, int move) { return {o, move}; }
  static Action switch_to(Orientation o, int corridor) { return {o, corridor + 2}; }

  bool is_switch() const { return move >= 2; }
  int target_corridor() const { return move - 2; }

  friend bool operator==(const Action&, const Action&) = default;
};

void validate_action(const Action& action, const FieldSpec& field);

/// Unit-step action that moves vertically by `direction` (+1 up, -1 down)
/// while keeping orientation `o`.
Action vertical_action(Orientation o, int direction);

/// Signed vertical displacement produced by a vertical action.
int vertical_direction(const Action& action);

struct RewardParts {
  double step_penalty = 0.0;
  double switch_penalty = 0.0;
  double turn_penalty = 0.0;
  double oscillation_penalty = 0.0;
  double goal_reward = 0.0;
  double closer_corridor_bonus = 0.0;

  double total() const {
    return step_penalty + switch_penalty + turn_penalty + oscillation_penalty +
           goal_reward + closer_corridor_bonus;
  }
};

namespace reward {
inline constexpr double kStep = -0.2;
inline constexpr double kSwitchPerRow = -0.2;
inline constexpr double kTurn = -1.5;
inline constexpr double kOscillation = -1.5;
inline constexpr double kGoal = 20.0;
inline constexpr double kCloserCorridor = 5.0;
}  // namespace reward

struct StepOutcome {
  RobotState next_state;
  double reward = 0.0;
  bool done = false;
  RewardParts reward_parts;
  double distance_delta = 0.0;
  int vertical_displacement = 0;
};

/// Per-episode history that the reward depends on.
struct StepContext {
  std::optional<int> prev_displacement;
  std::optional<int> initial_corridor;  // defaults to the current corridor
};

struct GoalConfig {
  int corridor = 0;
  int y = 0;
  Orientation orientation = Orientation::Up;

  friend auto operator<=>(const GoalConfig&, const GoalConfig&) = default;
};

/// Configurations from which the arm's left-side work zone covers the goal:
/// east corridor facing up, west corridor facing down.
std::vector<GoalConfig> goal_configs(const FieldSpec& field, const GoalSpec& goal);

bool is_goal(const RobotState& state, const FieldSpec& field, const GoalSpec& goal);

StepOutcome step(const RobotState& state, const Action& action, const FieldSpec& field,
                 const GoalSpec& goal, const StepContext& context = {});

/// [x / R, (y + 1) / (L + 1), orientation, goal_row / R, goal_y / L].
std::array<float, 5> observe(const RobotState& state, const GoalSpec& goal,
                             const FieldSpec& field);

/// Gym-style episode wrapper: tracks the step budget, the previous vertical
/// displacement and the episode-initial corridor.
class CropRowEnv {
 public:
  CropRowEnv(FieldSpec field, RobotState start, GoalSpec goal);

  struct Transition {
    StepOutcome outcome;
    bool truncated = false;
  };

  Transition step(const Action& action);

  const FieldSpec& field() const { return field_; }
  const GoalSpec& goal() const { return goal_; }
  const RobotState& state() const { return state_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }
  bool truncated() const { return steps_ >= field_.max_steps && !done_; }
  std::array<float, 5> observation() const { return observe(state_, goal_, field_); }

 private:
  FieldSpec field_;
  GoalSpec goal_;
  RobotState state_;
  int initial_corridor_;
  std::optional<int> prev_displacement_;
  int steps_ = 0;
  bool done_ = false;
};

struct OracleResult {
  double distance = 0.0;
  bool exists = false;
  std::vector<Action> actions;  // one shortest action sequence
};

/// Exhaustive uniform-cost search over every (corridor, y, orientation)
/// state. Vertical unit moves and adjacent headland moves cost 1, headland
/// reorientation is free and in-corridor reorientation is excluded.
OracleResult oracle_shortest(const FieldSpec& field, const RobotState& start,
                             const GoalSpec& goal);

enum class FailureReason : std::uint8_t {
  IllegalAction,
  DomainError,
  BudgetExhausted,
  ActionsExhausted,
  PlannerException,
};

std::string to_string(FailureReason reason);
std::optional<FailureReason> failure_reason_from_string(const std::string& text);

struct SimulationResult {
  bool success = false;
  double total_distance = 0.0;
  double total_reward = 0.0;
  RobotState final_state;
  int steps = 0;
  std::optional<FailureReason> failure;
  std::optional<std::size_t> failed_step;
  std::string message;
};

SimulationResult simulate(const FieldSpec& field, const RobotState& start, const GoalSpec& goal,
                          const std::vector<Action>& actions);

/// Builds env actions from primitive moves (unit vertical steps, free
/// headland flips, adjacent lateral moves). Consecutive lateral moves are
/// merged into one switch action carrying the orientation used on re-entry.
class ActionEncoder {
 public:
  explicit ActionEncoder(const RobotState& start);

  void vertical(int direction);
  void flip();
  void lateral(int direction);
  std::vector<Action> finish();

 private:
  RobotState current_;
  int pending_corridor_;
  Orientation pending_orientation_;
  std::vector<Action> actions_;
};

}  // namespace croprow
