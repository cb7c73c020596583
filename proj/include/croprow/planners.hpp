// Deterministic planners over the crop-row world and the shared planner
// result type.
#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "croprow/env.hpp"

namespace croprow {

enum class PlannerId : std::uint8_t { Heuristic, GraphAStar, DQN };

std::string to_string(PlannerId id);
PlannerId planner_id_from_string(const std::string& name);

struct PlanRequest {
  FieldSpec field;
  RobotState start;
  GoalSpec goal;

  void validate() const;
};

struct PlanResult {
  std::vector<Action> raw_actions;
  std::vector<Action> macro_actions;
  double path_length = 0.0;
  std::chrono::nanoseconds planning_time{0};
  PlannerId planner_id = PlannerId::Heuristic;
  bool success = true;  // planner's own view; benchmarks re-verify by simulation
  std::size_t expansions = 0;
};

/// Collapses maximal runs of identical actions into one element.
std::vector<Action> dedup(const std::vector<Action>& raw);

/// Sum of distance_delta over an action sequence executed from `start`,
/// without reward or goal bookkeeping.
double action_distance(const RobotState& start, const std::vector<Action>& actions);

/// Expands macro actions under move-to-limit semantics: a vertical macro
/// repeats until the robot reaches a headland or a goal configuration, a
/// switch macro executes once. Pass no goal to run every vertical macro to
/// the corridor end. Throws IllegalAction for an inexecutable macro.
std::vector<Action> expand_macros(const FieldSpec& field, const RobotState& start,
                                  const std::optional<GoalSpec>& goal,
                                  const std::vector<Action>& macros);

/// Three-stage rule planner: direct approach, exit via the cheaper headland,
/// switch to the goal-adjacent corridor nearest the start, re-enter.
PlanResult plan_heuristic(const PlanRequest& request);

/// A* over the implicit corridor/headland macro graph.
PlanResult plan_astar(const PlanRequest& request);

/// Admissible and consistent cost-to-go used by plan_astar.
int astar_heuristic(const FieldSpec& field, const std::vector<GoalConfig>& configs,
                    const RobotState& node);

/// Orientation changes at y outside the headlands in a raw action sequence.
std::size_t count_in_corridor_turns(const FieldSpec& field, const RobotState& start,
                                    const std::vector<Action>& actions);

/// Formats actions as the bracketed list [[o,m],...].
std::string format_actions(const std::vector<Action>& actions);

/// Parses "[[o,m],...]" (whitespace tolerated).
std::vector<Action> parse_actions(const std::string& text);

}  // namespace croprow
