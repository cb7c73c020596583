#include "croprow/planners.hpp"

#include <cstdlib>
#include "json.hpp"

namespace croprow {

std::string to_string(PlannerId id) {
  switch (id) {
    case PlannerId::Heuristic: return "heuristic";
    case PlannerId::GraphAStar: return "astar";
    case PlannerId::DQN: return "dqn";
  }
  return "unknown";
}

PlannerId planner_id_from_string(const std::string& name) {
  if (name == "heuristic") return PlannerId::Heuristic;
  if (name == "astar") return PlannerId::GraphAStar;
  if (name == "dqn") return PlannerId::DQN;
  throw DomainError("unknown planner '" + name + "' (expected heuristic, astar or dqn)");
}

void PlanRequest::validate() const {
  field.validate();
  validate_state(start, field);
  validate_goal(goal, field);
}

std::vector<Action> dedup(const std::vector<Action>& raw) {
  std::vector<Action> out;
  for (const auto& a : raw) {
    if (out.empty() || !(out.back() == a)) out.push_back(a);
  }
  return out;
}

double action_distance(const RobotState& start, const std::vector<Action>& actions) {
  RobotState s = start;
  double total = 0.0;
  for (const auto& a : actions) {
    s.orientation = a.orientation;
    if (a.is_switch()) {
      total += std::abs(a.target_corridor() - s.corridor);
      s.corridor = a.target_corridor();
    } else {
      s.y += vertical_direction(a);
      total += 1.0;
    }
  }
  return total;
}

std::vector<Action> expand_macros(const FieldSpec& field, const RobotState& start,
                                  const std::optional<GoalSpec>& goal,
                                  const std::vector<Action>& macros) {
  validate_state(start, field);
  RobotState s = start;
  std::vector<Action> raw;
  for (std::size_t i = 0; i < macros.size(); ++i) {
    const Action& m = macros[i];
    const std::string label = "macro " + std::to_string(i) + " " + format_actions({m});
    try {
      validate_action(m, field);
    } catch (const DomainError& e) {
      throw DomainError(label + ": " + e.what());
    }
    if (m.is_switch()) {
      if (!field.is_headland(s.y)) {
        throw IllegalAction(label + ": corridor switch away from a headland (y=" +
                            std::to_string(s.y) + ")");
      }
      if (m.target_corridor() >= field.num_corridors()) {
        throw IllegalAction(label + ": target corridor does not exist");
      }
      raw.push_back(m);
      s.orientation = m.orientation;
      s.corridor = m.target_corridor();
      continue;
    }
    const int direction = vertical_direction(m);
    int moved = 0;
    while (true) {
      const int next_y = s.y + direction;
      if (next_y < -1 || next_y > field.corridor_len) break;
      s.y = next_y;
      s.orientation = m.orientation;
      raw.push_back(m);
      ++moved;
      if (goal && is_goal(s, field, *goal)) break;
      if (field.is_headland(s.y)) break;
    }
    if (moved == 0) {
      throw IllegalAction(label + ": vertical move leaves the field at y=" + std::to_string(s.y));
    }
  }
  return raw;
}

namespace {

void emit_run(std::vector<Action>& out, Orientation o, int from, int to) {
  if (from == to) return;
  const int direction = to > from ? 1 : -1;
  const Action a = vertical_action(o, direction);
  for (int y = from; y != to; y += direction) out.push_back(a);
}

}  // namespace

PlanResult plan_heuristic(const PlanRequest& request) {
  const auto t0 = std::chrono::steady_clock::now();
  request.validate();
  const FieldSpec& field = request.field;
  const RobotState& s = request.start;
  const GoalSpec& goal = request.goal;

  PlanResult result;
  result.planner_id = PlannerId::Heuristic;
  const bool on_headland = field.is_headland(s.y);

  bool direct = false;
  for (const auto& config : goal_configs(field, goal)) {
    if (config.corridor == s.corridor && (config.orientation == s.orientation || on_headland)) {
      emit_run(result.raw_actions, config.orientation, s.y, goal.y);
      result.path_length = std::abs(s.y - goal.y);
      direct = true;
      break;
    }
  }

  if (!direct) {
    const int top = field.top_headland();
    const int bottom = FieldSpec::bottom_headland();
    const int via_top = std::abs(s.y - top) + std::abs(top - goal.y);
    const int via_bottom = std::abs(s.y - bottom) + std::abs(bottom - goal.y);
    const int edge = via_top <= via_bottom ? top : bottom;

    // West approach (row - 0.5, facing down) when the start lies west of the
    // goal row, east approach (row + 0.5, facing up) otherwise.
    const bool west = s.corridor_x() < goal.row;
    const int target = west ? goal.row - 1 : goal.row;
    const Orientation approach = west ? Orientation::Down : Orientation::Up;

    emit_run(result.raw_actions, s.orientation, s.y, edge);
    if (target != s.corridor) {
      result.raw_actions.push_back(Action::switch_to(approach, target));
    }
    emit_run(result.raw_actions, approach, edge, goal.y);
    result.path_length = std::min(via_top, via_bottom) + std::abs(target - s.corridor);
  }

  result.macro_actions = dedup(result.raw_actions);
  result.planning_time = std::chrono::steady_clock::now() - t0;
  return result;
}

std::size_t count_in_corridor_turns(const FieldSpec& field, const RobotState& start,
                                    const std::vector<Action>& actions) {
  RobotState s = start;
  std::size_t turns = 0;
  for (const auto& a : actions) {
    if (a.orientation != s.orientation && !field.is_headland(s.y)) ++turns;
    s.orientation = a.orientation;
    if (a.is_switch()) {
      s.corridor = a.target_corridor();
    } else {
      const int y = s.y + vertical_direction(a);
      if (y >= -1 && y <= field.corridor_len) s.y = y;
    }
  }
  return turns;
}

std::string format_actions(const std::vector<Action>& actions) {
  std::string out = "[";
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out += ",";
    out += "[" + std::to_string(to_int(actions[i].orientation)) + "," +
           std::to_string(actions[i].move) + "]";
  }
  return out + "]";
}

std::vector<Action> parse_actions(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError(std::string("action list is not valid JSON: ") + e.what());
  }
  if (!j.is_array()) throw DomainError("action list must be a JSON array of [o,m] pairs");
  std::vector<Action> actions;
  for (const auto& item : j) {
    if (!item.is_array() || item.size() != 2 || !item[0].is_number_integer() ||
        !item[1].is_number_integer()) {
      throw DomainError("each action must be an [orientation, move] integer pair, got " +
                        item.dump());
    }
    const int move = item[1].get<int>();
    if (move < 0) throw DomainError("move must be >= 0, got " + std::to_string(move));
    actions.push_back({orientation_from_int(item[0].get<int>()), move});
  }
  return actions;
}

}  // namespace croprow
