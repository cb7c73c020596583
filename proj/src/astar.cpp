#include <algorithm>
#include <cstdlib>
#include <limits>
#include <queue>
#include <unordered_map>

#include "croprow/planners.hpp"

namespace croprow {
namespace {

// Nodes are encoded as a single key; y is shifted so headland -1 maps to 0.
std::uint64_t node_key(const RobotState& s) {
  return (static_cast<std::uint64_t>(s.corridor) << 32) |
         (static_cast<std::uint64_t>(s.y + 1) << 1) | static_cast<std::uint64_t>(to_int(s.orientation));
}

enum class EdgeKind : std::uint8_t { Vertical, Flip, Lateral };

struct NodeRecord {
  RobotState state;
  int g = std::numeric_limits<int>::max();
  std::uint64_t parent = 0;
  bool has_parent = false;
  bool closed = false;
  EdgeKind via = EdgeKind::Vertical;
};

struct OpenEntry {
  int f;
  std::uint64_t order;  // FIFO among equal f
  std::uint64_t key;
  int g;
  bool operator>(const OpenEntry& other) const {
    return f != other.f ? f > other.f : order > other.order;
  }
};

struct Successor {
  RobotState state;
  int cost;
  EdgeKind kind;
};

bool is_approach(const std::vector<GoalConfig>& configs, const RobotState& s) {
  for (const auto& c : configs) {
    if (c.corridor == s.corridor && c.orientation == s.orientation) return true;
  }
  return false;
}

void successors(const FieldSpec& field, const GoalSpec& goal,
                const std::vector<GoalConfig>& configs, const RobotState& s,
                std::vector<Successor>& out) {
  out.clear();
  const int top = field.top_headland();
  const int bottom = FieldSpec::bottom_headland();
  auto vertical_to = [&](int y) {
    if (y == s.y) return;
    RobotState n = s;
    n.y = y;
    out.push_back({n, std::abs(y - s.y), EdgeKind::Vertical});
  };

  if (!field.is_headland(s.y)) {
    vertical_to(top);
    vertical_to(bottom);
    if (is_approach(configs, s)) vertical_to(goal.y);
    return;
  }

  // Headland: left/right to an adjacent corridor, reorient in place, re-enter
  // toward the goal or traverse to the opposite headland.
  if (s.corridor > 0) {
    RobotState n = s;
    --n.corridor;
    out.push_back({n, 1, EdgeKind::Lateral});
  }
  if (s.corridor + 1 < field.num_corridors()) {
    RobotState n = s;
    ++n.corridor;
    out.push_back({n, 1, EdgeKind::Lateral});
  }
  RobotState turned = s;
  turned.orientation = flipped(s.orientation);
  out.push_back({turned, 0, EdgeKind::Flip});
  if (is_approach(configs, s)) vertical_to(goal.y);
  vertical_to(s.y == top ? bottom : top);
}

}  // namespace

int astar_heuristic(const FieldSpec& field, const std::vector<GoalConfig>& configs,
                    const RobotState& node) {
  const int top = field.top_headland();
  const int bottom = FieldSpec::bottom_headland();
  const bool on_headland = field.is_headland(node.y);
  int best = std::numeric_limits<int>::max();
  for (const auto& c : configs) {
    int bound;
    if (c.corridor == node.corridor && (c.orientation == node.orientation || on_headland)) {
      bound = std::abs(node.y - c.y);
    } else {
      const int via_edge = std::min(std::abs(node.y - top) + std::abs(top - c.y),
                                    std::abs(node.y - bottom) + std::abs(bottom - c.y));
      bound = std::abs(c.corridor - node.corridor) + via_edge;
    }
    best = std::min(best, bound);
  }
  return best;
}

PlanResult plan_astar(const PlanRequest& request) {
  const auto t0 = std::chrono::steady_clock::now();
  request.validate();
  const FieldSpec& field = request.field;
  const GoalSpec& goal = request.goal;
  const auto configs = goal_configs(field, goal);

  PlanResult result;
  result.planner_id = PlannerId::GraphAStar;

  std::unordered_map<std::uint64_t, NodeRecord> nodes;
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open;
  std::uint64_t order = 0;

  const std::uint64_t start_key = node_key(request.start);
  nodes[start_key] = NodeRecord{request.start, 0, 0, false, false, EdgeKind::Vertical};
  open.push({astar_heuristic(field, configs, request.start), order++, start_key, 0});

  std::optional<std::uint64_t> reached;
  std::vector<Successor> succ;
  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    NodeRecord& rec = nodes[top.key];
    if (rec.closed || top.g != rec.g) continue;
    rec.closed = true;
    if (is_goal(rec.state, field, goal)) {
      reached = top.key;
      break;
    }
    ++result.expansions;
    const RobotState current = rec.state;
    const int g = rec.g;
    successors(field, goal, configs, current, succ);
    for (const auto& next : succ) {
      const std::uint64_t key = node_key(next.state);
      const int tentative = g + next.cost;
      auto [it, inserted] = nodes.try_emplace(key);
      NodeRecord& child = it->second;
      if (inserted) child.state = next.state;
      if (child.closed || tentative >= child.g) continue;
      child.g = tentative;
      child.parent = top.key;
      child.has_parent = true;
      child.via = next.kind;
      open.push({tentative + astar_heuristic(field, configs, next.state), order++, key, tentative});
    }
  }

  if (!reached) {
    result.success = false;
    result.planning_time = std::chrono::steady_clock::now() - t0;
    return result;
  }

  std::vector<const NodeRecord*> chain;
  for (const NodeRecord* rec = &nodes.at(*reached);;) {
    chain.push_back(rec);
    if (!rec->has_parent) break;
    rec = &nodes.at(rec->parent);
  }
  std::reverse(chain.begin(), chain.end());

  ActionEncoder encoder(request.start);
  for (std::size_t i = 1; i < chain.size(); ++i) {
    const RobotState& from = chain[i - 1]->state;
    const RobotState& to = chain[i]->state;
    switch (chain[i]->via) {
      case EdgeKind::Flip: encoder.flip(); break;
      case EdgeKind::Lateral: encoder.lateral(to.corridor - from.corridor); break;
      case EdgeKind::Vertical: {
        const int direction = to.y > from.y ? 1 : -1;
        for (int y = from.y; y != to.y; y += direction) encoder.vertical(direction);
        break;
      }
    }
  }
  result.raw_actions = encoder.finish();
  result.macro_actions = dedup(result.raw_actions);
  result.path_length = nodes.at(*reached).g;
  result.planning_time = std::chrono::steady_clock::now() - t0;
  return result;
}

}  // namespace croprow
