#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <utility>

#include "croprow/env.hpp"

namespace croprow {
namespace {

enum class Edge : std::uint8_t { None, Up, Down, Flip, Left, Right };

struct StateIndexer {
  int corridors;
  int levels;  // L + 2 vertical positions including both headlands

  int size() const { return corridors * levels * 2; }
  int index(int corridor, int y, Orientation o) const {
    return ((corridor * levels) + (y + 1)) * 2 + to_int(o);
  }
  RobotState state(int idx) const {
    RobotState s;
    s.orientation = orientation_from_int(idx % 2);
    idx /= 2;
    s.y = idx % levels - 1;
    s.corridor = idx / levels;
    return s;
  }
};

}  // namespace

OracleResult oracle_shortest(const FieldSpec& field, const RobotState& start,
                             const GoalSpec& goal) {
  field.validate();
  validate_state(start, field);
  const auto configs = goal_configs(field, goal);

  OracleResult result;
  if (configs.empty()) return result;

  const StateIndexer ix{field.num_corridors(), field.corridor_len + 2};
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> dist(ix.size(), kInf);
  std::vector<int> parent(ix.size(), -1);
  std::vector<Edge> via(ix.size(), Edge::None);
  std::vector<char> is_target(ix.size(), 0);
  for (const auto& c : configs) is_target[ix.index(c.corridor, c.y, c.orientation)] = 1;

  using Entry = std::pair<int, int>;  // (distance, state)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const int source = ix.index(start.corridor, start.y, start.orientation);
  dist[source] = 0;
  open.emplace(0, source);

  int reached = -1;
  while (!open.empty()) {
    const auto [d, u] = open.top();
    open.pop();
    if (d != dist[u]) continue;
    if (is_target[u]) {
      reached = u;
      break;
    }
    const RobotState s = ix.state(u);
    auto relax = [&](int corridor, int y, Orientation o, int cost, Edge edge) {
      const int v = ix.index(corridor, y, o);
      if (d + cost < dist[v]) {
        dist[v] = d + cost;
        parent[v] = u;
        via[v] = edge;
        open.emplace(dist[v], v);
      }
    };
    if (s.y < field.corridor_len) relax(s.corridor, s.y + 1, s.orientation, 1, Edge::Up);
    if (s.y > -1) relax(s.corridor, s.y - 1, s.orientation, 1, Edge::Down);
    if (field.is_headland(s.y)) {
      relax(s.corridor, s.y, flipped(s.orientation), 0, Edge::Flip);
      if (s.corridor > 0) relax(s.corridor - 1, s.y, s.orientation, 1, Edge::Left);
      if (s.corridor + 1 < field.num_corridors()) {
        relax(s.corridor + 1, s.y, s.orientation, 1, Edge::Right);
      }
    }
  }

  if (reached < 0) return result;
  result.exists = true;
  result.distance = dist[reached];

  std::vector<Edge> edges;
  for (int v = reached; v != source; v = parent[v]) edges.push_back(via[v]);
  std::reverse(edges.begin(), edges.end());

  ActionEncoder encoder(start);
  for (Edge e : edges) {
    switch (e) {
      case Edge::Up: encoder.vertical(+1); break;
      case Edge::Down: encoder.vertical(-1); break;
      case Edge::Flip: encoder.flip(); break;
      case Edge::Left: encoder.lateral(-1); break;
      case Edge::Right: encoder.lateral(+1); break;
      case Edge::None: break;
    }
  }
  result.actions = encoder.finish();
  return result;
}

}  // namespace croprow
