#include "croprow/route.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "croprow/planners.hpp"
#include "json.hpp"

namespace croprow::route {

void FieldGeometry::validate() const {
  if (!(row_spacing_m > 0.0)) throw RouteError("row_spacing_m must be > 0");
  if (!(corridor_length_m > 0.0)) throw RouteError("corridor_length_m must be > 0");
  if (headland_offset_m < 0.0) throw RouteError("headland_offset_m must be >= 0");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RouteError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw RouteError("cannot write " + path);
  out << content;
  if (!out) throw RouteError("failed writing " + path);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct WorldPoint {
  double e;
  double n;
};

WorldPoint to_world(double x, double y, const FieldGeometry& g) {
  const double c = std::cos(g.heading_rad);
  const double s = std::sin(g.heading_rad);
  return {g.origin_e + c * x - s * y, g.origin_n + s * x + c * y};
}

std::pair<double, double> to_local(double e, double n, const FieldGeometry& g) {
  const double c = std::cos(g.heading_rad);
  const double s = std::sin(g.heading_rad);
  const double de = e - g.origin_e;
  const double dn = n - g.origin_n;
  return {c * de + s * dn, -s * de + c * dn};
}

}  // namespace

FieldGeometry parse_geometry(const std::string& text) {
  FieldGeometry g;
  const std::map<std::string, double FieldGeometry::*> keys = {
      {"row_spacing_m", &FieldGeometry::row_spacing_m},
      {"corridor_length_m", &FieldGeometry::corridor_length_m},
      {"origin_e", &FieldGeometry::origin_e},
      {"origin_n", &FieldGeometry::origin_n},
      {"heading_rad", &FieldGeometry::heading_rad},
      {"headland_offset_m", &FieldGeometry::headland_offset_m},
  };
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw RouteError("geometry line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end()) throw RouteError("unknown geometry key '" + key + "'");
    try {
      std::size_t used = 0;
      g.*(it->second) = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw RouteError("geometry key '" + key + "' has a non-numeric value '" + value + "'");
    }
  }
  g.validate();
  return g;
}

FieldGeometry load_geometry(const std::string& path) { return parse_geometry(read_file(path)); }

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::Exit: return "exit";
    case Phase::Switch: return "switch";
    case Phase::Enter: return "enter";
    case Phase::Approach: return "approach";
  }
  return "unknown";
}

std::string to_string(Direction direction) {
  return direction == Direction::Forward ? "forward" : "backward";
}

Phase phase_from_string(const std::string& text) {
  for (auto p : {Phase::Exit, Phase::Switch, Phase::Enter, Phase::Approach}) {
    if (to_string(p) == text) return p;
  }
  throw RouteError("unknown phase '" + text + "'");
}

Direction direction_from_string(const std::string& text) {
  if (text == "forward") return Direction::Forward;
  if (text == "backward") return Direction::Backward;
  throw RouteError("unknown direction '" + text + "'");
}

double WaypointPath::polyline_length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    total += std::hypot(points[i].x_m - points[i - 1].x_m, points[i].y_m - points[i - 1].y_m);
  }
  return total;
}

int snap_to_sections(double real_y_m, double corridor_length_m) {
  if (!(corridor_length_m > 0.0)) throw DomainError("corridor length must be positive");
  if (real_y_m < 0.0 || real_y_m > corridor_length_m) {
    throw DomainError("y " + format_double(real_y_m) + " m outside the corridor [0, " +
                      format_double(corridor_length_m) + "]");
  }
  const double idx = std::round(kSections * real_y_m / corridor_length_m - 0.5);
  return std::clamp(static_cast<int>(idx), 0, kSections - 1);
}

double section_center(int section, double corridor_length_m) {
  return (section + 0.5) * corridor_length_m / kSections;
}

double metric_y(int abstract_y, const FieldGeometry& g) {
  if (abstract_y <= -1) return -g.headland_offset_m;
  if (abstract_y >= kSections) return g.corridor_length_m + g.headland_offset_m;
  return section_center(abstract_y, g.corridor_length_m);
}

double centerline_x(int corridor, const FieldGeometry& g) {
  return (corridor + 0.5) * g.row_spacing_m;
}

WaypointPath compile(const std::vector<Action>& macros, const RobotState& start,
                     const FieldGeometry& geometry, const RouteContext& context) {
  geometry.validate();
  FieldSpec field;
  try {
    field = FieldSpec::make(context.num_rows, kSections);
    validate_state(start, field);
    if (context.goal) validate_goal(*context.goal, field);
  } catch (const DomainError& e) {
    throw RouteError(std::string("invalid route context: ") + e.what());
  }

  // Expand macro by macro so errors can name the offending one.
  std::vector<std::vector<Action>> runs;
  std::vector<bool> ends_on_headland;
  RobotState s = start;
  for (std::size_t i = 0; i < macros.size(); ++i) {
    std::vector<Action> run;
    try {
      run = expand_macros(field, s, context.goal, {macros[i]});
    } catch (const std::exception& e) {
      std::string what = e.what();
      if (what.rfind("macro 0 ", 0) == 0) what = what.substr(8);
      throw RouteError("macro " + std::to_string(i) + " " + what);
    }
    for (const auto& a : run) {
      s.orientation = a.orientation;
      if (a.is_switch()) {
        s.corridor = a.target_corridor();
      } else {
        s.y += vertical_direction(a);
      }
    }
    runs.push_back(std::move(run));
    ends_on_headland.push_back(field.is_headland(s.y));
  }

  std::vector<Phase> phases(macros.size(), Phase::Approach);
  const auto first_switch = std::find_if(macros.begin(), macros.end(),
                                         [](const Action& a) { return a.is_switch(); });
  if (first_switch != macros.end()) {
    const auto first = static_cast<std::size_t>(first_switch - macros.begin());
    std::size_t last = first;
    for (std::size_t i = first; i < macros.size(); ++i) {
      if (macros[i].is_switch()) last = i;
    }
    for (std::size_t i = 0; i < macros.size(); ++i) {
      phases[i] = i < first ? Phase::Exit : (i <= last ? Phase::Switch : Phase::Enter);
    }
  } else {
    const auto exit_end = std::find(ends_on_headland.begin(), ends_on_headland.end(), true);
    if (exit_end != ends_on_headland.end()) {
      const auto k = static_cast<std::size_t>(exit_end - ends_on_headland.begin());
      for (std::size_t i = 0; i < macros.size(); ++i) {
        phases[i] = i <= k ? Phase::Exit : Phase::Enter;
      }
    }
  }

  WaypointPath path;
  s = start;
  path.points.push_back({centerline_x(s.corridor, geometry), metric_y(s.y, geometry),
                         phases.empty() ? Phase::Approach : phases.front(), Direction::Forward});
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (const auto& a : runs[i]) {
      s.orientation = a.orientation;
      if (a.is_switch()) {
        s.corridor = a.target_corridor();
      } else {
        s.y += vertical_direction(a);
      }
      const Waypoint w{centerline_x(s.corridor, geometry), metric_y(s.y, geometry), phases[i],
                       a.move == Action::kBackward ? Direction::Backward : Direction::Forward};
      const Waypoint& prev = path.points.back();
      if (w.x_m == prev.x_m && w.y_m == prev.y_m) continue;
      path.points.push_back(w);
    }
  }
  if (!macros.empty()) path.points.front().direction = path.points.size() > 1
                                                           ? path.points[1].direction
                                                           : Direction::Forward;
  return path;
}

double expected_polyline_length(const RobotState& start, const std::vector<Action>& raw,
                                const FieldGeometry& geometry) {
  const double s = geometry.section_length();
  int lateral = 0;
  int vertical = 0;
  int touching_headland = 0;
  RobotState st = start;
  auto headland = [](int y) { return y == -1 || y == kSections; };
  for (const auto& a : raw) {
    st.orientation = a.orientation;
    if (a.is_switch()) {
      lateral += std::abs(a.target_corridor() - st.corridor);
      st.corridor = a.target_corridor();
    } else {
      const int y0 = st.y;
      st.y += vertical_direction(a);
      ++vertical;
      if (headland(y0) || headland(st.y)) ++touching_headland;
    }
  }
  return lateral * geometry.row_spacing_m + vertical * s +
         touching_headland * (geometry.headland_offset_m - 0.5 * s);
}

namespace {

int abstract_y_from_metric(double y_m, const FieldGeometry& g) {
  if (y_m < 0.0) return -1;
  if (y_m > g.corridor_length_m) return kSections;
  return snap_to_sections(y_m, g.corridor_length_m);
}

int corridor_from_metric(double x_m, const FieldGeometry& g) {
  return static_cast<int>(std::lround(x_m / g.row_spacing_m - 0.5));
}

}  // namespace

AbstractRoute abstract_route(const WaypointPath& path, const FieldGeometry& geometry,
                             Orientation start_orientation) {
  if (path.points.empty()) throw RouteError("cannot abstract an empty waypoint path");
  AbstractRoute route;
  route.start = {corridor_from_metric(path.points.front().x_m, geometry),
                 abstract_y_from_metric(path.points.front().y_m, geometry), start_orientation};

  std::vector<Action> raw;
  RobotState s = route.start;
  std::optional<int> pending_corridor;
  for (std::size_t i = 1; i < path.points.size(); ++i) {
    const Waypoint& p = path.points[i];
    const int corridor = corridor_from_metric(p.x_m, geometry);
    const int y = abstract_y_from_metric(p.y_m, geometry);
    if (corridor != s.corridor) {
      pending_corridor = corridor;
      s.corridor = corridor;
      continue;
    }
    const int direction = y > s.y ? 1 : -1;
    const bool forward = p.direction == Direction::Forward;
    const Orientation o = (forward == (direction > 0)) ? Orientation::Up : Orientation::Down;
    if (pending_corridor) {
      raw.push_back(Action::switch_to(o, *pending_corridor));
      pending_corridor.reset();
    }
    raw.push_back(vertical_action(o, direction));
    s.y = y;
    s.orientation = o;
  }
  if (pending_corridor) raw.push_back(Action::switch_to(s.orientation, *pending_corridor));
  route.macros = dedup(raw);
  return route;
}

std::string to_csv(const WaypointPath& path, const FieldGeometry& geometry) {
  std::string out = "x_m,y_m,phase,direction\n";
  for (const auto& p : path.points) {
    const auto w = to_world(p.x_m, p.y_m, geometry);
    out += format_double(w.e) + "," + format_double(w.n) + "," + to_string(p.phase) + "," +
           to_string(p.direction) + "\n";
  }
  return out;
}

std::string to_geojson(const WaypointPath& path, const FieldGeometry& geometry) {
  if (path.points.empty()) throw RouteError("cannot export an empty waypoint path");
  nlohmann::json coords = nlohmann::json::array();
  nlohmann::json phases = nlohmann::json::array();
  nlohmann::json directions = nlohmann::json::array();
  for (const auto& p : path.points) {
    const auto w = to_world(p.x_m, p.y_m, geometry);
    coords.push_back({w.e, w.n});
    phases.push_back(to_string(p.phase));
    directions.push_back(to_string(p.direction));
  }
  nlohmann::json geometry_json;
  if (path.points.size() == 1) {
    geometry_json = {{"type", "Point"}, {"coordinates", coords[0]}};
  } else {
    geometry_json = {{"type", "LineString"}, {"coordinates", coords}};
  }
  const nlohmann::json doc = {
      {"type", "FeatureCollection"},
      {"features",
       {{{"type", "Feature"},
         {"geometry", geometry_json},
         {"properties",
          {{"phase", phases}, {"direction", directions}, {"crs", "local-metric"}}}}}}};
  return doc.dump(2) + "\n";
}

void write_csv(const WaypointPath& path, const FieldGeometry& geometry, const std::string& file) {
  if (path.points.empty()) throw RouteError("cannot export an empty waypoint path");
  write_file(file, to_csv(path, geometry));
}

void write_geojson(const WaypointPath& path, const FieldGeometry& geometry,
                   const std::string& file) {
  write_file(file, to_geojson(path, geometry));
}

WaypointPath from_csv(const std::string& text, const FieldGeometry& geometry) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "x_m,y_m,phase,direction") {
    throw RouteError("unexpected waypoint CSV header");
  }
  WaypointPath path;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) throw RouteError("malformed waypoint CSV row: " + line);
    const auto [x, y] = to_local(std::stod(cells[0]), std::stod(cells[1]), geometry);
    path.points.push_back({x, y, phase_from_string(cells[2]), direction_from_string(cells[3])});
  }
  return path;
}

WaypointPath from_geojson(const std::string& text, const FieldGeometry& geometry) {
  const auto doc = nlohmann::json::parse(text);
  const auto& feature = doc.at("features").at(0);
  const auto& geom = feature.at("geometry");
  const auto& props = feature.at("properties");
  nlohmann::json coords = geom.at("coordinates");
  if (geom.at("type") == "Point") coords = nlohmann::json::array({coords});
  WaypointPath path;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto [x, y] = to_local(coords[i][0].get<double>(), coords[i][1].get<double>(), geometry);
    path.points.push_back({x, y, phase_from_string(props.at("phase")[i].get<std::string>()),
                           direction_from_string(props.at("direction")[i].get<std::string>())});
  }
  return path;
}

}  // namespace croprow::route
