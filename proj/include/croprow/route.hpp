// Compiles abstract macro actions into metric corridor-centerline waypoints.
//
// Local frame: x runs across the rows (corridor k is centred on
// (k + 0.5) * row_spacing_m), y runs along them from the bottom row end
// (0) to the top row end (corridor_length_m). Corridors are divided into
// ten sections; abstract y = k maps to the section centre, y = -1 and
// y = 10 map to the headland lines at -headland_offset_m and
// corridor_length_m + headland_offset_m. Exported files use the world frame
// origin + R(heading) * (x, y).
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "croprow/env.hpp"

namespace croprow::route {

inline constexpr int kSections = 10;

class RouteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FieldGeometry {
  double row_spacing_m = 0.76;
  double corridor_length_m = 207.0;
  double origin_e = 0.0;
  double origin_n = 0.0;
  double heading_rad = 0.0;
  double headland_offset_m = 1.0;

  void validate() const;
  double section_length() const { return corridor_length_m / kSections; }
};

/// Plain-text "key = value" format; '#' starts a comment. Keys:
/// row_spacing_m, corridor_length_m, origin_e, origin_n, heading_rad,
/// headland_offset_m. Unknown keys are rejected by name.
FieldGeometry parse_geometry(const std::string& text);
FieldGeometry load_geometry(const std::string& path);

enum class Phase { Exit, Switch, Enter, Approach };
enum class Direction { Forward, Backward };

std::string to_string(Phase phase);
std::string to_string(Direction direction);
Phase phase_from_string(const std::string& text);
Direction direction_from_string(const std::string& text);

struct Waypoint {
  double x_m = 0.0;
  double y_m = 0.0;
  Phase phase = Phase::Approach;
  Direction direction = Direction::Forward;
};

struct WaypointPath {
  std::vector<Waypoint> points;

  double polyline_length() const;
};

/// Nearest section centre: clamp(round(10 y / length - 0.5), 0, 9).
int snap_to_sections(double real_y_m, double corridor_length_m);
double section_center(int section, double corridor_length_m);

/// Local-frame y for an abstract 10-section coordinate (headlands included).
double metric_y(int abstract_y, const FieldGeometry& geometry);
double centerline_x(int corridor, const FieldGeometry& geometry);

struct RouteContext {
  int num_rows = 0;
  std::optional<GoalSpec> goal;  // stops the final run at the goal section
};

/// Start is given in 10-section abstract coordinates. Throws RouteError
/// naming the offending macro when the sequence cannot be executed.
WaypointPath compile(const std::vector<Action>& macros, const RobotState& start,
                     const FieldGeometry& geometry, const RouteContext& context);

/// Expected polyline length of a unit-step action sequence: lateral units
/// times row spacing, vertical units times the section length, plus
/// (headland_offset - section_length / 2) for every vertical step that
/// touches a headland.
double expected_polyline_length(const RobotState& start, const std::vector<Action>& raw,
                                const FieldGeometry& geometry);

struct AbstractRoute {
  RobotState start;
  std::vector<Action> macros;
};

/// Inverse of compile: snaps points back to corridors and sections and
/// rebuilds the macro sequence. The start orientation cannot be recovered
/// from positions alone and must be supplied.
AbstractRoute abstract_route(const WaypointPath& path, const FieldGeometry& geometry,
                             Orientation start_orientation);

void write_csv(const WaypointPath& path, const FieldGeometry& geometry, const std::string& file);
void write_geojson(const WaypointPath& path, const FieldGeometry& geometry,
                   const std::string& file);
std::string to_csv(const WaypointPath& path, const FieldGeometry& geometry);
std::string to_geojson(const WaypointPath& path, const FieldGeometry& geometry);

/// Readers return points in the local frame.
WaypointPath from_csv(const std::string& text, const FieldGeometry& geometry);
WaypointPath from_geojson(const std::string& text, const FieldGeometry& geometry);

}  // namespace croprow::route
