#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vrd/kinematics/state.hpp"

namespace vrd::scene {

using kin::KinematicState;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

/// Rigid 2D frame: origin and heading of the frame's x axis in the parent frame.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Point2 to_local(Point2 p) const {
    const double c = std::cos(heading), s = std::sin(heading);
    const double dx = p.x - x, dy = p.y - y;
    return {c * dx + s * dy, -s * dx + c * dy};
  }
  Point2 to_parent(Point2 p) const {
    const double c = std::cos(heading), s = std::sin(heading);
    return {x + c * p.x - s * p.y, y + s * p.x + c * p.y};
  }
  KinematicState to_local(const KinematicState& st) const {
    const auto p = to_local(Point2{st.x, st.y});
    return {p.x, p.y, kin::wrap_angle(st.heading - heading), st.speed};
  }
  KinematicState to_parent(const KinematicState& st) const {
    const auto p = to_parent(Point2{st.x, st.y});
    return {p.x, p.y, kin::wrap_angle(st.heading + heading), st.speed};
  }
};

enum class PolylineKind { LaneCenterline, Boundary, Crosswalk };
enum class ObjectClass { Vehicle, Pedestrian, Cyclist, Other };

inline constexpr int kPolylineKindCount = 3;
inline constexpr int kObjectClassCount = 4;

std::string_view to_string(PolylineKind k);
std::string_view to_string(ObjectClass c);
PolylineKind parse_polyline_kind(std::string_view s);
ObjectClass parse_object_class(std::string_view s);

struct MapPolyline {
  std::string id;
  PolylineKind kind = PolylineKind::LaneCenterline;
  std::vector<Point2> points;

  bool operator==(const MapPolyline&) const = default;
};

/// One state per scenario step; `valid` marks observed steps.
struct AgentTrack {
  std::string agent_id;
  ObjectClass object_class = ObjectClass::Vehicle;
  std::vector<KinematicState> states;
  std::vector<bool> valid;

  bool valid_at(std::size_t t) const { return t < valid.size() && valid[t]; }
  bool valid_over(std::size_t begin, std::size_t end) const;
  bool operator==(const AgentTrack&) const = default;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  std::string id;
  double sample_rate = 10.0;
  std::vector<MapPolyline> polylines;
  std::vector<AgentTrack> tracks;
  std::string ego_id;
  std::size_t observation_len = 40;
  std::size_t horizon_len = 60;

  std::size_t num_steps() const { return tracks.empty() ? 0 : tracks.front().states.size(); }
  double step_seconds() const { return 1.0 / sample_rate; }
  /// Index of the last observed step.
  std::size_t current_step() const { return observation_len - 1; }

  const AgentTrack& ego() const;
  const AgentTrack* find(std::string_view agent_id) const;

  bool operator==(const Scenario&) const = default;
};

inline constexpr double kMaxPlausibleSpeed = 100.0;

/// Every violated invariant, one message each. Empty means valid.
std::vector<std::string> validate(const Scenario& s);
/// Throws ScenarioError naming the first violation.
void require_valid(const Scenario& s);

/// Applies a rigid transform to every coordinate in the scenario.
Scenario transformed(const Scenario& s, const Pose2& frame_in_world);

}  // namespace vrd::scene
