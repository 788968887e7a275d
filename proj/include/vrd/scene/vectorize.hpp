#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vrd/scene/types.hpp"

namespace vrd::scene {

/// Attribute slots of the one-hot block: three map kinds, then four object classes.
inline constexpr std::size_t kAttributeCount = kPolylineKindCount + kObjectClassCount;
inline int attribute_of(PolylineKind k) { return static_cast<int>(k); }
inline int attribute_of(ObjectClass c) { return kPolylineKindCount + static_cast<int>(c); }

struct Vector {
  Point2 start;
  Point2 end;
  int attribute = 0;
  /// Seconds relative to the encoding step (<= 0); zero for map vectors.
  double time = 0.0;
  std::size_t polyline = 0;
};

struct VectorPolyline {
  bool is_agent = false;
  int attribute = 0;
  std::string source_id;  // map polyline id or agent id
  std::size_t first_vector = 0;
  std::size_t vector_count = 0;
};

/// The vectorized observation at one step, in the ego frame of that step.
struct VectorSet {
  Pose2 frame;  // ego pose in the map frame
  std::size_t step = 0;
  std::vector<Vector> vectors;
  std::vector<VectorPolyline> polylines;
  /// Slot order of agents, ego first, then ascending agent id.
  std::vector<std::string> agent_ids;
  std::vector<std::size_t> agent_polyline;
  std::vector<ObjectClass> agent_classes;
  /// State of each agent at `step`, ego frame.
  std::vector<KinematicState> agent_states;

  bool empty() const { return vectors.empty(); }
  std::size_t agent_count() const { return agent_ids.size(); }
};

struct VectorizeOptions {
  double crop_radius = 100.0;
  double resample_spacing = 2.0;
  /// History length in steps; 0 means the scenario's observation_len.
  std::size_t history_len = 0;
};

/// Resamples at uniform arc length, keeping both endpoints.
std::vector<Point2> resample_polyline(const std::vector<Point2>& pts, double spacing);

/// Builds the vectorized observation at step t.
/// Throws ScenarioError if the ego is invalid at t or no map survives cropping.
VectorSet vectorize(const Scenario& scenario, std::size_t t, const VectorizeOptions& opt = {});

}  // namespace vrd::scene
