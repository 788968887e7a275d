#pragma once

// Hand-built scenes for unit tests; independent of the synthetic generator.

#include <string>

#include "vrd/scene/types.hpp"

namespace vrd::testing {

/// Straight east-west lane along y = 0 plus a parallel boundary, with
/// `agents` vehicles at constant speed. Agent 0 is the ego.
inline scene::Scenario straight_scene(int agents, std::size_t steps = 100, double speed = 8.0) {
  scene::Scenario s;
  s.id = "straight-" + std::to_string(agents);
  s.ego_id = "ego";
  s.observation_len = 40;
  s.horizon_len = steps > 40 ? steps - 40 : 0;
  s.polylines.push_back({"lane-a", scene::PolylineKind::LaneCenterline, {{-50, 0}, {0, 0}, {150, 0}}});
  s.polylines.push_back({"edge-a", scene::PolylineKind::Boundary, {{-50, 2}, {150, 2}}});
  for (int a = 0; a < agents; ++a) {
    scene::AgentTrack tr;
    tr.agent_id = a == 0 ? "ego" : "car-" + std::to_string(a);
    tr.object_class = a % 3 == 2 ? scene::ObjectClass::Cyclist : scene::ObjectClass::Vehicle;
    const double v = speed + 0.5 * a;
    const double y = a == 0 ? 0.0 : (a % 2 ? 3.5 : -3.5);
    for (std::size_t t = 0; t < steps; ++t) {
      tr.states.push_back({-20.0 + 6.0 * a + v * 0.1 * static_cast<double>(t), y, 0.0, v});
      tr.valid.push_back(true);
    }
    s.tracks.push_back(tr);
  }
  return s;
}

}  // namespace vrd::testing
