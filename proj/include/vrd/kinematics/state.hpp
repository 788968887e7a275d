#pragma once

#include <cmath>
#include <numbers>

namespace vrd::kin {

/// Pose and speed of one agent. Heading in (-pi, pi], speed >= 0.
struct KinematicState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;

  bool operator==(const KinematicState&) const = default;
};

/// Controls in m/s^2 and rad/s.
struct KinematicCommand {
  double accel = 0.0;
  double turn_rate = 0.0;

  bool operator==(const KinematicCommand&) const = default;
};

struct CommandBounds {
  double max_accel = 10.0;
  double max_turn_rate = 1.5;
};

/// Maps any angle into (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

/// Forward-Euler step: speed and heading first, then position with the new
/// speed and heading. Speed is clamped at zero unless allow_reverse is set.
KinematicState integrate(const KinematicState& s, const KinematicCommand& c, double dt, bool allow_reverse = false);

}  // namespace vrd::kin
