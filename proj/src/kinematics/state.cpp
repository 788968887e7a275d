#include "vrd/kinematics/state.hpp"

#include <algorithm>
#include <stdexcept>

namespace vrd::kin {

KinematicState integrate(const KinematicState& s, const KinematicCommand& c, double dt, bool allow_reverse) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.heading) || !std::isfinite(s.speed) ||
      !std::isfinite(c.accel) || !std::isfinite(c.turn_rate)) {
    throw std::domain_error("integrate: non-finite input");
  }
  KinematicState n;
  n.speed = s.speed + c.accel * dt;
  if (!allow_reverse) n.speed = std::max(0.0, n.speed);
  n.heading = wrap_angle(s.heading + c.turn_rate * dt);
  // Same operation order as the batched tensor path, so both agree bitwise.
  const double step = n.speed * dt;
  n.x = s.x + step * std::cos(n.heading);
  n.y = s.y + step * std::sin(n.heading);
  return n;
}

}  // namespace vrd::kin
