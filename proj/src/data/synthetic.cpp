#include "vrd/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "vrd/common/rng.hpp"

namespace vrd::data {

namespace {

using kin::KinematicCommand;
using kin::KinematicState;
using scene::AgentTrack;
using scene::MapPolyline;
using scene::ObjectClass;
using scene::Point2;
using scene::PolylineKind;
using scene::Scenario;

constexpr double kDt = 0.1;
constexpr double kPi = std::numbers::pi;
constexpr std::array<std::string_view, kArchetypeCount> kNames{"straight", "protected_left", "unprotected_left",
                                                               "yield"};

/// Controller sees the step index and the current state.
using Controller = std::function<KinematicCommand(std::size_t, const KinematicState&)>;

std::vector<KinematicState> drive(KinematicState s, std::size_t steps, const Controller& ctl) {
  std::vector<KinematicState> out{s};
  for (std::size_t t = 1; t < steps; ++t) {
    s = kin::integrate(s, ctl(t - 1, s), kDt);
    out.push_back(s);
  }
  return out;
}

/// Smooth zero-mean perturbation built from two sinusoids.
struct Wobble {
  double a1 = 0, f1 = 0, p1 = 0, a2 = 0, f2 = 0, p2 = 0;
  Wobble() = default;
  Wobble(Rng& rng, double amplitude)
      : a1(amplitude * rng.uniform(0.5, 1.0)),
        f1(rng.uniform(0.05, 0.2)),
        p1(rng.uniform(0, 2 * kPi)),
        a2(amplitude * rng.uniform(0.2, 0.5)),
        f2(rng.uniform(0.2, 0.4)),
        p2(rng.uniform(0, 2 * kPi)) {}
  double operator()(std::size_t t) const {
    const double s = static_cast<double>(t) * kDt;
    return a1 * std::sin(2 * kPi * f1 * s + p1) + a2 * std::sin(2 * kPi * f2 * s + p2);
  }
};

/// Holds speed near `target` with a smooth perturbation and no steering.
Controller cruise(double target, Wobble accel) {
  return [=](std::size_t t, const KinematicState& s) { return KinematicCommand{0.8 * (target - s.speed) + accel(t), 0.0}; };
}

AgentTrack track(std::string id, ObjectClass c, std::vector<KinematicState> states) {
  AgentTrack tr;
  tr.agent_id = std::move(id);
  tr.object_class = c;
  tr.valid.assign(states.size(), true);
  tr.states = std::move(states);
  return tr;
}

MapPolyline line(std::string id, PolylineKind kind, std::vector<Point2> pts) { return {std::move(id), kind, std::move(pts)}; }

/// Polyline through every k-th state, extended straight by `extend` meters at both ends.
std::vector<Point2> path_polyline(const std::vector<KinematicState>& states, double extend, std::size_t every = 5) {
  std::vector<Point2> pts;
  const auto& f = states.front();
  pts.push_back({f.x - extend * std::cos(f.heading), f.y - extend * std::sin(f.heading)});
  for (std::size_t i = 0; i < states.size(); i += every) {
    Point2 p{states[i].x, states[i].y};
    if (std::hypot(p.x - pts.back().x, p.y - pts.back().y) > 0.5) pts.push_back(p);
  }
  const auto& b = states.back();
  Point2 last{b.x, b.y};
  if (std::hypot(last.x - pts.back().x, last.y - pts.back().y) > 0.5) pts.push_back(last);
  pts.push_back({b.x + extend * std::cos(b.heading), b.y + extend * std::sin(b.heading)});
  return pts;
}

/// Straight two-way road along x with lanes at y = -1.75 (eastbound) and +1.75 (westbound).
void add_east_west_road(Scenario& s, double x0, double x1) {
  s.polylines.push_back(line("lane-eb", PolylineKind::LaneCenterline, {{x0, -1.75}, {x1, -1.75}}));
  s.polylines.push_back(line("lane-wb", PolylineKind::LaneCenterline, {{x1, 1.75}, {x0, 1.75}}));
  s.polylines.push_back(line("edge-s", PolylineKind::Boundary, {{x0, -3.5}, {x1, -3.5}}));
  s.polylines.push_back(line("edge-n", PolylineKind::Boundary, {{x0, 3.5}, {x1, 3.5}}));
}

Scenario straight(Rng& rng, std::size_t steps, double noise) {
  Scenario s;
  const double v = rng.uniform(7.0, 12.0);
  const double x_start = -v * 4.0;
  add_east_west_road(s, -150, 150);
  s.polylines.push_back(line("lane-eb2", PolylineKind::LaneCenterline, {{-150, -5.25}, {150, -5.25}}));
  s.polylines.push_back(line("edge-s2", PolylineKind::Boundary, {{-150, -7.0}, {150, -7.0}}));

  s.tracks.push_back(track("ego", ObjectClass::Vehicle,
                           drive({x_start, -1.75, 0.0, v}, steps, [](std::size_t, const KinematicState&) {
                             return KinematicCommand{0.0, 0.0};
                           })));
  const double lead_v = v + rng.uniform(-1.0, 1.0);
  s.tracks.push_back(track("veh-1", ObjectClass::Vehicle,
                           drive({x_start + rng.uniform(18, 28), -1.75, 0.0, lead_v}, steps,
                                 cruise(lead_v, Wobble(rng, 0.3 * noise)))));
  const double side_v = v + rng.uniform(-2.0, 2.0);
  s.tracks.push_back(track("veh-2", ObjectClass::Vehicle,
                           drive({x_start + rng.uniform(-10, 10), -5.25, 0.0, side_v}, steps,
                                 cruise(side_v, Wobble(rng, 0.3 * noise)))));
  const double onc_v = rng.uniform(8.0, 12.0);
  s.tracks.push_back(track("veh-3", ObjectClass::Vehicle,
                           drive({rng.uniform(40, 70), 1.75, kPi, onc_v}, steps, cruise(onc_v, Wobble(rng, 0.3 * noise)))));
  if (rng.uniform(0, 1) < 0.5) {
    const double cyc_v = rng.uniform(3.5, 5.0);
    s.tracks.push_back(track("cyc-1", ObjectClass::Cyclist,
                             drive({x_start + rng.uniform(15, 30), -6.6, 0.0, cyc_v}, steps,
                                   cruise(cyc_v, Wobble(rng, 0.15 * noise)))));
  }
  return s;
}

/// Ego enters a left turn of radius `radius` at x = x_entry. speed_for(t, s) gives the
/// desired speed; `go` says whether the turn may start.
std::vector<KinematicState> left_turn_path(KinematicState start, std::size_t steps, double x_entry, double radius,
                                           std::function<double(std::size_t, const KinematicState&)> speed_for) {
  return drive(start, steps, [=](std::size_t t, const KinematicState& s) {
    const double target = speed_for(t, s);
    KinematicCommand c{std::clamp(1.2 * (target - s.speed), -4.0, 2.0), 0.0};
    if (s.x >= x_entry && s.heading < kPi / 2) {
      const double v_next = std::max(0.0, s.speed + c.accel * kDt);
      c.turn_rate = std::min(v_next / radius, (kPi / 2 - s.heading) / kDt);
    }
    return c;
  });
}

void add_cross_road(Scenario& s, double x_center) {
  s.polylines.push_back(line("lane-nb", PolylineKind::LaneCenterline, {{x_center + 1.75, -80}, {x_center + 1.75, 80}}));
  s.polylines.push_back(line("lane-sb", PolylineKind::LaneCenterline, {{x_center - 1.75, 80}, {x_center - 1.75, -80}}));
}

Scenario protected_left(Rng& rng, std::size_t steps, double noise) {
  Scenario s;
  const double v = rng.uniform(7.0, 10.0);
  const double radius = rng.uniform(9.0, 12.0);
  // Entry placed so the turn starts shortly after the observation window.
  const double x_entry = rng.uniform(0.0, 8.0);
  const double x_start = x_entry - v * 4.3;
  const double v_turn = rng.uniform(5.0, 6.5);
  auto ego = left_turn_path({x_start, -1.75, 0.0, v}, steps, x_entry, radius,
                            [=](std::size_t, const KinematicState& st) { return st.x > x_entry - 15.0 ? v_turn : v; });
  add_east_west_road(s, -150, 150);
  add_cross_road(s, x_entry + radius);
  s.polylines.push_back(line("lane-turn", PolylineKind::LaneCenterline, path_polyline(ego, 40.0)));
  s.tracks.push_back(track("ego", ObjectClass::Vehicle, std::move(ego)));

  // Cross traffic held at the stop line.
  const double xc = x_entry + radius;
  for (int k = 0; k < 2; ++k) {
    const double y = -12.0 - 8.0 * k - rng.uniform(0, 2);
    s.tracks.push_back(track("veh-" + std::to_string(k + 1), ObjectClass::Vehicle,
                             drive({xc + 1.75, y, kPi / 2, 0.0}, steps,
                                   [](std::size_t, const KinematicState&) { return KinematicCommand{}; })));
  }
  const double through_v = rng.uniform(8.0, 11.0);
  s.tracks.push_back(track("veh-3", ObjectClass::Vehicle,
                           drive({rng.uniform(70, 90), 1.75, kPi, through_v}, steps,
                                 cruise(through_v, Wobble(rng, 0.3 * noise)))));
  const double ped_v = rng.uniform(1.1, 1.5);
  s.tracks.push_back(track("ped-1", ObjectClass::Pedestrian,
                           drive({rng.uniform(-30, -10), -5.0, 0.0, ped_v}, steps, cruise(ped_v, Wobble(rng, 0.05 * noise)))));
  return s;
}

Scenario unprotected_left(Rng& rng, std::size_t steps, double noise) {
  Scenario s;
  const double v = rng.uniform(7.0, 9.0);
  const double radius = rng.uniform(9.0, 12.0);
  const double x_entry = rng.uniform(0.0, 6.0);
  const double x_start = x_entry - v * 4.0;
  const double onc_v = rng.uniform(9.0, 11.0);
  // The oncoming car clears the conflict zone around t = 5 s.
  const double onc_x0 = x_entry + onc_v * rng.uniform(4.5, 5.5);
  auto oncoming = drive({onc_x0, 1.75, kPi, onc_v}, steps, cruise(onc_v, Wobble(rng, 0.2 * noise)));
  auto ego = left_turn_path({x_start, -1.75, 0.0, v}, steps, x_entry, radius,
                            [&, x_entry](std::size_t t, const KinematicState& st) {
                              const bool clear = oncoming[t].x < x_entry - 3.0;
                              if (clear) return 6.0;
                              if (st.x > x_entry - 4.0) return 0.0;
                              return st.x > x_entry - 25.0 ? 3.0 : v;
                            });
  add_east_west_road(s, -150, 150);
  add_cross_road(s, x_entry + radius);
  s.polylines.push_back(line("lane-turn", PolylineKind::LaneCenterline, path_polyline(ego, 40.0)));
  s.tracks.push_back(track("ego", ObjectClass::Vehicle, std::move(ego)));
  s.tracks.push_back(track("veh-1", ObjectClass::Vehicle, std::move(oncoming)));
  const double follow_v = onc_v + rng.uniform(-1.0, 0.5);
  s.tracks.push_back(track("veh-2", ObjectClass::Vehicle,
                           drive({onc_x0 + rng.uniform(25, 35), 1.75, kPi, follow_v}, steps,
                                 cruise(follow_v, Wobble(rng, 0.2 * noise)))));
  return s;
}

Scenario pedestrian_yield(Rng& rng, std::size_t steps, double noise) {
  Scenario s;
  const double v = rng.uniform(7.0, 10.0);
  const double x_cross = rng.uniform(10.0, 16.0);  // relative to the ego at the last observed step
  const double stop_x = x_cross - 4.0;
  const double x_start = -v * 3.0;
  const double ped_v = rng.uniform(1.2, 1.5);
  // The pedestrian clears the far curb between 7.5 s and 8.5 s, after the ego has stopped.
  const double ped_y0 = 3.0 - ped_v * rng.uniform(7.5, 8.5);
  auto ped = drive({x_cross, ped_y0, kPi / 2, ped_v}, steps, cruise(ped_v, Wobble(rng, 0.05 * noise)));
  auto ego = drive({x_start, -1.75, 0.0, v}, steps, [&](std::size_t t, const KinematicState& st) {
    const bool clear = ped[t].y > 3.0;
    if (clear) return KinematicCommand{std::clamp(1.0 * (v - st.speed), 0.0, 1.5), 0.0};
    const double gap = stop_x - st.x;
    if (gap <= 0.3) return KinematicCommand{-std::min(4.0, st.speed / kDt), 0.0};
    const double needed = st.speed * st.speed / (2.0 * gap);
    return KinematicCommand{needed > 1.5 ? -std::min(needed, 6.0) : 0.0, 0.0};
  });
  add_east_west_road(s, -150, 150);
  s.polylines.push_back(line("crosswalk", PolylineKind::Crosswalk, {{x_cross, -4.0}, {x_cross, 4.0}}));
  s.polylines.push_back(line("crosswalk-edge", PolylineKind::Crosswalk, {{x_cross + 3.0, -4.0}, {x_cross + 3.0, 4.0}}));
  s.tracks.push_back(track("ego", ObjectClass::Vehicle, std::move(ego)));
  s.tracks.push_back(track("ped-1", ObjectClass::Pedestrian, std::move(ped)));
  const double onc_v = rng.uniform(6.0, 9.0);
  s.tracks.push_back(track("veh-1", ObjectClass::Vehicle,
                           drive({x_cross - rng.uniform(25, 45), 1.75, kPi, onc_v}, steps, cruise(onc_v, Wobble(rng, 0.2 * noise)))));
  return s;
}

}  // namespace

std::string_view to_string(Archetype a) { return kNames.at(static_cast<std::size_t>(a)); }

Archetype parse_archetype(std::string_view s) {
  for (std::size_t i = 0; i < kArchetypeCount; ++i)
    if (kNames[i] == s) return static_cast<Archetype>(i);
  throw std::invalid_argument("unknown archetype '" + std::string(s) + "'");
}

ArchetypeMix ArchetypeMix::parse(std::string_view spec) {
  ArchetypeMix m;
  m.weights.fill(0.0);
  std::stringstream ss{std::string(spec)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    const auto name = item.substr(0, colon);
    const double w = colon == std::string::npos ? 1.0 : std::stod(item.substr(colon + 1));
    if (!(w >= 0.0)) throw std::invalid_argument("archetype weight must be non-negative: " + item);
    m.weights[static_cast<std::size_t>(parse_archetype(name))] = w;
  }
  double total = 0;
  for (double w : m.weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("archetype mix has no positive weight");
  return m;
}

std::string ArchetypeMix::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < kArchetypeCount; ++i) {
    if (weights[i] <= 0) continue;
    if (!out.empty()) out += ',';
    std::ostringstream w;
    w << weights[i];
    out += std::string(kNames[i]) + ":" + w.str();
  }
  return out;
}

Scenario generate_scenario(std::uint64_t seed, std::size_t index, Archetype a, const SyntheticOptions& opt) {
  Rng rng = Rng(seed).split("synthetic").split(index);
  const std::size_t steps = opt.observation_len + opt.horizon_len;
  Scenario s;
  switch (a) {
    case Archetype::Straight: s = straight(rng, steps, opt.noise); break;
    case Archetype::ProtectedLeft: s = protected_left(rng, steps, opt.noise); break;
    case Archetype::UnprotectedLeft: s = unprotected_left(rng, steps, opt.noise); break;
    case Archetype::PedestrianYield: s = pedestrian_yield(rng, steps, opt.noise); break;
  }
  s.id = "syn-s" + std::to_string(seed) + "-" + std::to_string(index) + "-" + std::string(to_string(a));
  s.ego_id = "ego";
  s.sample_rate = 10.0;
  s.observation_len = opt.observation_len;
  s.horizon_len = opt.horizon_len;
  if (opt.random_pose) {
    const scene::Pose2 pose{rng.uniform(-500, 500), rng.uniform(-500, 500), rng.uniform(-kPi, kPi)};
    s = scene::transformed(s, pose);
  }
  scene::require_valid(s);
  return s;
}

std::vector<Scenario> generate_synthetic(std::uint64_t seed, std::size_t count, const ArchetypeMix& mix,
                                         const SyntheticOptions& opt) {
  if (count == 0) throw std::invalid_argument("generate_synthetic: count must be at least 1");
  if (opt.observation_len < 2) throw std::invalid_argument("generate_synthetic: observation_len must be at least 2");
  double total = 0;
  for (double w : mix.weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("archetype mix has no positive weight");
  std::vector<Scenario> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    // Midpoint of slot i located in the cumulative weight distribution.
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(count) * total;
    double acc = 0;
    std::size_t k = 0;
    for (; k + 1 < kArchetypeCount; ++k) {
      acc += mix.weights[k];
      if (u < acc) break;
    }
    while (mix.weights[k] <= 0.0) --k;
    out.push_back(generate_scenario(seed, i, static_cast<Archetype>(k), opt));
  }
  return out;
}

bool archetype_of(const Scenario& s, Archetype& out) {
  for (std::size_t i = 0; i < kArchetypeCount; ++i) {
    const std::string suffix = "-" + std::string(kNames[i]);
    if (s.id.size() > suffix.size() && s.id.compare(s.id.size() - suffix.size(), suffix.size(), suffix) == 0 &&
        s.id.rfind("syn-", 0) == 0) {
      out = static_cast<Archetype>(i);
      return true;
    }
  }
  return false;
}

}  // namespace vrd::data
