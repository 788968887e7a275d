#include "vrd/scene/types.hpp"

#include <numbers>
#include <set>

namespace vrd::scene {

std::string_view to_string(PolylineKind k) {
  switch (k) {
    case PolylineKind::LaneCenterline: return "lane_centerline";
    case PolylineKind::Boundary: return "boundary";
    case PolylineKind::Crosswalk: return "crosswalk";
  }
  return "unknown";
}

std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::Vehicle: return "vehicle";
    case ObjectClass::Pedestrian: return "pedestrian";
    case ObjectClass::Cyclist: return "cyclist";
    case ObjectClass::Other: return "other";
  }
  return "unknown";
}

PolylineKind parse_polyline_kind(std::string_view s) {
  if (s == "lane_centerline") return PolylineKind::LaneCenterline;
  if (s == "boundary") return PolylineKind::Boundary;
  if (s == "crosswalk") return PolylineKind::Crosswalk;
  throw ScenarioError("unknown polyline kind '" + std::string(s) + "'");
}

ObjectClass parse_object_class(std::string_view s) {
  if (s == "vehicle") return ObjectClass::Vehicle;
  if (s == "pedestrian") return ObjectClass::Pedestrian;
  if (s == "cyclist") return ObjectClass::Cyclist;
  if (s == "other") return ObjectClass::Other;
  throw ScenarioError("unknown object class '" + std::string(s) + "'");
}

bool AgentTrack::valid_over(std::size_t begin, std::size_t end) const {
  if (end > valid.size()) return false;
  for (std::size_t t = begin; t < end; ++t)
    if (!valid[t]) return false;
  return true;
}

const AgentTrack& Scenario::ego() const {
  const auto* e = find(ego_id);
  if (!e) throw ScenarioError("scenario " + id + " has no ego track '" + ego_id + "'");
  return *e;
}

const AgentTrack* Scenario::find(std::string_view agent_id) const {
  for (const auto& t : tracks)
    if (t.agent_id == agent_id) return &t;
  return nullptr;
}

std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> errs;
  if (s.id.empty()) errs.push_back("empty scenario id");
  if (!(s.sample_rate > 0.0) || !std::isfinite(s.sample_rate)) errs.push_back("sample_rate must be positive");
  if (s.observation_len < 2) errs.push_back("observation_len must be at least 2");
  if (s.horizon_len < 1) errs.push_back("horizon_len must be at least 1");

  for (const auto& p : s.polylines) {
    if (p.points.size() < 2) {
      errs.push_back("polyline " + p.id + " has fewer than 2 points");
      continue;
    }
    for (std::size_t i = 0; i < p.points.size(); ++i) {
      const auto& q = p.points[i];
      if (!std::isfinite(q.x) || !std::isfinite(q.y)) errs.push_back("polyline " + p.id + " has a non-finite point");
      if (i > 0 && q == p.points[i - 1]) errs.push_back("polyline " + p.id + " repeats a point at index " + std::to_string(i));
    }
  }

  std::set<std::string> ids;
  std::size_t ego_count = 0;
  const std::size_t steps = s.num_steps();
  for (const auto& tr : s.tracks) {
    if (!ids.insert(tr.agent_id).second) errs.push_back("duplicate agent id " + tr.agent_id);
    if (tr.agent_id == s.ego_id) ++ego_count;
    if (tr.states.size() != steps || tr.valid.size() != steps) {
      errs.push_back("track " + tr.agent_id + " length differs from scenario length");
      continue;
    }
    for (std::size_t t = 0; t < steps; ++t) {
      if (!tr.valid[t]) continue;
      const auto& st = tr.states[t];
      if (!std::isfinite(st.x) || !std::isfinite(st.y) || !std::isfinite(st.heading) || !std::isfinite(st.speed)) {
        errs.push_back("track " + tr.agent_id + " has a non-finite state at step " + std::to_string(t));
        break;
      }
      if (st.speed < 0.0) {
        errs.push_back("track " + tr.agent_id + " has negative speed at step " + std::to_string(t));
        break;
      }
      if (st.speed > kMaxPlausibleSpeed) {
        errs.push_back("track " + tr.agent_id + " speed " + std::to_string(st.speed) + " m/s exceeds " +
                       std::to_string(kMaxPlausibleSpeed) + " m/s at step " + std::to_string(t));
        break;
      }
      if (!(st.heading > -std::numbers::pi) || st.heading > std::numbers::pi) {
        errs.push_back("track " + tr.agent_id + " heading outside (-pi, pi] at step " + std::to_string(t));
        break;
      }
    }
  }
  if (ego_count != 1) errs.push_back("expected exactly one track with ego id '" + s.ego_id + "'");
  if (s.observation_len + s.horizon_len > steps) {
    errs.push_back("observation_len + horizon_len exceeds the " + std::to_string(steps) + " recorded steps");
  } else if (ego_count == 1 && !s.ego().valid_over(0, s.observation_len + s.horizon_len)) {
    errs.push_back("ego track is not valid over the observation and horizon window");
  }
  return errs;
}

void require_valid(const Scenario& s) {
  auto errs = validate(s);
  if (!errs.empty()) throw ScenarioError("scenario '" + s.id + "': " + errs.front());
}

Scenario transformed(const Scenario& s, const Pose2& frame) {
  Scenario out = s;
  for (auto& p : out.polylines)
    for (auto& q : p.points) q = frame.to_parent(q);
  for (auto& tr : out.tracks)
    for (auto& st : tr.states) st = frame.to_parent(st);
  return out;
}

}  // namespace vrd::scene
