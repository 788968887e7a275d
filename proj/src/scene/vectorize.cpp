#include "vrd/scene/vectorize.hpp"

#include <algorithm>
#include <cmath>

namespace vrd::scene {

std::vector<Point2> resample_polyline(const std::vector<Point2>& pts, double spacing) {
  if (pts.size() < 2 || !(spacing > 0.0)) return pts;
  std::vector<Point2> out{pts.front()};
  double carried = 0.0;  // arc length since the last emitted sample
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const Point2 a = pts[i - 1], b = pts[i];
    const double seg = std::hypot(b.x - a.x, b.y - a.y);
    double s = spacing - carried;
    while (s <= seg) {
      const double u = s / seg;
      out.push_back({a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)});
      s += spacing;
    }
    carried = seg - (s - spacing);
  }
  const Point2 last = pts.back();
  if (std::hypot(last.x - out.back().x, last.y - out.back().y) > 1e-6) {
    out.push_back(last);
  } else {
    out.back() = last;
  }
  return out;
}

VectorSet vectorize(const Scenario& scenario, std::size_t t, const VectorizeOptions& opt) {
  const std::size_t history = opt.history_len ? opt.history_len : scenario.observation_len;
  if (t + 1 < history) throw ScenarioError("vectorize: step " + std::to_string(t) + " precedes a full history window");
  const AgentTrack& ego = scenario.ego();
  if (!ego.valid_at(t) || !ego.valid_at(t - 1)) {
    throw ScenarioError("vectorize: ego track invalid at step " + std::to_string(t) + " in " + scenario.id);
  }

  VectorSet vs;
  vs.step = t;
  const auto& ep = ego.states[t];
  vs.frame = Pose2{ep.x, ep.y, ep.heading};
  const double dt = scenario.step_seconds();

  // Agents: ego first, then ascending id, so input order never matters.
  std::vector<const AgentTrack*> agents{&ego};
  {
    std::vector<const AgentTrack*> others;
    for (const auto& tr : scenario.tracks)
      if (tr.agent_id != scenario.ego_id) others.push_back(&tr);
    std::sort(others.begin(), others.end(),
              [](const AgentTrack* a, const AgentTrack* b) { return a->agent_id < b->agent_id; });
    agents.insert(agents.end(), others.begin(), others.end());
  }

  const std::size_t first = t + 1 - history;
  for (const AgentTrack* tr : agents) {
    if (!tr->valid_at(t)) continue;
    VectorPolyline pl;
    pl.is_agent = true;
    pl.attribute = attribute_of(tr->object_class);
    pl.source_id = tr->agent_id;
    pl.first_vector = vs.vectors.size();
    for (std::size_t k = first; k < t; ++k) {
      if (!tr->valid_at(k) || !tr->valid_at(k + 1)) continue;
      const auto& a = tr->states[k];
      const auto& b = tr->states[k + 1];
      Vector v;
      v.start = vs.frame.to_local(Point2{a.x, a.y});
      v.end = vs.frame.to_local(Point2{b.x, b.y});
      v.attribute = pl.attribute;
      v.time = -static_cast<double>(t - (k + 1)) * dt;
      v.polyline = vs.polylines.size();
      vs.vectors.push_back(v);
    }
    pl.vector_count = vs.vectors.size() - pl.first_vector;
    if (pl.vector_count == 0) continue;  // a single observed point carries no motion
    vs.agent_ids.push_back(tr->agent_id);
    vs.agent_polyline.push_back(vs.polylines.size());
    vs.agent_classes.push_back(tr->object_class);
    vs.agent_states.push_back(vs.frame.to_local(tr->states[t]));
    vs.polylines.push_back(pl);
  }

  // Map polylines in id order; each is resampled, then split where it leaves the crop disc.
  std::vector<const MapPolyline*> maps;
  for (const auto& p : scenario.polylines) maps.push_back(&p);
  std::sort(maps.begin(), maps.end(), [](const MapPolyline* a, const MapPolyline* b) { return a->id < b->id; });
  const double r2 = opt.crop_radius * opt.crop_radius;
  std::size_t map_polylines = 0;
  for (const MapPolyline* mp : maps) {
    const auto pts = resample_polyline(mp->points, opt.resample_spacing);
    std::vector<Point2> run;
    auto flush = [&] {
      if (run.size() >= 2) {
        VectorPolyline pl;
        pl.attribute = attribute_of(mp->kind);
        pl.source_id = mp->id;
        pl.first_vector = vs.vectors.size();
        for (std::size_t i = 0; i + 1 < run.size(); ++i) {
          Vector v;
          v.start = run[i];
          v.end = run[i + 1];
          v.attribute = pl.attribute;
          v.polyline = vs.polylines.size();
          vs.vectors.push_back(v);
        }
        pl.vector_count = run.size() - 1;
        vs.polylines.push_back(pl);
        ++map_polylines;
      }
      run.clear();
    };
    for (const auto& p : pts) {
      const auto q = vs.frame.to_local(p);
      if (q.x * q.x + q.y * q.y <= r2) {
        run.push_back(q);
      } else {
        flush();
      }
    }
    flush();
  }
  if (map_polylines == 0) throw ScenarioError("vectorize: no map polyline within crop radius in " + scenario.id);
  return vs;
}

}  // namespace vrd::scene
