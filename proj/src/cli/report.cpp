#include <array>
#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "vrd/cli/cli.hpp"

#ifndef VRD_GIT_DESCRIBE
#define VRD_GIT_DESCRIBE "unknown"
#endif

namespace vrd::cli {

using nlohmann::json;

json RunManifest::to_json() const {
  return {{"command", command},          {"config", config},           {"seed", seed},
          {"git_describe", git_describe}, {"out_dir", out_dir.string()}, {"started_at", started_at},
          {"finished_at", finished_at}};
}

std::string git_describe() { return VRD_GIT_DESCRIBE; }

std::string utc_now() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", now);
}

json rollout_json(const training::DreamRollout& r, const training::Sample& s) {
  json agents = json::array();
  for (std::size_t i = 0; i < r.agent_ids.size(); ++i) {
    json dreamed = json::array(), truth = json::array(), valid = json::array();
    if (!r.aborted)
      for (const auto& st : r.fine_trajectory(i)) dreamed.push_back({st.x, st.y, st.heading, st.speed});
    const auto& a = s.agents.at(i);
    for (std::size_t t = 0; t < a.states.size(); ++t) {
      truth.push_back({a.states[t].x, a.states[t].y, a.states[t].heading, a.states[t].speed});
      valid.push_back(static_cast<bool>(a.valid[t]));
    }
    agents.push_back({{"agent_id", r.agent_ids[i]}, {"dreamed", dreamed}, {"truth", truth}, {"truth_valid", valid}});
  }
  json j{{"scenario_id", s.scenario_id},
         {"frame", "ego pose at the last observed step"},
         {"H", r.length()},
         {"dt", r.dt},
         {"stride", r.stride},
         {"substep_seconds", 0.1},
         {"aborted", r.aborted},
         {"agents", agents}};
  if (r.aborted) {
    j["abort_step"] = r.abort_step;
    j["abort_reason"] = r.abort_reason;
  }
  return j;
}

namespace {

struct Bounds {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  void add(double x, double y) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
};

constexpr std::array<const char*, 8> kPalette{"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                                              "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

std::string path_of(const std::vector<scene::Point2>& pts) {
  std::string d;
  for (std::size_t i = 0; i < pts.size(); ++i) d += fmt::format("{}{:.3f},{:.3f}", i ? " L" : "M", pts[i].x, -pts[i].y);
  return d;
}

}  // namespace

std::string render_svg(const training::DreamRollout& r, const training::Sample& s, const scene::Scenario& scenario) {
  const scene::Pose2 frame = s.frame0().frame;
  std::vector<std::vector<scene::Point2>> dreamed, truth;
  Bounds b;
  for (std::size_t i = 0; i < r.agent_ids.size(); ++i) {
    std::vector<scene::Point2> d, t;
    if (!r.aborted)
      for (const auto& st : r.fine_trajectory(i)) d.push_back({st.x, st.y});
    const auto& a = s.agents.at(i);
    for (std::size_t k = 0; k < a.states.size(); ++k)
      if (a.valid[k]) t.push_back({a.states[k].x, a.states[k].y});
    for (auto p : d) b.add(p.x, p.y);
    for (auto p : t) b.add(p.x, p.y);
    dreamed.push_back(std::move(d));
    truth.push_back(std::move(t));
  }
  if (!std::isfinite(b.x0)) b.add(0, 0);
  const double margin = 10.0;
  b.add(b.x0 - margin, b.y0 - margin);
  b.add(b.x1 + margin, b.y1 + margin);

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.3f} {:.3f} {:.3f} {:.3f}\" width=\"900\" "
      "height=\"{:.0f}\">\n",
      b.x0, -b.y1, b.x1 - b.x0, b.y1 - b.y0, 900.0 * (b.y1 - b.y0) / (b.x1 - b.x0));
  svg += fmt::format("<title>{} dreamed vs ground truth</title>\n", s.scenario_id);
  svg += "<rect x=\"-1e4\" y=\"-1e4\" width=\"2e4\" height=\"2e4\" fill=\"white\"/>\n<g fill=\"none\">\n";
  for (const auto& pl : scenario.polylines) {
    std::vector<scene::Point2> pts;
    for (auto p : pl.points) pts.push_back(frame.to_local(p));
    const char* style = pl.kind == scene::PolylineKind::LaneCenterline ? "stroke=\"#bbbbbb\" stroke-dasharray=\"2 2\""
                        : pl.kind == scene::PolylineKind::Crosswalk    ? "stroke=\"#e0c050\""
                                                                       : "stroke=\"#666666\"";
    svg += fmt::format("<path d=\"{}\" {} stroke-width=\"0.3\"/>\n", path_of(pts), style);
  }
  for (std::size_t i = 0; i < r.agent_ids.size(); ++i) {
    const char* color = kPalette[i % kPalette.size()];
    svg += fmt::format("<g id=\"{}\" stroke=\"{}\">\n", r.agent_ids[i], color);
    svg += fmt::format("<path class=\"truth\" d=\"{}\" stroke-width=\"0.4\" stroke-dasharray=\"1 1\" opacity=\"0.6\"/>\n",
                       path_of(truth[i]));
    if (!dreamed[i].empty())
      svg += fmt::format("<path class=\"dreamed\" d=\"{}\" stroke-width=\"0.6\"/>\n", path_of(dreamed[i]));
    if (!truth[i].empty())
      svg += fmt::format("<circle cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"0.8\" fill=\"{}\"/>\n", truth[i][0].x, -truth[i][0].y,
                         color);
    svg += "</g>\n";
  }
  svg += "</g>\n";
  svg += fmt::format(
      "<text x=\"{:.3f}\" y=\"{:.3f}\" font-size=\"3\" fill=\"black\">solid: dreamed, dashed: ground truth{}</text>\n",
      b.x0 + 2, -b.y1 + 4, r.aborted ? fmt::format(" (aborted at step {})", r.abort_step) : "");
  svg += "</svg>\n";
  return svg;
}

}  // namespace vrd::cli
