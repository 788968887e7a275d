#include "vrd/data/io.hpp"

#include <algorithm>
#include <fstream>

namespace vrd::data {

using nlohmann::json;

json to_json(const scene::Scenario& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["id"] = s.id;
  j["sample_rate"] = s.sample_rate;
  j["observation_len"] = s.observation_len;
  j["horizon_len"] = s.horizon_len;
  j["ego_id"] = s.ego_id;
  j["polylines"] = json::array();
  for (const auto& p : s.polylines) {
    json pts = json::array();
    for (auto q : p.points) pts.push_back({q.x, q.y});
    j["polylines"].push_back({{"id", p.id}, {"kind", scene::to_string(p.kind)}, {"points", pts}});
  }
  j["tracks"] = json::array();
  for (const auto& t : s.tracks) {
    json states = json::array();
    for (const auto& st : t.states) states.push_back({st.x, st.y, st.heading, st.speed});
    json valid = json::array();
    for (bool v : t.valid) valid.push_back(v);
    j["tracks"].push_back(
        {{"agent_id", t.agent_id}, {"object_class", scene::to_string(t.object_class)}, {"states", states}, {"valid", valid}});
  }
  return j;
}

scene::Scenario from_json(const json& j) {
  if (!j.is_object()) throw DataError("record is not an object");
  const int version = j.at("schema_version").get<int>();
  if (version != kSchemaVersion) throw DataError("unsupported schema_version " + std::to_string(version));
  scene::Scenario s;
  s.id = j.at("id").get<std::string>();
  s.sample_rate = j.value("sample_rate", 10.0);
  s.observation_len = j.at("observation_len").get<std::size_t>();
  s.horizon_len = j.at("horizon_len").get<std::size_t>();
  s.ego_id = j.at("ego_id").get<std::string>();
  for (const auto& p : j.at("polylines")) {
    scene::MapPolyline m;
    m.id = p.at("id").get<std::string>();
    m.kind = scene::parse_polyline_kind(p.at("kind").get<std::string>());
    for (const auto& q : p.at("points")) m.points.push_back({q.at(0).get<double>(), q.at(1).get<double>()});
    s.polylines.push_back(std::move(m));
  }
  for (const auto& t : j.at("tracks")) {
    scene::AgentTrack tr;
    tr.agent_id = t.at("agent_id").get<std::string>();
    tr.object_class = scene::parse_object_class(t.at("object_class").get<std::string>());
    for (const auto& st : t.at("states"))
      tr.states.push_back({st.at(0).get<double>(), st.at(1).get<double>(), st.at(2).get<double>(), st.at(3).get<double>()});
    for (const auto& v : t.at("valid")) tr.valid.push_back(v.get<bool>());
    s.tracks.push_back(std::move(tr));
  }
  scene::require_valid(s);
  return s;
}

LoadResult load(const std::filesystem::path& path, const LoadOptions& opt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  LoadResult out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    try {
      out.scenarios.push_back(from_json(json::parse(line)));
    } catch (const std::exception& e) {
      if (!opt.skip_invalid) throw DataError(where + e.what());
      out.warnings.push_back(where + "skipped: " + e.what());
    }
  }
  if (lineno == 0) out.warnings.push_back(path.string() + ": empty file, no scenarios loaded");
  return out;
}

void save(const std::filesystem::path& path, const std::vector<scene::Scenario>& scenarios) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& s : scenarios) out << to_json(s).dump() << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<scene::Scenario> segment(const scene::Scenario& s, std::size_t obs_len, std::size_t horizon_len,
                                     std::size_t stride, std::vector<std::string>* warnings) {
  if (stride == 0) throw std::invalid_argument("segment: stride must be positive");
  if (obs_len < 2) throw std::invalid_argument("segment: observation window needs two steps");
  const std::size_t window = obs_len + horizon_len;
  const std::size_t n = s.num_steps();
  std::vector<scene::Scenario> out;
  if (n < window) {
    if (warnings)
      warnings->push_back(s.id + ": " + std::to_string(n) + " steps is shorter than the " + std::to_string(window) +
                          "-step window");
    return out;
  }
  const scene::AgentTrack& ego = s.ego();
  for (std::size_t start = 0; start + window <= n; start += stride) {
    if (!ego.valid_over(start, start + window)) continue;
    scene::Scenario w;
    w.id = s.id + "/" + std::to_string(start);
    w.sample_rate = s.sample_rate;
    w.polylines = s.polylines;
    w.ego_id = s.ego_id;
    w.observation_len = obs_len;
    w.horizon_len = horizon_len;
    for (const auto& t : s.tracks) {
      scene::AgentTrack c;
      c.agent_id = t.agent_id;
      c.object_class = t.object_class;
      c.states.assign(t.states.begin() + start, t.states.begin() + start + window);
      c.valid.assign(t.valid.begin() + start, t.valid.begin() + start + window);
      if (std::find(c.valid.begin(), c.valid.end(), true) == c.valid.end()) continue;
      w.tracks.push_back(std::move(c));
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace vrd::data
