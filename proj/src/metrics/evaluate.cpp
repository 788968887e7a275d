#include "vrd/metrics/evaluate.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

#include "vrd/autodiff/tape.hpp"

namespace vrd::metrics {

using nlohmann::json;

ScenarioMetrics score_rollout(const training::DreamRollout& r, const training::Sample& s, std::size_t points) {
  ScenarioMetrics out;
  out.scenario_id = s.scenario_id;
  if (r.aborted) {
    out.aborted = true;
    out.abort_step = r.abort_step;
    return out;
  }
  for (std::size_t i = 0; i < r.agent_ids.size(); ++i) {
    const auto& truth = s.agents.at(i);
    if (truth.agent_id != r.agent_ids[i]) throw std::invalid_argument("score_rollout: agent order mismatch");
    if (!truth.complete(points)) continue;
    const auto fine = r.fine_trajectory(i);
    if (fine.size() < points) throw std::invalid_argument("score_rollout: rollout shorter than the horizon");
    AgentForecast f;
    f.modes.emplace_back();
    for (std::size_t t = 0; t < points; ++t) {
      f.modes[0].push_back({fine[t].x, fine[t].y});
      f.truth.push_back({truth.states[t + 1].x, truth.states[t + 1].y});
    }
    out.agent_ids.push_back(truth.agent_id);
    out.forecasts.push_back(std::move(f));
  }
  out.agents = out.forecasts.size();
  if (out.agents > 0) {
    out.min_ade = min_ade(out.forecasts);
    out.min_fde = min_fde(out.forecasts);
    out.actor_mr = actor_mr(out.forecasts);
  }
  return out;
}

namespace {

std::size_t horizon_points(const EvalOptions& opt) {
  const double points = std::round(opt.horizon_seconds * 10.0);
  if (points < 1) throw std::invalid_argument("evaluate: horizon must be at least 0.1 s");
  return static_cast<std::size_t>(points);
}

template <class RolloutFn>
MetricsReport score_all(const std::vector<training::Sample>& samples, std::size_t points, RolloutFn&& rollout) {
  if (samples.empty()) throw std::invalid_argument("evaluate: empty dataset");
  MetricsReport rep;
  std::vector<AgentForecast> pooled;
  for (const auto& s : samples) {
    if (s.span < points) throw std::invalid_argument("evaluate: sample " + s.scenario_id + " is shorter than the horizon");
    auto sm = score_rollout(rollout(s), s, points);
    if (sm.aborted) {
      ++rep.aborted;
    } else {
      ++rep.scenarios;
      pooled.insert(pooled.end(), sm.forecasts.begin(), sm.forecasts.end());
    }
    rep.per_scenario.push_back(std::move(sm));
  }
  rep.agents = pooled.size();
  if (!pooled.empty()) {
    rep.min_ade = min_ade(pooled);
    rep.min_fde = min_fde(pooled);
    rep.actor_mr = actor_mr(pooled);
  }
  return rep;
}

}  // namespace

MetricsReport evaluate(const training::Model& m, const std::vector<training::Sample>& samples, const EvalOptions& opt) {
  const auto points = horizon_points(opt);
  const auto steps = static_cast<std::size_t>(std::ceil(opt.horizon_seconds / opt.dt - 1e-9));
  ad::NoGradGuard ng;
  return score_all(samples, points, [&](const training::Sample& s) {
    return training::dream_rollout(m, s, {.H = steps, .dt = opt.dt, .ego_pose = opt.ego_pose});
  });
}

training::DreamRollout oracle_rollout(const training::Sample& s, std::size_t points) {
  training::DreamRollout r;
  r.agent_ids = s.frame0().agent_ids;
  r.mask.assign(r.agent_ids.size(), true);
  r.dt = 0.1;
  r.stride = 1;
  for (std::size_t k = 0; k < points; ++k) {
    std::vector<kin::KinematicState> states;
    for (const auto& a : s.agents) states.push_back(a.states.at(k + 1));
    training::DreamStep step;
    step.substates = {kin::AgentStates::from(states)};
    step.commands = ad::Tensor::zeros({states.size(), 2});
    r.steps.push_back(std::move(step));
  }
  return r;
}

MetricsReport evaluate_oracle(const std::vector<training::Sample>& samples, const EvalOptions& opt) {
  const auto points = horizon_points(opt);
  return score_all(samples, points, [&](const training::Sample& s) { return oracle_rollout(s, points); });
}

json MetricsReport::to_json(bool with_forecasts) const {
  json per = json::array();
  for (const auto& s : per_scenario) {
    json j{{"scenario_id", s.scenario_id}, {"agents", s.agents},   {"minADE", s.min_ade},
           {"minFDE", s.min_fde},         {"actorMR", s.actor_mr}, {"aborted", s.aborted}};
    if (s.aborted) j["abort_step"] = s.abort_step;
    if (with_forecasts) {
      json agents = json::array();
      for (std::size_t i = 0; i < s.forecasts.size(); ++i) {
        json pred = json::array(), truth = json::array();
        for (auto p : s.forecasts[i].modes[0]) pred.push_back({p.x, p.y});
        for (auto p : s.forecasts[i].truth) truth.push_back({p.x, p.y});
        agents.push_back({{"agent_id", s.agent_ids[i]}, {"prediction", pred}, {"truth", truth}});
      }
      j["forecasts"] = agents;
    }
    per.push_back(j);
  }
  return {{"K", K},         {"minADE", min_ade},     {"minFDE", min_fde}, {"actorMR", actor_mr},
          {"agents", agents}, {"scenarios", scenarios}, {"aborted", aborted}, {"per_scenario", per}};
}

std::string MetricsReport::summary_csv() const {
  return fmt::format("K,minADE,minFDE,actorMR,agents,scenarios,aborted\n{},{:.9f},{:.9f},{:.9f},{},{},{}\n", K, min_ade,
                     min_fde, actor_mr, agents, scenarios, aborted);
}

std::string MetricsReport::per_scenario_csv() const {
  std::string out = "scenario_id,agents,minADE,minFDE,actorMR,aborted,abort_step\n";
  for (const auto& s : per_scenario)
    out += fmt::format("{},{},{:.9f},{:.9f},{:.9f},{},{}\n", s.scenario_id, s.agents, s.min_ade, s.min_fde, s.actor_mr,
                       s.aborted ? 1 : 0, s.aborted ? std::to_string(s.abort_step) : "");
  return out;
}

void write_report(const std::filesystem::path& dir, const MetricsReport& r) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << text;
  };
  write("metrics.json", r.to_json(true).dump(2) + "\n");
  write("metrics.csv", r.summary_csv());
  write("metrics_per_scenario.csv", r.per_scenario_csv());
}

}  // namespace vrd::metrics
