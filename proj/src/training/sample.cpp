#include "vrd/training/sample.hpp"

#include <algorithm>
#include <cmath>

namespace vrd::training {

CommandTrack finite_difference_commands(const scene::AgentTrack& track, double step_seconds) {
  const std::size_t n = track.states.size();
  CommandTrack out;
  out.commands.resize(n);
  out.valid.assign(n, false);
  for (std::size_t t = 0; t < n; ++t) {
    if (!track.valid_at(t)) continue;
    const bool prev = t > 0 && track.valid_at(t - 1);
    const bool next = track.valid_at(t + 1);
    if (!prev && !next) continue;
    const std::size_t a = prev ? t - 1 : t;
    const std::size_t b = next ? t + 1 : t;
    const double span = static_cast<double>(b - a) * step_seconds;
    const auto& sa = track.states[a];
    const auto& sb = track.states[b];
    out.commands[t] = {(sb.speed - sa.speed) / span, kin::wrap_angle(sb.heading - sa.heading) / span};
    out.valid[t] = true;
  }
  return out;
}

bool AgentTruth::complete(std::size_t steps) const {
  if (steps >= valid.size()) return false;
  return std::all_of(valid.begin(), valid.begin() + static_cast<std::ptrdiff_t>(steps) + 1, [](bool v) { return v; });
}

Sample prepare_sample(const scene::Scenario& s, const TrainConfig& cfg) {
  const std::size_t stride = cfg.stride();
  const std::size_t k_teacher = cfg.teacher_steps();
  const std::size_t plan = cfg.model.plan_steps;
  const auto eval_steps = static_cast<std::size_t>(std::llround(cfg.eval_horizon() * 10.0));
  Sample out;
  out.scenario_id = s.id;
  out.t0 = s.current_step();
  out.stride = stride;
  out.span = std::max({cfg.H * stride, k_teacher * stride, plan, eval_steps});
  if (out.t0 + out.span >= s.num_steps()) {
    throw scene::ScenarioError(s.id + ": needs " + std::to_string(out.span) + " future steps, has " +
                               std::to_string(s.num_steps() - out.t0 - 1));
  }

  for (std::size_t k = 0; k <= k_teacher; ++k) out.frames.push_back(scene::vectorize(s, out.t0 + k * stride));
  const auto& f0 = out.frame0();
  const scene::Pose2 frame = f0.frame;
  const auto& ego_track = s.ego();
  out.candidates = planner::generate_candidates(s, frame, ego_track.states[out.t0].speed,
                                                static_cast<double>(plan) * s.step_seconds(), cfg.model.planner());

  for (const auto& id : f0.agent_ids) {
    const scene::AgentTrack* tr = s.find(id);
    const auto cmds = finite_difference_commands(*tr, s.step_seconds());
    AgentTruth a;
    a.agent_id = id;
    for (std::size_t j = 0; j <= out.span; ++j) {
      const std::size_t t = out.t0 + j;
      a.states.push_back(frame.to_local(tr->states[t]));
      a.valid.push_back(tr->valid_at(t));
      a.commands.push_back(cmds.commands[t]);
      a.command_valid.push_back(cmds.valid[t]);
    }
    out.agents.push_back(std::move(a));
  }

  const AgentTruth& ego = out.agents.front();
  std::vector<double> rows;
  for (std::size_t j = 0; j < plan; ++j) {
    rows.insert(rows.end(),
                {ego.states[j + 1].x, ego.states[j + 1].y, ego.commands[j].accel, ego.commands[j].turn_rate});
  }
  out.ego_plan = ad::Tensor::from({1, rows.size()}, rows);
  out.ego_endpoint = {ego.states[plan].x, ego.states[plan].y};

  for (std::size_t k = 0; k < k_teacher; ++k) {
    const std::size_t t = out.t0 + k * stride;
    const auto& here = ego_track.states[t];
    const scene::Pose2 local{here.x, here.y, here.heading};
    const auto next = local.to_local(scene::Point2{ego_track.states[t + stride].x, ego_track.states[t + stride].y});
    const auto& c = ego.commands[(k + 1) * stride - 1];
    out.teacher_actions.push_back({next.x, next.y, c.accel, c.turn_rate});
  }
  return out;
}

std::vector<Sample> prepare_samples(const std::vector<scene::Scenario>& corpus, const TrainConfig& cfg) {
  std::vector<Sample> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(prepare_sample(s, cfg));
  return out;
}

}  // namespace vrd::training
