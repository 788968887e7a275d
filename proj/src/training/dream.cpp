#include "vrd/training/dream.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vrd::training {

using namespace ad;

namespace {

struct EgoPose {
  Tensor x, y, heading;  // 1 x 1 each, t0 frame
};

/// p (1 x 2, t0 frame) in the frame of pose.
Tensor to_local(const Tensor& p, const EgoPose& pose) {
  Tensor dx = sub(slice_cols(p, 0, 1), pose.x);
  Tensor dy = sub(slice_cols(p, 1, 2), pose.y);
  Tensor c = cos(pose.heading), s = sin(pose.heading);
  return concat_cols({add(mul(c, dx), mul(s, dy)), sub(mul(c, dy), mul(s, dx))});
}

EgoPose ego_of(const kin::AgentStates& st) {
  return {slice_rows(st.x, 0, 1), slice_rows(st.y, 0, 1), slice_rows(st.heading, 0, 1)};
}

/// Pose reached by following the first `stride` rows of a plan from `pose`.
EgoPose follow_plan(const EgoPose& pose, const Tensor& plan, std::size_t stride) {
  const std::size_t at = 4 * (stride - 1);
  Tensor lx = slice_cols(plan, at, at + 1), ly = slice_cols(plan, at + 1, at + 2);
  Tensor c = cos(pose.heading), s = sin(pose.heading);
  Tensor turn = slice_cols(plan, 3, 4);
  for (std::size_t j = 1; j < stride; ++j) turn = add(turn, slice_cols(plan, 4 * j + 3, 4 * j + 4));
  return {add(pose.x, sub(mul(c, lx), mul(s, ly))), add(pose.y, add(mul(s, lx), mul(c, ly))),
          add(pose.heading, scale(turn, 0.1))};
}

std::size_t argmax(const Tensor& t) {
  const auto v = t.values();
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::vector<kin::KinematicState> DreamRollout::fine_trajectory(std::size_t agent) const {
  std::vector<kin::KinematicState> out;
  for (const auto& step : steps)
    for (const auto& s : step.substates) out.push_back(s.at(agent));
  return out;
}

DreamRollout dream_rollout(const Model& m, const scene::VectorSet& frame0, const planner::TargetCandidates& candidates,
                           const DreamOptions& opt) {
  if (opt.H == 0) throw std::invalid_argument("dream_rollout: H must be at least 1");
  const double stride_f = std::round(opt.dt * 10.0);
  if (stride_f < 1 || std::abs(stride_f - opt.dt * 10.0) > 1e-9)
    throw std::invalid_argument("dream_rollout: dt must be a positive multiple of 0.1 s");
  const auto stride = static_cast<std::size_t>(stride_f);
  if (stride > m.config.plan_steps) throw std::invalid_argument("dream_rollout: dt exceeds the plan length");

  DreamRollout r;
  r.dt = opt.dt;
  r.stride = stride;
  r.agent_ids = frame0.agent_ids;
  r.initial = kin::AgentStates::from(frame0.agent_states);

  std::size_t k = 0;
  try {
    const scene::LatentScene z0 = m.encoder.encode(frame0);
    r.mask = z0.mask;
    const auto d = m.planner.score_targets(z0, candidates);
    const auto chosen = m.planner.top_targets(d, candidates);
    const Tensor targets = m.planner.target_points(d, candidates, chosen);
    const Tensor trajs = m.planner.generate_trajectories(z0, targets);
    const std::size_t best = argmax(m.planner.trajectory_logits(z0, trajs));
    r.target = slice_rows(targets, best, best + 1);

    Tensor plan = slice_rows(trajs, best, best + 1);
    Tensor h = m.rssm.initial_state();
    kin::AgentStates states = r.initial;
    EgoPose pose = ego_of(states);
    scene::LatentScene latent = z0;
    const auto& bounds = m.rssm.config().bounds;
    for (k = 0; k < opt.H; ++k) {
      DreamStep step;
      step.latent = latent;
      step.plan = plan;
      step.action = rssm::clamp_action(slice_cols(plan, 4 * (stride - 1), 4 * stride), bounds);
      h = m.rssm.recurrent_step(h, latent, step.action);
      step.hidden = h;
      scene::LatentScene next = m.rssm.predict_transition(h, z0);
      step.substates = kin::reconstruct_scene(states, next, m.head, 0.1, stride, &step.commands);
      states = step.states();
      latent = next;
      r.steps.push_back(std::move(step));
      if (k + 1 == opt.H) break;
      pose = opt.ego_pose == EgoPoseSource::Reconstruction ? ego_of(states) : follow_plan(pose, plan, stride);
      plan = m.planner.generate_trajectories(latent, to_local(r.target, pose));
    }
    r.final_latent = latent;
  } catch (const NonFiniteError& e) {
    r.aborted = true;
    r.abort_step = k;
    r.abort_reason = e.what();
  }
  return r;
}

DreamRollout dream_rollout(const Model& m, const Sample& s, const DreamOptions& opt) {
  return dream_rollout(m, s.frame0(), s.candidates, opt);
}

DreamRollout dream_rollout(const Model& m, const scene::Scenario& s, std::size_t H, double dt) {
  const auto frame = scene::vectorize(s, s.current_step());
  const auto& ego = s.ego().states[s.current_step()];
  const auto cands = planner::generate_candidates(s, frame.frame, ego.speed,
                                                  static_cast<double>(m.config.plan_steps) * s.step_seconds(),
                                                  m.config.planner());
  return dream_rollout(m, frame, cands, {.H = H, .dt = dt});
}

Tensor dream_loss(const DreamRollout& r, const std::vector<AgentTruth>& truth) {
  if (truth.size() != r.agent_ids.size()) throw std::invalid_argument("dream_loss: agent count mismatch");
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i].agent_id != r.agent_ids[i])
      throw std::invalid_argument("dream_loss: agent id mismatch '" + truth[i].agent_id + "' vs '" + r.agent_ids[i] + "'");
  const std::size_t n = truth.size();
  std::vector<bool> used(n, false);
  Tensor total = Tensor::scalar(0.0);
  for (std::size_t k = 0; k < r.steps.size(); ++k) {
    const auto& step = r.steps[k];
    const std::size_t pos_at = (k + 1) * r.stride, cmd_at = k * r.stride;
    std::vector<double> target(n * 4, 0.0), weight(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = truth[i];
      if (pos_at >= a.states.size() || !a.valid[pos_at] || !a.command_valid[cmd_at]) continue;
      target[4 * i] = a.states[pos_at].x;
      target[4 * i + 1] = a.states[pos_at].y;
      target[4 * i + 2] = a.commands[cmd_at].accel;
      target[4 * i + 3] = a.commands[cmd_at].turn_rate;
      weight[i] = 1.0;
      used[i] = true;
    }
    const auto& st = step.states();
    Tensor pred = concat_cols({st.x, st.y, step.commands});
    Tensor err = smooth_l1(sub(pred, Tensor::from({n, 4}, std::move(target))));
    total = add(total, sum(scale_rows(err, weight)));
  }
  const auto agents = static_cast<double>(std::count(used.begin(), used.end(), true));
  return agents > 0 ? scale(total, 1.0 / agents) : total;
}

}  // namespace vrd::training
