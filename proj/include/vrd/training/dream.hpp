#pragma once

#include <string>
#include <vector>

#include "vrd/kinematics/head.hpp"
#include "vrd/training/model.hpp"
#include "vrd/training/sample.hpp"

namespace vrd::training {

struct DreamOptions {
  std::size_t H = 30;
  double dt = 0.1;
  EgoPoseSource ego_pose = EgoPoseSource::Reconstruction;
};

/// One recurrent step of an imagined rollout.
struct DreamStep {
  /// Latent fed into the step: encoded at k = 0, imagined afterwards.
  scene::LatentScene latent;
  /// Recurrent state after the step.
  ad::Tensor hidden;
  /// Ego trajectory (1 x plan_steps*4, ego frame at the step) whose state at stride-1 is the action.
  ad::Tensor plan;
  ad::Tensor action;
  /// n_agents x 2 commands held over the step.
  ad::Tensor commands;
  /// States at each 0.1 s inside the step; the last one is the state after the step.
  std::vector<kin::AgentStates> substates;

  const kin::AgentStates& states() const { return substates.back(); }
};

/// Imagined future from one observation. All states are in the ego frame at t0.
struct DreamRollout {
  std::vector<std::string> agent_ids;
  std::vector<bool> mask;
  kin::AgentStates initial;
  /// Fixed target chosen at step 0, t0 frame.
  ad::Tensor target;
  std::vector<DreamStep> steps;
  /// Latent imagined by the last step.
  scene::LatentScene final_latent;
  double dt = 0.1;
  std::size_t stride = 1;

  bool aborted = false;
  std::size_t abort_step = 0;
  std::string abort_reason;

  std::size_t length() const { return steps.size(); }
  /// Every 0.1 s state of agent i after t0.
  std::vector<kin::KinematicState> fine_trajectory(std::size_t agent) const;
};

/**
 * Encode, plan, then H times: step the recurrent model with the planned
 * action, imagine the next latent, reconstruct every agent, and re-plan the
 * ego trajectory from the imagined latent toward the step-0 target.
 *
 * Records into the active tape, if any. A non-finite value stops the rollout;
 * it is returned with aborted set and the failing step index.
 */
DreamRollout dream_rollout(const Model& m, const scene::VectorSet& frame0, const planner::TargetCandidates& candidates,
                           const DreamOptions& opt);
DreamRollout dream_rollout(const Model& m, const Sample& s, const DreamOptions& opt);
/// Convenience entry from a raw scenario at its last observed step.
DreamRollout dream_rollout(const Model& m, const scene::Scenario& s, std::size_t H, double dt);

/// Smooth L1 on [x, y, accel, turn_rate] per agent and step, summed over
/// steps and averaged over agents with any valid term. Positions compare the
/// state after step k with the truth at (k+1) * stride; commands compare with
/// the truth at k * stride. Throws std::invalid_argument on an agent id mismatch.
ad::Tensor dream_loss(const DreamRollout& r, const std::vector<AgentTruth>& truth);

}  // namespace vrd::training
