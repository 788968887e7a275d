#pragma once

#include <string>
#include <vector>

#include "vrd/autodiff/tensor.hpp"
#include "vrd/planner/planner.hpp"
#include "vrd/rssm/rssm.hpp"
#include "vrd/scene/vectorize.hpp"
#include "vrd/training/config.hpp"

namespace vrd::training {

/// Commands recovered from logged speed and heading by central differences at
/// the native rate, one-sided where a neighbour is missing. valid[t] is false
/// when the track has no valid neighbour around t.
struct CommandTrack {
  std::vector<kin::KinematicCommand> commands;
  std::vector<bool> valid;
};
CommandTrack finite_difference_commands(const scene::AgentTrack& track, double step_seconds);

/// Ground truth for one agent over native steps t0 .. t0 + span, in the ego frame at t0.
struct AgentTruth {
  std::string agent_id;
  std::vector<kin::KinematicState> states;
  std::vector<bool> valid;
  std::vector<kin::KinematicCommand> commands;
  std::vector<bool> command_valid;

  /// Valid at every step in [0, steps].
  bool complete(std::size_t steps) const;
};

/// Everything about a scenario that does not depend on the parameters.
struct Sample {
  std::string scenario_id;
  std::size_t t0 = 0;
  std::size_t stride = 1;
  /// Observations at t0 + k * stride for k = 0 .. teacher_steps.
  std::vector<scene::VectorSet> frames;
  planner::TargetCandidates candidates;
  /// Slot order of frames[0].
  std::vector<AgentTruth> agents;
  /// Ego trajectory over the plan: row j holds the position at t0 + j + 1 and
  /// the command at t0 + j, t0 frame, flattened to 1 x (plan_steps * 4).
  ad::Tensor ego_plan;
  planner::Point2 ego_endpoint;
  /// Teacher-forced action k: ego position at t0 + (k+1) * stride in the ego
  /// frame at t0 + k * stride, with the command at t0 + (k+1) * stride - 1.
  std::vector<rssm::EgoAction> teacher_actions;
  /// Native steps of ground truth after t0.
  std::size_t span = 0;

  const scene::VectorSet& frame0() const { return frames.front(); }
};

/// Prepares the sample at the scenario's last observed step.
/// Throws ScenarioError with the scenario id if it is too short for the config.
Sample prepare_sample(const scene::Scenario& s, const TrainConfig& cfg);
std::vector<Sample> prepare_samples(const std::vector<scene::Scenario>& corpus, const TrainConfig& cfg);

}  // namespace vrd::training
