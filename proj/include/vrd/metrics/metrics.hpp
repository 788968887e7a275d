#pragma once

#include <span>
#include <vector>

#include "vrd/scene/types.hpp"

namespace vrd::metrics {

using Trajectory = std::vector<scene::Point2>;

/// K candidate trajectories for one agent and its ground truth, all of equal length.
struct AgentForecast {
  std::vector<Trajectory> modes;
  Trajectory truth;
};

inline constexpr double kMissThreshold = 2.0;

/// Best-of-K mean displacement for one agent. Throws std::invalid_argument on
/// K = 0, an empty truth, or a length mismatch.
double agent_min_ade(const AgentForecast& f);
/// Best-of-K final displacement for one agent.
double agent_min_fde(const AgentForecast& f);

/// Averages over agents; each throws std::invalid_argument when there are none.
double min_ade(std::span<const AgentForecast> agents);
double min_fde(std::span<const AgentForecast> agents);
/// Fraction of agents whose best-of-K final displacement exceeds the threshold (strictly).
double actor_mr(std::span<const AgentForecast> agents, double threshold = kMissThreshold);

}  // namespace vrd::metrics
