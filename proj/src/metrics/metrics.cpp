#include "vrd/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vrd::metrics {

namespace {

void check(const AgentForecast& f) {
  if (f.modes.empty()) throw std::invalid_argument("metrics: K must be at least 1");
  if (f.truth.empty()) throw std::invalid_argument("metrics: empty ground truth");
  for (const auto& m : f.modes)
    if (m.size() != f.truth.size())
      throw std::invalid_argument("metrics: prediction length " + std::to_string(m.size()) + " vs ground truth " +
                                  std::to_string(f.truth.size()));
}

double dist(scene::Point2 a, scene::Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

template <class F>
double mean_over(std::span<const AgentForecast> agents, F&& per_agent) {
  if (agents.empty()) throw std::invalid_argument("metrics: no agents to score");
  double s = 0;
  for (const auto& a : agents) s += per_agent(a);
  return s / static_cast<double>(agents.size());
}

}  // namespace

double agent_min_ade(const AgentForecast& f) {
  check(f);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : f.modes) {
    double s = 0;
    for (std::size_t t = 0; t < m.size(); ++t) s += dist(m[t], f.truth[t]);
    best = std::min(best, s / static_cast<double>(m.size()));
  }
  return best;
}

double agent_min_fde(const AgentForecast& f) {
  check(f);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : f.modes) best = std::min(best, dist(m.back(), f.truth.back()));
  return best;
}

double min_ade(std::span<const AgentForecast> agents) { return mean_over(agents, agent_min_ade); }
double min_fde(std::span<const AgentForecast> agents) { return mean_over(agents, agent_min_fde); }

double actor_mr(std::span<const AgentForecast> agents, double threshold) {
  return mean_over(agents, [&](const AgentForecast& a) { return agent_min_fde(a) > threshold ? 1.0 : 0.0; });
}

}  // namespace vrd::metrics
