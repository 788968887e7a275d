#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrd/metrics/metrics.hpp"
#include "vrd/training/dream.hpp"

namespace vrd::metrics {

struct EvalOptions {
  double dt = 0.1;
  /// Seconds of future scored; the dream runs ceil(horizon / dt) steps.
  double horizon_seconds = 3.0;
  training::EgoPoseSource ego_pose = training::EgoPoseSource::Reconstruction;

  static EvalOptions from(const training::TrainConfig& c) { return {c.dt, c.eval_horizon(), c.ego_pose}; }
};

struct ScenarioMetrics {
  std::string scenario_id;
  std::size_t agents = 0;
  double min_ade = 0, min_fde = 0, actor_mr = 0;
  bool aborted = false;
  std::size_t abort_step = 0;
  /// Scored forecasts, kept for dumps.
  std::vector<std::string> agent_ids;
  std::vector<AgentForecast> forecasts;
};

/// K = 1 metrics pooled over every scored agent of every completed rollout.
struct MetricsReport {
  std::size_t K = 1;
  double min_ade = 0, min_fde = 0, actor_mr = 0;
  std::size_t agents = 0;
  std::size_t scenarios = 0;
  std::size_t aborted = 0;
  std::vector<ScenarioMetrics> per_scenario;

  nlohmann::json to_json(bool with_forecasts = false) const;
  /// One summary row; fixed formatting so equal reports give equal bytes.
  std::string summary_csv() const;
  std::string per_scenario_csv() const;
};

/// Dreams each sample and scores agents whose ground truth is complete over the
/// horizon (the ego included) against the 0.1 s reconstructed states. Aborted
/// rollouts are excluded and reported. Throws std::invalid_argument on an empty dataset.
MetricsReport evaluate(const training::Model& m, const std::vector<training::Sample>& samples, const EvalOptions& opt);

/// Replays the ground truth as the forecast at 0.1 s. Every metric is zero by
/// construction; it checks the scoring path end to end.
MetricsReport evaluate_oracle(const std::vector<training::Sample>& samples, const EvalOptions& opt);
training::DreamRollout oracle_rollout(const training::Sample& s, std::size_t points);

/// Forecasts from a finished rollout for agents complete over `points` steps.
ScenarioMetrics score_rollout(const training::DreamRollout& r, const training::Sample& s, std::size_t points);

void write_report(const std::filesystem::path& dir, const MetricsReport& r);

}  // namespace vrd::metrics
