#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vrd/autodiff/nn.hpp"
#include "vrd/scene/encoder.hpp"

namespace vrd::planner {

using scene::LatentScene;
using scene::Point2;

struct PlannerConfig {
  std::size_t num_anchors = 64;
  std::size_t num_targets = 6;
  /// Length of every generated trajectory, in 0.1 s steps.
  std::size_t plan_steps = 60;
  std::size_t hidden = 128;
  std::size_t generator_hidden = 256;
  std::size_t slots = 16;
  std::size_t latent_dim = 64;
  double coord_scale = 0.1;
  double anchor_spacing = 1.0;
  double dedup_grid = 1.0;
  double reach_margin = 10.0;
  /// Temperature of the ground-truth score target softmax(-alpha * maxdist).
  double score_alpha = 1.0;
};

/// Anchors in the ego frame. Padding entries repeat real anchors and are invalid.
struct TargetCandidates {
  std::vector<Point2> anchors;
  std::vector<bool> valid;
  /// Set when no lane was in reach and a radial fan was used instead.
  bool fallback = false;

  std::size_t size() const { return anchors.size(); }
  std::size_t valid_count() const;
  ad::Tensor as_tensor() const;
};

/// Lane-centerline samples within speed * horizon + margin of the ego, deduplicated
/// on a grid and subsampled or padded to exactly n. Ordered by polyline id, then arc length.
TargetCandidates generate_candidates(const scene::Scenario& scenario, const scene::Pose2& ego_frame, double speed,
                                     double horizon_seconds, const PlannerConfig& cfg);

struct TargetDistribution {
  ad::Tensor logits;  // 1 x N, invalid anchors pushed to -1e9
  ad::Tensor probs;   // 1 x N
  ad::Tensor offsets; // N x 2, meters
};

/// Log of the joint density: log softmax(u)_n + log N(offset; mean_n, I).
double target_log_density(const TargetDistribution& d, std::size_t n, Point2 offset);

/// First layer sees a per-row input and a shared 1 x k context (a flattened latent);
/// equivalent to an MLP on their concatenation without tiling the context.
class ConditionedMlp {
 public:
  ConditionedMlp() = default;
  ConditionedMlp(ad::ParameterSet& params, const std::string& name, std::size_t context, std::size_t row,
                 std::vector<std::size_t> widths, std::uint64_t seed);
  ad::Tensor operator()(const ad::Tensor& context, const ad::Tensor& rows) const;

 private:
  ad::Linear context_;
  ad::Tensor row_weight_;
  ad::Mlp rest_;
};

class Planner {
 public:
  Planner() = default;
  Planner(ad::ParameterSet& params, const PlannerConfig& cfg, std::uint64_t seed);

  TargetDistribution score_targets(const LatentScene& z, const TargetCandidates& c) const;
  /// Indices of the top-M valid anchors by probability; ties go to the lower index.
  std::vector<std::size_t> top_targets(const TargetDistribution& d, const TargetCandidates& c) const;
  /// anchor + predicted offset for each chosen index, k x 2.
  ad::Tensor target_points(const TargetDistribution& d, const TargetCandidates& c,
                           const std::vector<std::size_t>& chosen) const;

  /// targets: M x 2 (meters, latent frame). Returns M x (plan_steps * 4) rows of
  /// [x, y, accel, turn_rate] per 0.1 s step.
  ad::Tensor generate_trajectories(const LatentScene& z, const ad::Tensor& targets) const;
  /// g logits, 1 x M.
  ad::Tensor trajectory_logits(const LatentScene& z, const ad::Tensor& trajectories) const;
  /// Softmax of the logits, 1 x M.
  ad::Tensor score_trajectories(const LatentScene& z, const ad::Tensor& trajectories) const;

  const PlannerConfig& config() const { return cfg_; }

 private:
  PlannerConfig cfg_;
  ConditionedMlp u_, v_, generator_, g_;
};

/// Cross-entropy on the anchor nearest the true endpoint plus Huber on its offset.
ad::Tensor target_loss(const TargetDistribution& d, const TargetCandidates& c, Point2 gt_endpoint);
/// Index of the valid anchor nearest p.
std::size_t nearest_anchor(const TargetCandidates& c, Point2 p);

/// gt: plan_steps x 4 rows flattened to 1 x (plan_steps * 4). Mean per-step Huber summed over channels.
ad::Tensor trajectory_loss(const ad::Tensor& trajectory, const ad::Tensor& gt);

/// Ground-truth score target softmax(-alpha * max_t |p_t - g_t|) over the M rows.
std::vector<double> score_targets_from_distance(const ad::Tensor& trajectories, const ad::Tensor& gt, double alpha);
/// Cross-entropy between the ground-truth score target and the predicted logits.
ad::Tensor score_loss(const ad::Tensor& logits, const ad::Tensor& trajectories, const ad::Tensor& gt, double alpha);

/// Row m of a trajectory matrix viewed as plan_steps x 4.
ad::Tensor trajectory_row(const ad::Tensor& trajectories, std::size_t m);

}  // namespace vrd::planner
