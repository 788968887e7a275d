#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrd/kinematics/head.hpp"
#include "vrd/planner/planner.hpp"
#include "vrd/rssm/rssm.hpp"
#include "vrd/scene/encoder.hpp"

namespace vrd::training {

/// Network sizes shared by every module; latent_dim and max_agents are common to all of them.
struct ModelConfig {
  std::size_t latent_dim = 64;
  std::size_t max_agents = 16;
  std::size_t encoder_hidden = 64;
  std::size_t rssm_hidden = 256;
  std::size_t predictor_hidden = 256;
  std::size_t kinematics_hidden = 64;
  std::size_t planner_hidden = 128;
  std::size_t generator_hidden = 256;
  std::size_t num_anchors = 64;
  std::size_t num_targets = 6;
  /// Planned trajectory length in 0.1 s steps.
  std::size_t plan_steps = 30;

  scene::EncoderConfig encoder() const;
  rssm::RssmConfig rssm() const;
  kin::KinematicsConfig kinematics() const;
  planner::PlannerConfig planner() const;
};

/// Where the ego pose used to re-express the fixed target comes from during a dream.
enum class EgoPoseSource { Reconstruction, Plan };

struct LossWeights {
  double rssm = 1.0;
  double target = 1.0;
  /// Regression of the trajectory generated from the true endpoint.
  double traj = 1.0;
  double score = 1.0;
  double dream = 1.0;
};

struct AblationCell {
  /// Teacher-forced sequence length in seconds; the dream horizon is T / dt steps.
  double T = 2.0;
  double dt = 0.1;
  /// Overrides the base seed when set.
  std::optional<std::uint64_t> seed;
};

struct TrainConfig {
  ModelConfig model;
  std::size_t epochs = 70;
  std::size_t warmup_epochs = 10;
  std::size_t batch_size = 4;
  double lr = 1e-3;
  /// Cosine-annealed learning rate reached at the last epoch; 0 keeps lr constant.
  double lr_final = 0.0;
  double clip_norm = 10.0;
  /// Dream horizon in recurrent steps of dt seconds.
  std::size_t H = 30;
  double dt = 0.1;
  /// Teacher-forced sequence length in seconds.
  double T = 3.0;
  LossWeights weights;
  std::uint64_t seed = 0;
  double score_alpha = 1.0;
  rssm::StopGradient stop_gradient = rssm::StopGradient::Representation;
  EgoPoseSource ego_pose = EgoPoseSource::Reconstruction;
  /// Fraction of aborted rollouts in one epoch that fails the run.
  double max_abort_fraction = 0.1;
  /// Evaluation horizon in seconds; 0 means H * dt.
  double eval_seconds = 0.0;
  std::vector<AblationCell> ablation;

  /// This config with the cell's T, dt, H = T / dt and seed applied, and no grid.
  TrainConfig for_cell(const AblationCell& cell) const;

  /// Native 10 Hz steps per recurrent step.
  std::size_t stride() const;
  /// Teacher-forced recurrent steps.
  std::size_t teacher_steps() const;
  double eval_horizon() const { return eval_seconds > 0 ? eval_seconds : static_cast<double>(H) * dt; }
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws ConfigError naming the first violated constraint. horizon_steps is the
/// scenario horizon in native steps (0 skips the horizon checks).
void validate(const TrainConfig& c, std::size_t horizon_steps = 0);

nlohmann::json to_json(const TrainConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_train_config(const std::filesystem::path& path);

std::string_view to_string(EgoPoseSource s);
std::string_view to_string(rssm::StopGradient s);

}  // namespace vrd::training
