#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>

#include "vrd/autodiff/parameters.hpp"
#include "vrd/kinematics/head.hpp"
#include "vrd/planner/planner.hpp"
#include "vrd/rssm/rssm.hpp"
#include "vrd/scene/encoder.hpp"
#include "vrd/training/config.hpp"

namespace vrd::training {

/// Every network of the forecaster over one parameter set. Not copyable: the
/// networks hold handles into params.
struct Model {
  ModelConfig config;
  ad::ParameterSet params;
  scene::SceneEncoder encoder;
  rssm::Rssm rssm;
  kin::KinematicHead head;
  planner::Planner planner;

  Model(const ModelConfig& cfg, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
};

/// Checkpoint metadata carries the model config and any extra fields.
void save_model(const std::filesystem::path& path, const Model& m, nlohmann::json extra = nlohmann::json::object());
/// Rebuilds the model from the stored config, then loads its values.
std::unique_ptr<Model> load_model(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);

}  // namespace vrd::training
