#include "vrd/training/model.hpp"

#include <memory>

namespace vrd::training {

Model::Model(const ModelConfig& cfg, std::uint64_t seed)
    : config(cfg),
      encoder(params, cfg.encoder(), seed),
      rssm(params, cfg.rssm(), seed),
      head(params, cfg.kinematics(), seed),
      planner(params, cfg.planner(), seed) {}

void save_model(const std::filesystem::path& path, const Model& m, nlohmann::json extra) {
  TrainConfig wrapper;
  wrapper.model = m.config;
  extra["model"] = to_json(wrapper).at("model");
  ad::save_checkpoint(path, m.params, extra);
}

std::unique_ptr<Model> load_model(const std::filesystem::path& path, nlohmann::json* metadata) {
  auto meta = ad::read_checkpoint_metadata(path);
  if (!meta.contains("model")) throw ConfigError(path.string() + ": checkpoint has no model config");
  const TrainConfig c = train_config_from_json({{"model", meta.at("model")}});
  auto m = std::make_unique<Model>(c.model, 0);
  ad::load_checkpoint(path, m->params);
  if (metadata) *metadata = meta;
  return m;
}

}  // namespace vrd::training
