#include "vrd/training/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace vrd::training {

using nlohmann::json;

scene::EncoderConfig ModelConfig::encoder() const {
  scene::EncoderConfig c;
  c.hidden = encoder_hidden;
  c.latent_dim = latent_dim;
  c.max_agents = max_agents;
  return c;
}

rssm::RssmConfig ModelConfig::rssm() const {
  rssm::RssmConfig c;
  c.hidden = rssm_hidden;
  c.predictor_hidden = predictor_hidden;
  c.slots = max_agents;
  c.latent_dim = latent_dim;
  return c;
}

kin::KinematicsConfig ModelConfig::kinematics() const {
  kin::KinematicsConfig c;
  c.hidden = kinematics_hidden;
  c.latent_dim = latent_dim;
  return c;
}

planner::PlannerConfig ModelConfig::planner() const {
  planner::PlannerConfig c;
  c.num_anchors = num_anchors;
  c.num_targets = num_targets;
  c.plan_steps = plan_steps;
  c.hidden = planner_hidden;
  c.generator_hidden = generator_hidden;
  c.slots = max_agents;
  c.latent_dim = latent_dim;
  return c;
}

namespace {

/// Steps of 0.1 s in dt, or 0 if dt is not a positive multiple of 0.1 s.
std::size_t native_steps(double seconds) {
  const double k = std::round(seconds * 10.0);
  if (k < 1 || std::abs(k - seconds * 10.0) > 1e-9) return 0;
  return static_cast<std::size_t>(k);
}

}  // namespace

std::size_t TrainConfig::stride() const { return native_steps(dt); }

std::size_t TrainConfig::teacher_steps() const {
  const double k = std::round(T / dt);
  return k < 1 ? 0 : static_cast<std::size_t>(k);
}

TrainConfig TrainConfig::for_cell(const AblationCell& cell) const {
  TrainConfig k = *this;
  k.ablation.clear();
  k.T = cell.T;
  k.dt = cell.dt;
  const double h = std::round(cell.T / cell.dt);
  k.H = h < 1 ? 0 : static_cast<std::size_t>(h);
  if (cell.seed) k.seed = *cell.seed;
  return k;
}

void validate(const TrainConfig& c, std::size_t horizon_steps) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (!(c.dt == 0.1 || c.dt == 0.2 || c.dt == 0.5)) fail("dt must be one of 0.1, 0.2, 0.5");
  if (c.H == 0) fail("H must be at least 1");
  if (c.epochs == 0) fail("epochs must be at least 1");
  if (c.batch_size == 0) fail("batch_size must be at least 1");
  if (!(c.lr > 0)) fail("lr must be positive");
  if (!(c.lr_final >= 0 && c.lr_final <= c.lr)) fail("lr_final must be in [0, lr]");
  if (!(c.clip_norm > 0)) fail("clip_norm must be positive");
  if (c.teacher_steps() == 0 || std::abs(c.teacher_steps() * c.dt - c.T) > 1e-9)
    fail("T must be a positive multiple of dt");
  if (c.model.plan_steps < c.stride()) fail("plan_steps must cover at least one recurrent step");
  if (c.model.max_agents == 0 || c.model.latent_dim == 0) fail("model dimensions must be positive");
  if (c.model.num_targets == 0 || c.model.num_targets > c.model.num_anchors) fail("num_targets must be in [1, num_anchors]");
  for (double w : {c.weights.rssm, c.weights.target, c.weights.traj, c.weights.score, c.weights.dream})
    if (!(w >= 0)) fail("loss weights must be non-negative");
  if (!(c.max_abort_fraction >= 0 && c.max_abort_fraction <= 1)) fail("max_abort_fraction must be in [0, 1]");
  if (c.eval_seconds < 0 || (c.eval_seconds > 0 && native_steps(c.eval_seconds) == 0))
    fail("eval_seconds must be a multiple of 0.1");
  for (const auto& cell : c.ablation) validate(c.for_cell(cell), horizon_steps);
  if (horizon_steps > 0) {
    const std::size_t s = c.stride();
    if (c.H * s > horizon_steps) fail("H * dt exceeds the scenario horizon");
    if (c.teacher_steps() * s > horizon_steps) fail("T exceeds the scenario horizon");
    if (c.model.plan_steps > horizon_steps) fail("plan_steps exceeds the scenario horizon");
    if (native_steps(c.eval_horizon()) > horizon_steps) fail("evaluation horizon exceeds the scenario horizon");
  }
}

std::string_view to_string(EgoPoseSource s) { return s == EgoPoseSource::Plan ? "plan" : "reconstruction"; }
std::string_view to_string(rssm::StopGradient s) {
  return s == rssm::StopGradient::Prediction ? "prediction" : "representation";
}

json to_json(const TrainConfig& c) {
  const auto& m = c.model;
  json ablation = json::array();
  for (const auto& cell : c.ablation) {
    json j{{"T", cell.T}, {"dt", cell.dt}};
    if (cell.seed) j["seed"] = *cell.seed;
    ablation.push_back(j);
  }
  return {
      {"model",
       {{"latent_dim", m.latent_dim},
        {"max_agents", m.max_agents},
        {"encoder_hidden", m.encoder_hidden},
        {"rssm_hidden", m.rssm_hidden},
        {"predictor_hidden", m.predictor_hidden},
        {"kinematics_hidden", m.kinematics_hidden},
        {"planner_hidden", m.planner_hidden},
        {"generator_hidden", m.generator_hidden},
        {"num_anchors", m.num_anchors},
        {"num_targets", m.num_targets},
        {"plan_steps", m.plan_steps}}},
      {"epochs", c.epochs},
      {"warmup_epochs", c.warmup_epochs},
      {"batch_size", c.batch_size},
      {"lr", c.lr},
      {"lr_final", c.lr_final},
      {"clip_norm", c.clip_norm},
      {"H", c.H},
      {"dt", c.dt},
      {"T", c.T},
      {"weights",
       {{"rssm", c.weights.rssm},
        {"target", c.weights.target},
        {"traj", c.weights.traj},
        {"score", c.weights.score},
        {"dream", c.weights.dream}}},
      {"seed", c.seed},
      {"score_alpha", c.score_alpha},
      {"stop_gradient", std::string(to_string(c.stop_gradient))},
      {"ego_pose", std::string(to_string(c.ego_pose))},
      {"max_abort_fraction", c.max_abort_fraction},
      {"eval_seconds", c.eval_seconds},
      {"ablation", ablation},
  };
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("unknown config key '" + where + k + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be an object");
  reject_unknown(j,
                 {"model", "epochs", "warmup_epochs", "batch_size", "lr", "lr_final", "clip_norm", "H", "dt", "T", "weights", "seed",
                  "score_alpha", "stop_gradient", "ego_pose", "max_abort_fraction", "eval_seconds", "ablation"},
                 "");
  TrainConfig c;
  try {
    if (j.contains("model")) {
      const auto& m = j.at("model");
      reject_unknown(m,
                     {"latent_dim", "max_agents", "encoder_hidden", "rssm_hidden", "predictor_hidden",
                      "kinematics_hidden", "planner_hidden", "generator_hidden", "num_anchors", "num_targets",
                      "plan_steps"},
                     "model.");
      read(m, "latent_dim", c.model.latent_dim);
      read(m, "max_agents", c.model.max_agents);
      read(m, "encoder_hidden", c.model.encoder_hidden);
      read(m, "rssm_hidden", c.model.rssm_hidden);
      read(m, "predictor_hidden", c.model.predictor_hidden);
      read(m, "kinematics_hidden", c.model.kinematics_hidden);
      read(m, "planner_hidden", c.model.planner_hidden);
      read(m, "generator_hidden", c.model.generator_hidden);
      read(m, "num_anchors", c.model.num_anchors);
      read(m, "num_targets", c.model.num_targets);
      read(m, "plan_steps", c.model.plan_steps);
    }
    read(j, "epochs", c.epochs);
    read(j, "warmup_epochs", c.warmup_epochs);
    read(j, "batch_size", c.batch_size);
    read(j, "lr", c.lr);
    read(j, "lr_final", c.lr_final);
    read(j, "clip_norm", c.clip_norm);
    read(j, "H", c.H);
    read(j, "dt", c.dt);
    read(j, "T", c.T);
    if (j.contains("weights")) {
      const auto& w = j.at("weights");
      reject_unknown(w, {"rssm", "target", "traj", "score", "dream"}, "weights.");
      read(w, "rssm", c.weights.rssm);
      read(w, "target", c.weights.target);
      read(w, "traj", c.weights.traj);
      read(w, "score", c.weights.score);
      read(w, "dream", c.weights.dream);
    }
    read(j, "seed", c.seed);
    read(j, "score_alpha", c.score_alpha);
    if (j.contains("stop_gradient")) {
      const auto s = j.at("stop_gradient").get<std::string>();
      if (s == "representation") c.stop_gradient = rssm::StopGradient::Representation;
      else if (s == "prediction") c.stop_gradient = rssm::StopGradient::Prediction;
      else throw ConfigError("stop_gradient must be 'representation' or 'prediction'");
    }
    if (j.contains("ego_pose")) {
      const auto s = j.at("ego_pose").get<std::string>();
      if (s == "reconstruction") c.ego_pose = EgoPoseSource::Reconstruction;
      else if (s == "plan") c.ego_pose = EgoPoseSource::Plan;
      else throw ConfigError("ego_pose must be 'reconstruction' or 'plan'");
    }
    read(j, "max_abort_fraction", c.max_abort_fraction);
    read(j, "eval_seconds", c.eval_seconds);
    if (j.contains("ablation")) {
      for (const auto& cell : j.at("ablation")) {
        reject_unknown(cell, {"T", "dt", "seed"}, "ablation[].");
        AblationCell a{cell.at("T").get<double>(), cell.at("dt").get<double>(), std::nullopt};
        if (cell.contains("seed")) a.seed = cell.at("seed").get<std::uint64_t>();
        c.ablation.push_back(a);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return train_config_from_json(j);
}

}  // namespace vrd::training
