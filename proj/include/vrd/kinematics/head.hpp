#pragma once

#include <cstdint>
#include <vector>

#include "vrd/autodiff/nn.hpp"
#include "vrd/kinematics/state.hpp"
#include "vrd/scene/encoder.hpp"

namespace vrd::kin {

struct KinematicsConfig {
  std::size_t hidden = 64;
  std::size_t latent_dim = 64;
  CommandBounds bounds{};
  /// Escape hatch for the zero-speed clamp.
  bool allow_reverse = false;
};

/// Differentiable states of the valid agents; every channel is n x 1.
struct AgentStates {
  ad::Tensor x, y, heading, speed;

  static AgentStates from(const std::vector<KinematicState>& states);
  std::size_t size() const { return x.defined() ? x.rows() : 0; }
  KinematicState at(std::size_t i) const;
  std::vector<KinematicState> values() const;
  AgentStates detached() const;
};

/// Two-layer MLP shared across agent slots, tanh-squashed into command bounds.
class KinematicHead {
 public:
  KinematicHead() = default;
  KinematicHead(ad::ParameterSet& params, const KinematicsConfig& cfg, std::uint64_t seed);

  /// n_valid x 2 tensor of [accel, turn_rate], in valid-slot order.
  ad::Tensor decode(const scene::LatentScene& z) const;
  std::vector<KinematicCommand> decode_commands(const scene::LatentScene& z) const;

  const KinematicsConfig& config() const { return cfg_; }

 private:
  KinematicsConfig cfg_;
  ad::Linear hidden_;
  ad::Linear out_;
};

/// Batched Euler step; commands is n x 2.
AgentStates integrate(const AgentStates& s, const ad::Tensor& commands, double dt, bool allow_reverse = false);

/// Decodes commands from z and integrates every valid agent for `substeps`
/// steps of `dt`, holding the command. Returns the state after each substep.
std::vector<AgentStates> reconstruct_scene(const AgentStates& states, const scene::LatentScene& z,
                                           const KinematicHead& head, double dt, std::size_t substeps = 1,
                                           ad::Tensor* commands_out = nullptr);

}  // namespace vrd::kin
