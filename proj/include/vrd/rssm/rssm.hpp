#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "vrd/autodiff/nn.hpp"
#include "vrd/kinematics/state.hpp"
#include "vrd/scene/encoder.hpp"

namespace vrd::rssm {

using scene::LatentScene;

/// Planned ego state for the next step, [x, y, accel, turn_rate], ego frame.
struct EgoAction {
  double x = 0.0;
  double y = 0.0;
  double accel = 0.0;
  double turn_rate = 0.0;
};

/// Which argument of the latent loss is cut from the graph.
enum class StopGradient {
  Representation,  // detach z: the predictor moves toward the encoder
  Prediction,      // detach z-hat, the literal reading; leaves the predictor without gradient
};

struct RssmConfig {
  std::size_t hidden = 256;
  std::size_t predictor_hidden = 256;
  std::size_t slots = 16;
  std::size_t latent_dim = 64;
  /// Per-channel scale applied to [x, y, accel, turn_rate] before the GRU.
  std::array<double, 4> action_scale{0.1, 0.1, 0.2, 1.0};
  kin::CommandBounds bounds{};
};

class DegenerateLatentError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Action as a 1 x 4 tensor with accel and turn rate clamped into bounds.
ad::Tensor action_tensor(const EgoAction& a, const kin::CommandBounds& bounds = {});
/// Clamps the accel and turn-rate channels of a differentiable 1 x 4 action.
ad::Tensor clamp_action(const ad::Tensor& a, const kin::CommandBounds& bounds);

/**
 * Deterministic recurrent state-space model.
 *
 * recurrent_step is a single GRU cell over [flatten(z), scaled action].
 * predict_transition is a three-layer ReLU MLP whose first hidden activation
 * is added to the last hidden activation before the output layer.
 */
class Rssm {
 public:
  Rssm() = default;
  Rssm(ad::ParameterSet& params, const RssmConfig& cfg, std::uint64_t seed);

  /// Zero hidden state, 1 x hidden.
  ad::Tensor initial_state() const;
  ad::Tensor recurrent_step(const ad::Tensor& h, const LatentScene& z, const ad::Tensor& action) const;
  /// Mask and ids are copied from `like`; masked rows are zeroed.
  LatentScene predict_transition(const ad::Tensor& h, const LatentScene& like) const;

  const RssmConfig& config() const { return cfg_; }

 private:
  RssmConfig cfg_;
  ad::Linear in_reset_, in_update_, in_candidate_;
  ad::Linear hid_reset_, hid_update_, hid_candidate_;
  ad::Linear pred0_, pred1_, pred2_;
};

/// 1 - (z . z_hat) / max(|z|, |z_hat|) over the flattened latents.
/// Throws DegenerateLatentError when both norms are zero.
ad::Tensor rssm_loss(const LatentScene& z, const LatentScene& z_hat, StopGradient side = StopGradient::Representation);

}  // namespace vrd::rssm
