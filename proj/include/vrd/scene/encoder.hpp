#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vrd/autodiff/nn.hpp"
#include "vrd/scene/vectorize.hpp"

namespace vrd::scene {

/// Per-agent latent z: an N_max x D matrix whose masked-out rows are zero.
struct LatentScene {
  ad::Tensor embeddings;
  std::vector<bool> mask;
  /// Slot -> agent id; empty string for unused slots. Slot 0 is the ego.
  std::vector<std::string> agent_ids;

  std::size_t slots() const { return mask.size(); }
  std::size_t dim() const { return embeddings.cols(); }
  std::size_t valid_count() const;
  std::vector<std::size_t> valid_slots() const;
  /// 1 x (N_max * D) view used where a single vector is needed.
  ad::Tensor flattened() const;
  /// Same mask and ids, new embeddings.
  LatentScene with_embeddings(ad::Tensor e) const;
};

struct EncoderConfig {
  std::size_t hidden = 64;
  std::size_t latent_dim = 64;
  std::size_t max_agents = 16;
  /// Coordinates enter the network in units of 1 / coord_scale meters.
  double coord_scale = 0.1;
  double time_scale = 0.25;
};

inline constexpr std::size_t kVectorFeatureDim = 4 + kAttributeCount + 1;

/**
 * Reduced VectorNet representation model.
 *
 * Each polyline is a set of vectors. Two subgraph rounds apply a shared MLP
 * to every vector, max-pool within the polyline and concatenate the pooled
 * feature back onto each vector. The pooled polyline features then pass one
 * round of scaled dot-product self-attention (with a residual connection).
 * Agent slots take the attended feature of their own history polyline.
 */
class SceneEncoder {
 public:
  SceneEncoder() = default;
  SceneEncoder(ad::ParameterSet& params, const EncoderConfig& cfg, std::uint64_t seed);

  /// Throws std::length_error if the scene has more agents than slots.
  LatentScene encode(const VectorSet& x) const;

  /// Constant V x kVectorFeatureDim node feature matrix.
  ad::Tensor features(const VectorSet& x) const;
  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  ad::Linear sub1_;
  ad::Linear sub2_;
  ad::Linear project_;
  ad::Linear query_;
  ad::Linear key_;
  ad::Linear value_;
};

}  // namespace vrd::scene
