#include "vrd/scene/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace vrd::scene {

std::size_t LatentScene::valid_count() const {
  std::size_t n = 0;
  for (bool m : mask) n += m ? 1 : 0;
  return n;
}

std::vector<std::size_t> LatentScene::valid_slots() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

ad::Tensor LatentScene::flattened() const { return ad::reshape(embeddings, {1, embeddings.numel()}); }

LatentScene LatentScene::with_embeddings(ad::Tensor e) const {
  LatentScene out = *this;
  out.embeddings = std::move(e);
  return out;
}

SceneEncoder::SceneEncoder(ad::ParameterSet& params, const EncoderConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      sub1_(params, "encoder.subgraph0", kVectorFeatureDim, cfg.hidden, seed),
      sub2_(params, "encoder.subgraph1", 2 * cfg.hidden, cfg.hidden, seed),
      project_(params, "encoder.project", cfg.hidden, cfg.latent_dim, seed),
      query_(params, "encoder.attention.query", cfg.latent_dim, cfg.latent_dim, seed),
      key_(params, "encoder.attention.key", cfg.latent_dim, cfg.latent_dim, seed),
      value_(params, "encoder.attention.value", cfg.latent_dim, cfg.latent_dim, seed) {}

ad::Tensor SceneEncoder::features(const VectorSet& x) const {
  std::vector<double> f(x.vectors.size() * kVectorFeatureDim, 0.0);
  for (std::size_t i = 0; i < x.vectors.size(); ++i) {
    const auto& v = x.vectors[i];
    double* row = f.data() + i * kVectorFeatureDim;
    row[0] = v.start.x * cfg_.coord_scale;
    row[1] = v.start.y * cfg_.coord_scale;
    row[2] = v.end.x * cfg_.coord_scale;
    row[3] = v.end.y * cfg_.coord_scale;
    row[4 + static_cast<std::size_t>(v.attribute)] = 1.0;
    row[4 + kAttributeCount] = v.time * cfg_.time_scale;
  }
  return ad::Tensor::from({x.vectors.size(), kVectorFeatureDim}, std::move(f));
}

LatentScene SceneEncoder::encode(const VectorSet& x) const {
  using namespace ad;
  if (x.empty()) throw std::invalid_argument("encode: empty vector set");
  if (x.agent_count() == 0) throw std::invalid_argument("encode: vector set has no agents");
  if (x.agent_count() > cfg_.max_agents) {
    throw std::length_error("encode: " + std::to_string(x.agent_count()) + " agents exceed the " +
                            std::to_string(cfg_.max_agents) + " available slots");
  }
  const std::size_t n_poly = x.polylines.size();
  std::vector<std::size_t> seg(x.vectors.size());
  for (std::size_t i = 0; i < seg.size(); ++i) seg[i] = x.vectors[i].polyline;

  Tensor h = relu(sub1_(features(x)));
  Tensor pooled = segment_max(h, seg, n_poly);
  h = relu(sub2_(concat_cols({h, gather_rows(pooled, seg)})));
  Tensor poly = project_(segment_max(h, seg, n_poly));

  Tensor q = query_(poly), k = key_(poly), v = value_(poly);
  Tensor attn = softmax(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(cfg_.latent_dim))));
  Tensor global = add(poly, matmul(attn, v));

  std::vector<std::size_t> slots(x.agent_count());
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
  LatentScene z;
  z.embeddings = scatter_rows(gather_rows(global, x.agent_polyline), slots, cfg_.max_agents);
  z.mask.assign(cfg_.max_agents, false);
  z.agent_ids.assign(cfg_.max_agents, std::string());
  for (std::size_t i = 0; i < x.agent_count(); ++i) {
    z.mask[i] = true;
    z.agent_ids[i] = x.agent_ids[i];
  }
  return z;
}

}  // namespace vrd::scene
