#include "vrd/rssm/rssm.hpp"

#include <algorithm>

namespace vrd::rssm {

ad::Tensor action_tensor(const EgoAction& a, const kin::CommandBounds& b) {
  return ad::Tensor::row({a.x, a.y, std::clamp(a.accel, -b.max_accel, b.max_accel),
                          std::clamp(a.turn_rate, -b.max_turn_rate, b.max_turn_rate)});
}

ad::Tensor clamp_action(const ad::Tensor& a, const kin::CommandBounds& b) {
  using namespace ad;
  if (a.shape() != Shape{1, 4}) throw ShapeError("action must be 1 x 4");
  return concat_cols({slice_cols(a, 0, 2), clamp(slice_cols(a, 2, 3), -b.max_accel, b.max_accel),
                      clamp(slice_cols(a, 3, 4), -b.max_turn_rate, b.max_turn_rate)});
}

Rssm::Rssm(ad::ParameterSet& params, const RssmConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  const std::size_t in = cfg.slots * cfg.latent_dim + 4;
  const std::size_t h = cfg.hidden;
  in_reset_ = ad::Linear(params, "rssm.gru.input_reset", in, h, seed);
  in_update_ = ad::Linear(params, "rssm.gru.input_update", in, h, seed);
  in_candidate_ = ad::Linear(params, "rssm.gru.input_candidate", in, h, seed);
  hid_reset_ = ad::Linear(params, "rssm.gru.hidden_reset", h, h, seed);
  hid_update_ = ad::Linear(params, "rssm.gru.hidden_update", h, h, seed);
  hid_candidate_ = ad::Linear(params, "rssm.gru.hidden_candidate", h, h, seed);
  pred0_ = ad::Linear(params, "rssm.predictor.0", h, cfg.predictor_hidden, seed);
  pred1_ = ad::Linear(params, "rssm.predictor.1", cfg.predictor_hidden, cfg.predictor_hidden, seed);
  pred2_ = ad::Linear(params, "rssm.predictor.2", cfg.predictor_hidden, cfg.slots * cfg.latent_dim, seed);
}

ad::Tensor Rssm::initial_state() const { return ad::Tensor::zeros({1, cfg_.hidden}); }

ad::Tensor Rssm::recurrent_step(const ad::Tensor& h, const LatentScene& z, const ad::Tensor& action) const {
  using namespace ad;
  if (h.shape() != Shape{1, cfg_.hidden}) throw ShapeError("recurrent_step: hidden state shape " + to_string(h.shape()));
  if (z.slots() != cfg_.slots || z.dim() != cfg_.latent_dim) throw ShapeError("recurrent_step: latent shape mismatch");
  if (action.shape() != Shape{1, 4}) throw ShapeError("recurrent_step: action must be 1 x 4");
  std::vector<double> s(cfg_.action_scale.begin(), cfg_.action_scale.end());
  Tensor a = mul(action, Tensor::from({1, 4}, std::move(s)));
  Tensor u = concat_cols({z.flattened(), a});

  Tensor r = sigmoid(add(in_reset_(u), hid_reset_(h)));
  Tensor upd = sigmoid(add(in_update_(u), hid_update_(h)));
  Tensor cand = tanh(add(in_candidate_(u), mul(r, hid_candidate_(h))));
  // h' = (1 - u) * n + u * h
  return add(cand, mul(upd, sub(h, cand)));
}

LatentScene Rssm::predict_transition(const ad::Tensor& h, const LatentScene& like) const {
  using namespace ad;
  if (h.shape() != Shape{1, cfg_.hidden}) throw ShapeError("predict_transition: hidden state shape " + to_string(h.shape()));
  if (like.slots() != cfg_.slots) throw ShapeError("predict_transition: slot count mismatch");
  Tensor first = relu(pred0_(h));
  Tensor second = relu(pred1_(first));
  Tensor out = pred2_(add(second, first));
  std::vector<double> keep(cfg_.slots);
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = like.mask[i] ? 1.0 : 0.0;
  return like.with_embeddings(scale_rows(reshape(out, {cfg_.slots, cfg_.latent_dim}), keep));
}

ad::Tensor rssm_loss(const LatentScene& z, const LatentScene& z_hat, StopGradient side) {
  using namespace ad;
  if (z.embeddings.shape() != z_hat.embeddings.shape()) throw ShapeError("rssm_loss: latent shapes differ");
  Tensor a = z.flattened();
  Tensor b = z_hat.flattened();
  if (side == StopGradient::Representation) a = a.detach();
  else b = b.detach();
  Tensor na = l2_norm(a), nb = l2_norm(b);
  if (na.item() == 0.0 && nb.item() == 0.0) throw DegenerateLatentError("rssm_loss: both latents have zero norm");
  return sub(Tensor::scalar(1.0), div(dot(a, b), scalar_max(na, nb)));
}

}  // namespace vrd::rssm
