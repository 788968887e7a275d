#include "vrd/kinematics/head.hpp"

#include <stdexcept>

namespace vrd::kin {

AgentStates AgentStates::from(const std::vector<KinematicState>& states) {
  const std::size_t n = states.size();
  std::vector<double> x(n), y(n), h(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = states[i].x;
    y[i] = states[i].y;
    h[i] = states[i].heading;
    v[i] = states[i].speed;
  }
  return {ad::Tensor::from({n, 1}, std::move(x)), ad::Tensor::from({n, 1}, std::move(y)),
          ad::Tensor::from({n, 1}, std::move(h)), ad::Tensor::from({n, 1}, std::move(v))};
}

KinematicState AgentStates::at(std::size_t i) const { return {x.at(i), y.at(i), heading.at(i), speed.at(i)}; }

std::vector<KinematicState> AgentStates::values() const {
  std::vector<KinematicState> out;
  for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i));
  return out;
}

AgentStates AgentStates::detached() const { return {x.detach(), y.detach(), heading.detach(), speed.detach()}; }

KinematicHead::KinematicHead(ad::ParameterSet& params, const KinematicsConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      hidden_(params, "kinematics.0", cfg.latent_dim, cfg.hidden, seed),
      out_(params, "kinematics.1", cfg.hidden, 2, seed) {}

ad::Tensor KinematicHead::decode(const scene::LatentScene& z) const {
  using namespace ad;
  if (z.dim() != cfg_.latent_dim) throw ShapeError("decode_kinematics: latent width mismatch");
  const auto slots = z.valid_slots();
  if (slots.empty()) throw std::invalid_argument("decode_kinematics: no valid agent slot");
  Tensor rows = gather_rows(z.embeddings, slots);
  Tensor squashed = tanh(out_(relu(hidden_(rows))));
  std::vector<double> bound(slots.size() * 2);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    bound[2 * i] = cfg_.bounds.max_accel;
    bound[2 * i + 1] = cfg_.bounds.max_turn_rate;
  }
  return mul(squashed, Tensor::from({slots.size(), 2}, std::move(bound)));
}

std::vector<KinematicCommand> KinematicHead::decode_commands(const scene::LatentScene& z) const {
  const auto c = decode(z);
  std::vector<KinematicCommand> out(c.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {c.at(i, 0), c.at(i, 1)};
  return out;
}

AgentStates integrate(const AgentStates& s, const ad::Tensor& commands, double dt, bool allow_reverse) {
  using namespace ad;
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  if (commands.shape() != Shape{s.size(), 2}) throw ShapeError("integrate: one command row per agent required");
  Tensor accel = slice_cols(commands, 0, 1);
  Tensor turn = slice_cols(commands, 1, 2);
  AgentStates n;
  n.speed = add(s.speed, scale(accel, dt));
  if (!allow_reverse) n.speed = relu(n.speed);
  n.heading = wrap_angle(add(s.heading, scale(turn, dt)));
  Tensor step = scale(n.speed, dt);
  n.x = add(s.x, mul(step, cos(n.heading)));
  n.y = add(s.y, mul(step, sin(n.heading)));
  return n;
}

std::vector<AgentStates> reconstruct_scene(const AgentStates& states, const scene::LatentScene& z,
                                           const KinematicHead& head, double dt, std::size_t substeps,
                                           ad::Tensor* commands_out) {
  if (states.size() != z.valid_count()) {
    throw std::invalid_argument("reconstruct_scene: " + std::to_string(states.size()) + " states for " +
                                std::to_string(z.valid_count()) + " valid slots");
  }
  if (substeps == 0) throw std::invalid_argument("reconstruct_scene: substeps must be positive");
  ad::Tensor cmd = head.decode(z);
  if (commands_out) *commands_out = cmd;
  std::vector<AgentStates> out;
  AgentStates cur = states;
  for (std::size_t k = 0; k < substeps; ++k) {
    cur = integrate(cur, cmd, dt, head.config().allow_reverse);
    out.push_back(cur);
  }
  return out;
}

}  // namespace vrd::kin
