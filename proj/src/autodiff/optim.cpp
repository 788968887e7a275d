#include "vrd/autodiff/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace vrd::ad {

Adam::Adam(AdamOptions options) : opt_(options) { set_lr(options.lr); }

void Adam::set_lr(double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  opt_.lr = lr;
}

void Adam::step(ParameterSet& params) {
  for (const auto& [name, t] : params) {
    if (!t.has_grad()) throw std::logic_error("parameter " + name + " has no gradient");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (auto& [name, t] : params) {
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.empty()) {
      m.assign(t.numel(), 0.0);
      v.assign(t.numel(), 0.0);
    }
    auto g = t.grad();
    auto w = t.mutable_values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = opt_.beta1 * m[i] + (1.0 - opt_.beta1) * g[i];
      v[i] = opt_.beta2 * v[i] + (1.0 - opt_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= opt_.lr * mhat / (std::sqrt(vhat) + opt_.eps);
    }
  }
}

nlohmann::json Adam::state() const { return {{"step", t_}, {"m", m_}, {"v", v_}}; }

void Adam::load_state(const nlohmann::json& state) {
  t_ = state.at("step").get<long>();
  m_ = state.at("m").get<std::map<std::string, std::vector<double>>>();
  v_ = state.at("v").get<std::map<std::string, std::vector<double>>>();
}

}  // namespace vrd::ad
