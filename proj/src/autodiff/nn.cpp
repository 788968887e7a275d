#include "vrd/autodiff/nn.hpp"

#include <stdexcept>

namespace vrd::ad {

Linear::Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, std::uint64_t seed)
    : weight(params.add(name + ".weight", {in, out}, seed)), bias(params.add_zeros(name + ".bias", {1, out})) {}

Mlp::Mlp(ParameterSet& params, const std::string& name, const std::vector<std::size_t>& widths, std::uint64_t seed) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp needs at least input and output widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers.emplace_back(params, name + "." + std::to_string(i), widths[i], widths[i + 1], seed);
  }
}

Tensor Mlp::operator()(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i](h);
    if (i + 1 < layers.size()) h = relu(h);
  }
  return h;
}

}  // namespace vrd::ad
