#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vrd/autodiff/ops.hpp"
#include "vrd/autodiff/parameters.hpp"

namespace vrd::ad {

/// y = x W + b with W (in x out) and b (1 x out).
struct Linear {
  Tensor weight;
  Tensor bias;

  Linear() = default;
  Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, std::uint64_t seed);

  Tensor operator()(const Tensor& x) const { return add_row(matmul(x, weight), bias); }
  std::size_t in_features() const { return weight.rows(); }
  std::size_t out_features() const { return weight.cols(); }
};

/// Stack of Linear layers with ReLU between them (none after the last).
struct Mlp {
  std::vector<Linear> layers;

  Mlp() = default;
  Mlp(ParameterSet& params, const std::string& name, const std::vector<std::size_t>& widths, std::uint64_t seed);

  Tensor operator()(const Tensor& x) const;
};

}  // namespace vrd::ad
