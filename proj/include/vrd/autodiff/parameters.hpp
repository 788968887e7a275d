#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "vrd/autodiff/tensor.hpp"

namespace vrd::ad {

inline constexpr int kCheckpointVersion = 1;

/// Named, ordered collection of trainable tensors. Names are dotted paths
/// such as "rssm.gru.w_ir".
class ParameterSet {
 public:
  /// Registers a parameter initialised uniformly in +-sqrt(6 / (fan_in + fan_out)).
  /// The draw is a pure function of (seed, name).
  Tensor& add(const std::string& name, Shape shape, std::uint64_t seed);
  Tensor& add_zeros(const std::string& name, Shape shape);

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  double grad_norm() const;
  /// Scales all gradients so their global L2 norm is at most max_norm. Returns the norm before clipping.
  double clip_grad_norm(double max_norm);

  /// Deep copy with fresh storage.
  ParameterSet clone() const;
  /// Copies values in from other; names and shapes must agree.
  void assign(const ParameterSet& other);

  nlohmann::json to_json() const;
  /// Loads values into already-registered parameters; every name must be present with matching shape.
  void load_json(const nlohmann::json& j);

 private:
  std::map<std::string, Tensor> params_;
};

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const nlohmann::json& metadata = nlohmann::json::object());
/// Returns the metadata block.
nlohmann::json load_checkpoint(const std::filesystem::path& path, ParameterSet& params);
nlohmann::json read_checkpoint_metadata(const std::filesystem::path& path);

}  // namespace vrd::ad
