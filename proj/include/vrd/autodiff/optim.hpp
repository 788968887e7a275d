#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrd/autodiff/parameters.hpp"

namespace vrd::ad {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are keyed by parameter name.
class Adam {
 public:
  explicit Adam(AdamOptions options = {});

  /// Updates every parameter in place. Throws if one has no gradient buffer.
  void step(ParameterSet& params);

  long step_count() const noexcept { return t_; }
  const AdamOptions& options() const noexcept { return opt_; }
  void set_lr(double lr);

  /// Step count and moment buffers; doubles survive the JSON round trip exactly.
  nlohmann::json state() const;
  void load_state(const nlohmann::json& state);

 private:
  AdamOptions opt_;
  long t_ = 0;
  std::map<std::string, std::vector<double>> m_;
  std::map<std::string, std::vector<double>> v_;
};

}  // namespace vrd::ad
