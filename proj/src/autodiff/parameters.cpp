#include "vrd/autodiff/parameters.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "vrd/common/rng.hpp"

namespace vrd::ad {

Tensor& ParameterSet::add(const std::string& name, Shape shape, std::uint64_t seed) {
  if (params_.count(name)) throw std::invalid_argument("duplicate parameter " + name);
  const std::size_t n = numel_of(shape);
  const double fan_in = shape.size() == 2 ? static_cast<double>(shape[0]) : 1.0;
  const double fan_out = shape.size() == 2 ? static_cast<double>(shape[1]) : static_cast<double>(n);
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Rng rng = Rng(seed).split(name);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-limit, limit);
  return params_.emplace(name, Tensor::parameter(std::move(shape), std::move(v))).first->second;
}

Tensor& ParameterSet::add_zeros(const std::string& name, Shape shape) {
  if (params_.count(name)) throw std::invalid_argument("duplicate parameter " + name);
  const std::size_t n = numel_of(shape);
  return params_.emplace(name, Tensor::parameter(std::move(shape), std::vector<double>(n, 0.0))).first->second;
}

Tensor& ParameterSet::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter " + name);
  return it->second;
}

const Tensor& ParameterSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter " + name);
  return it->second;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.numel();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

double ParameterSet::grad_norm() const {
  double s = 0.0;
  for (const auto& [_, t] : params_) {
    if (!t.has_grad()) continue;
    for (double g : t.grad()) s += g * g;
  }
  return std::sqrt(s);
}

double ParameterSet::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double k = max_norm / norm;
    for (auto& [_, t] : params_) {
      if (!t.has_grad()) continue;
      for (double& g : t.mutable_grad()) g *= k;
    }
  }
  return norm;
}

ParameterSet ParameterSet::clone() const {
  ParameterSet out;
  for (const auto& [name, t] : params_) {
    out.params_.emplace(name, Tensor::parameter(t.shape(), std::vector<double>(t.values().begin(), t.values().end())));
  }
  return out;
}

void ParameterSet::assign(const ParameterSet& other) {
  if (other.size() != size()) throw std::invalid_argument("parameter sets differ in size");
  for (auto& [name, t] : params_) {
    const Tensor& src = other.get(name);
    if (src.shape() != t.shape()) throw ShapeError("shape mismatch for " + name);
    std::copy(src.values().begin(), src.values().end(), t.mutable_values().begin());
  }
}

nlohmann::json ParameterSet::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, t] : params_) {
    j[name] = {{"shape", t.shape()}, {"values", std::vector<double>(t.values().begin(), t.values().end())}};
  }
  return j;
}

void ParameterSet::load_json(const nlohmann::json& j) {
  for (auto& [name, t] : params_) {
    if (!j.contains(name)) throw std::runtime_error("checkpoint is missing parameter " + name);
    const auto& entry = j.at(name);
    const auto shape = entry.at("shape").get<Shape>();
    if (shape != t.shape()) {
      throw ShapeError("checkpoint shape " + to_string(shape) + " for " + name + " expected " + to_string(t.shape()));
    }
    const auto values = entry.at("values").get<std::vector<double>>();
    if (values.size() != t.numel()) throw ShapeError("checkpoint value count mismatch for " + name);
    check_finite(values, "checkpoint");
    std::copy(values.begin(), values.end(), t.mutable_values().begin());
  }
  for (const auto& [name, _] : j.items()) {
    if (!params_.count(name)) throw std::runtime_error("checkpoint has unknown parameter " + name);
  }
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params, const nlohmann::json& metadata) {
  nlohmann::json j;
  j["version"] = kCheckpointVersion;
  j["metadata"] = metadata;
  j["params"] = params.to_json();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

namespace {

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  auto j = nlohmann::json::parse(in);
  if (!j.contains("version") || j.at("version").get<int>() != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version in " + path.string());
  }
  return j;
}

}  // namespace

nlohmann::json load_checkpoint(const std::filesystem::path& path, ParameterSet& params) {
  auto j = read_json(path);
  params.load_json(j.at("params"));
  return j.value("metadata", nlohmann::json::object());
}

nlohmann::json read_checkpoint_metadata(const std::filesystem::path& path) {
  return read_json(path).value("metadata", nlohmann::json::object());
}

}  // namespace vrd::ad
