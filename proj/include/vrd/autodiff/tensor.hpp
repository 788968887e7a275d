#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vrd::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel_of(const Shape& shape);
std::string to_string(const Shape& shape);

/// Raised when operand shapes do not line up. There is no implicit broadcasting.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a NaN or infinity enters or leaves an operation.
class NonFiniteError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Storage behind a Tensor handle.
struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient is accumulated or zeroed
  bool requires_grad = false;
  bool is_leaf = true;
  std::size_t grad_accumulations = 0;

  void accumulate(std::span<const double> g);
  void accumulate_at(std::size_t i, double g);
  void ensure_grad();
};

/**
 * Shared handle to a dense row-major array of doubles.
 *
 * Copies alias the same storage, the same way parameters are shared between
 * the networks that read them. Rank 0 is a scalar, rank 2 is (rows, cols).
 */
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);
  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> values);
  /// Leaf that accumulates gradients.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const { return node_->value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  double item() const;
  double at(std::size_t i) const { return node_->value.at(i); }
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  bool is_leaf() const noexcept { return node_->is_leaf; }
  bool has_grad() const noexcept { return node_ && !node_->grad.empty(); }
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();
  void clear_grad();
  std::size_t grad_accumulations() const noexcept { return node_->grad_accumulations; }

  /// Same values, cut from the tape.
  Tensor detach() const;
  Tensor clone() const;

  TensorNode& node() const { return *node_; }
  const std::shared_ptr<TensorNode>& node_ptr() const { return node_; }

  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<TensorNode> node_;
};

void check_finite(std::span<const double> values, const char* where);

}  // namespace vrd::ad
