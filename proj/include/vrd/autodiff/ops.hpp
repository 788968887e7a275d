#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vrd/autodiff/tensor.hpp"

// Differentiable primitives. Shapes must match exactly; operations that
// combine a matrix with a row or a scalar say so in their name.
namespace vrd::ad {

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

/// a (r x c) times the rank-0 tensor s.
Tensor mul_scalar(const Tensor& a, const Tensor& s);
/// a (r x c) divided by the rank-0 tensor s.
Tensor div_scalar(const Tensor& a, const Tensor& s);

/// Adds row vector b (1 x c) to every row of x (r x c).
Tensor add_row(const Tensor& x, const Tensor& b);
/// Multiplies row i of x by the constant weights[i].
Tensor scale_rows(const Tensor& x, std::span<const double> weights);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);

/// Rows of x picked by index; indices may repeat.
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index);
/// Inverse placement: row i of x lands in row index[i] of an n_rows output, other rows zero.
Tensor scatter_rows(const Tensor& x, std::span<const std::size_t> index, std::size_t n_rows);
/// Repeats a 1 x c row n times.
Tensor tile_rows(const Tensor& row, std::size_t n);

// Reductions.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor max(const Tensor& a);
/// Column-wise maximum over rows: (r x c) -> (1 x c).
Tensor max_rows(const Tensor& a);
/// Column-wise maximum within each segment of rows: (r x c) -> (n_segments x c).
Tensor segment_max(const Tensor& a, std::span<const std::size_t> segment, std::size_t n_segments);
Tensor dot(const Tensor& a, const Tensor& b);
Tensor l2_norm(const Tensor& a);
/// max of two scalars; the gradient goes to the larger one (to a on ties).
Tensor scalar_max(const Tensor& a, const Tensor& b);

// Pointwise nonlinearities.
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor sin(const Tensor& a);
/// Wraps angles into (-pi, pi]; gradient is the identity.
Tensor wrap_angle(const Tensor& a);
/// Clamps into [lo, hi]; gradient is zero where the bound is active.
Tensor clamp(const Tensor& a, double lo, double hi);
/// Elementwise smooth L1 with unit knee: 0.5 d^2 for |d| < 1, |d| - 0.5 otherwise.
Tensor smooth_l1(const Tensor& d);

/// Row-wise softmax of a rank 1 or rank 2 tensor.
Tensor softmax(const Tensor& a);
Tensor log_softmax(const Tensor& a);

}  // namespace vrd::ad
