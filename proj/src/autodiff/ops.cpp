#include "vrd/autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vrd/autodiff/tape.hpp"

namespace vrd::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

Tensor make_out(Shape shape, std::vector<double> values, const char* op) {
  check_finite(values, op);
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

template <class Fn>
void maybe_record(const char* op, std::vector<Tensor> inputs, const Tensor& out, Fn&& fn) {
  Tape* tape = Tape::active();
  if (!tape) return;
  bool any = false;
  for (const auto& t : inputs) any = any || t.requires_grad();
  if (!any) return;
  tape->record(op, std::move(inputs), out, std::forward<Fn>(fn));
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2) throw ShapeError(std::string(op) + ": expected rank 2, got " + to_string(a.shape()));
}

void require_scalar(const Tensor& a, const char* op) {
  if (!a.shape().empty()) throw ShapeError(std::string(op) + ": expected a scalar, got " + to_string(a.shape()));
}

// Elementwise unary op with derivative expressed through input x and output y.
template <class F, class D>
Tensor unary(const Tensor& a, const char* op, F f, D dfdx) {
  std::vector<double> v(a.numel());
  auto av = a.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(av[i]);
  Tensor out = make_out(a.shape(), std::move(v), op);
  maybe_record(op, {a}, out, [an = &a.node(), on = &out.node(), dfdx]() {
    if (!an->requires_grad) return;
    std::vector<double> g(an->value.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = on->grad[i] * dfdx(an->value[i], on->value[i]);
    an->accumulate(g);
  });
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] + b.values()[i];
  Tensor out = make_out(a.shape(), std::move(v), "add");
  maybe_record("add", {a, b}, out, [an = &a.node(), bn = &b.node(), on = &out.node()]() {
    if (an->requires_grad) an->accumulate(on->grad);
    if (bn->requires_grad) bn->accumulate(on->grad);
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
  Tensor out = make_out(a.shape(), std::move(v), "sub");
  maybe_record("sub", {a, b}, out, [an = &a.node(), bn = &b.node(), on = &out.node()]() {
    if (an->requires_grad) an->accumulate(on->grad);
    if (bn->requires_grad) {
      std::vector<double> g(on->grad.size());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = -on->grad[i];
      bn->accumulate(g);
    }
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * b.values()[i];
  Tensor out = make_out(a.shape(), std::move(v), "mul");
  maybe_record("mul", {a, b}, out, [an = &a.node(), bn = &b.node(), on = &out.node()]() {
    const std::size_t n = on->grad.size();
    if (an->requires_grad) {
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i) g[i] = on->grad[i] * bn->value[i];
      an->accumulate(g);
    }
    if (bn->requires_grad) {
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i) g[i] = on->grad[i] * an->value[i];
      bn->accumulate(g);
    }
  });
  return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same(a, b, "div");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] / b.values()[i];
  Tensor out = make_out(a.shape(), std::move(v), "div");
  maybe_record("div", {a, b}, out, [an = &a.node(), bn = &b.node(), on = &out.node()]() {
    const std::size_t n = on->grad.size();
    if (an->requires_grad) {
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i) g[i] = on->grad[i] / bn->value[i];
      an->accumulate(g);
    }
    if (bn->requires_grad) {
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i) g[i] = -on->grad[i] * on->value[i] / bn->value[i];
      bn->accumulate(g);
    }
  });
  return out;
}

Tensor scale(const Tensor& a, double c) {
  return unary(a, "scale", [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Tensor add_scalar(const Tensor& a, double c) {
  return unary(a, "add_scalar", [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, const Tensor& s) {
  require_scalar(s, "mul_scalar");
  const double k = s.item();
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * k;
  Tensor out = make_out(a.shape(), std::move(v), "mul_scalar");
  maybe_record("mul_scalar", {a, s}, out, [an = &a.node(), sn = &s.node(), on = &out.node()]() {
    const double k = sn->value[0];
    if (an->requires_grad) {
      std::vector<double> g(on->grad.size());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = on->grad[i] * k;
      an->accumulate(g);
    }
    if (sn->requires_grad) {
      double acc = 0.0;
      for (std::size_t i = 0; i < on->grad.size(); ++i) acc += on->grad[i] * an->value[i];
      sn->accumulate(std::span<const double>(&acc, 1));
    }
  });
  return out;
}

Tensor div_scalar(const Tensor& a, const Tensor& s) {
  require_scalar(s, "div_scalar");
  const double k = s.item();
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] / k;
  Tensor out = make_out(a.shape(), std::move(v), "div_scalar");
  maybe_record("div_scalar", {a, s}, out, [an = &a.node(), sn = &s.node(), on = &out.node()]() {
    const double k = sn->value[0];
    if (an->requires_grad) {
      std::vector<double> g(on->grad.size());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = on->grad[i] / k;
      an->accumulate(g);
    }
    if (sn->requires_grad) {
      double acc = 0.0;
      for (std::size_t i = 0; i < on->grad.size(); ++i) acc -= on->grad[i] * on->value[i] / k;
      sn->accumulate(std::span<const double>(&acc, 1));
    }
  });
  return out;
}

Tensor add_row(const Tensor& x, const Tensor& b) {
  require_rank2(x, "add_row");
  if (b.shape() != Shape{1, x.cols()}) {
    throw ShapeError("add_row: bias " + to_string(b.shape()) + " does not fit " + to_string(x.shape()));
  }
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<double> v(x.numel());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) v[i * c + j] = x.values()[i * c + j] + b.values()[j];
  Tensor out = make_out(x.shape(), std::move(v), "add_row");
  maybe_record("add_row", {x, b}, out, [xn = &x.node(), bn = &b.node(), on = &out.node(), r, c]() {
    if (xn->requires_grad) xn->accumulate(on->grad);
    if (bn->requires_grad) {
      std::vector<double> g(c, 0.0);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) g[j] += on->grad[i * c + j];
      bn->accumulate(g);
    }
  });
  return out;
}

Tensor scale_rows(const Tensor& x, std::span<const double> weights) {
  require_rank2(x, "scale_rows");
  if (weights.size() != x.rows()) throw ShapeError("scale_rows: one weight per row required");
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<double> w(weights.begin(), weights.end());
  std::vector<double> v(x.numel());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) v[i * c + j] = x.values()[i * c + j] * w[i];
  Tensor out = make_out(x.shape(), std::move(v), "scale_rows");
  maybe_record("scale_rows", {x}, out, [xn = &x.node(), on = &out.node(), w = std::move(w), c]() {
    if (!xn->requires_grad) return;
    std::vector<double> g(on->grad.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = on->grad[i] * w[i / c];
    xn->accumulate(g);
  });
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  const auto m = static_cast<Eigen::Index>(a.rows());
  const auto k = static_cast<Eigen::Index>(a.cols());
  const auto n = static_cast<Eigen::Index>(b.cols());
  std::vector<double> v(static_cast<std::size_t>(m * n));
  Map(v.data(), m, n).noalias() = MapC(a.values().data(), m, k) * MapC(b.values().data(), k, n);
  Tensor out = make_out({a.rows(), b.cols()}, std::move(v), "matmul");
  maybe_record("matmul", {a, b}, out, [an = &a.node(), bn = &b.node(), on = &out.node(), m, k, n]() {
    MapC go(on->grad.data(), m, n);
    if (an->requires_grad) {
      RowMat g = go * MapC(bn->value.data(), k, n).transpose();
      an->accumulate(std::span<const double>(g.data(), static_cast<std::size_t>(g.size())));
    }
    if (bn->requires_grad) {
      RowMat g = MapC(an->value.data(), m, k).transpose() * go;
      bn->accumulate(std::span<const double>(g.data(), static_cast<std::size_t>(g.size())));
    }
  });
  return out;
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) v[j * r + i] = a.values()[i * c + j];
  Tensor out = make_out({c, r}, std::move(v), "transpose");
  maybe_record("transpose", {a}, out, [an = &a.node(), on = &out.node(), r, c]() {
    if (!an->requires_grad) return;
    std::vector<double> g(r * c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] = on->grad[j * r + i];
    an->accumulate(g);
  });
  return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel_of(shape) != a.numel()) {
    throw ShapeError("reshape: " + to_string(a.shape()) + " -> " + to_string(shape));
  }
  std::vector<double> v(a.values().begin(), a.values().end());
  Tensor out = make_out(std::move(shape), std::move(v), "reshape");
  maybe_record("reshape", {a}, out, [an = &a.node(), on = &out.node()]() {
    if (an->requires_grad) an->accumulate(on->grad);
  });
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t r = parts.front().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.rows() != r) throw ShapeError("concat_cols: row counts differ");
    total += p.cols();
  }
  std::vector<double> v(r * total);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::size_t c = p.cols();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(p.values().data() + i * c, c, v.data() + i * total + off);
    off += c;
  }
  Tensor out = make_out({r, total}, std::move(v), "concat_cols");
  std::vector<TensorNode*> nodes;
  for (const auto& p : parts) nodes.push_back(&p.node());
  maybe_record("concat_cols", parts, out, [nodes, offsets, on = &out.node(), r, total]() {
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      auto* pn = nodes[k];
      if (!pn->requires_grad) continue;
      const std::size_t c = pn->shape[1];
      std::vector<double> g(r * c);
      for (std::size_t i = 0; i < r; ++i)
        std::copy_n(on->grad.data() + i * total + offsets[k], c, g.data() + i * c);
      pn->accumulate(g);
    }
  });
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t c = parts.front().cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank2(p, "concat_rows");
    if (p.cols() != c) throw ShapeError("concat_rows: column counts differ");
    total += p.rows();
  }
  std::vector<double> v;
  v.reserve(total * c);
  for (const auto& p : parts) v.insert(v.end(), p.values().begin(), p.values().end());
  Tensor out = make_out({total, c}, std::move(v), "concat_rows");
  std::vector<TensorNode*> nodes;
  for (const auto& p : parts) nodes.push_back(&p.node());
  maybe_record("concat_rows", parts, out, [nodes, on = &out.node()]() {
    std::size_t off = 0;
    for (auto* pn : nodes) {
      const std::size_t n = pn->value.size();
      if (pn->requires_grad) pn->accumulate(std::span<const double>(on->grad.data() + off, n));
      off += n;
    }
  });
  return out;
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice_cols");
  if (begin >= end || end > a.cols()) throw ShapeError("slice_cols: bad range");
  const std::size_t r = a.rows(), c = a.cols(), w = end - begin;
  std::vector<double> v(r * w);
  for (std::size_t i = 0; i < r; ++i) std::copy_n(a.values().data() + i * c + begin, w, v.data() + i * w);
  Tensor out = make_out({r, w}, std::move(v), "slice_cols");
  maybe_record("slice_cols", {a}, out, [an = &a.node(), on = &out.node(), r, c, w, begin]() {
    if (!an->requires_grad) return;
    std::vector<double> g(r * c, 0.0);
    for (std::size_t i = 0; i < r; ++i) std::copy_n(on->grad.data() + i * w, w, g.data() + i * c + begin);
    an->accumulate(g);
  });
  return out;
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice_rows");
  if (begin >= end || end > a.rows()) throw ShapeError("slice_rows: bad range");
  const std::size_t c = a.cols();
  std::vector<double> v(a.values().begin() + static_cast<std::ptrdiff_t>(begin * c),
                        a.values().begin() + static_cast<std::ptrdiff_t>(end * c));
  Tensor out = make_out({end - begin, c}, std::move(v), "slice_rows");
  maybe_record("slice_rows", {a}, out, [an = &a.node(), on = &out.node(), begin, c]() {
    if (!an->requires_grad) return;
    std::vector<double> g(an->value.size(), 0.0);
    std::copy(on->grad.begin(), on->grad.end(), g.begin() + static_cast<std::ptrdiff_t>(begin * c));
    an->accumulate(g);
  });
  return out;
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index) {
  require_rank2(x, "gather_rows");
  if (index.empty()) throw ShapeError("gather_rows: empty index");
  const std::size_t c = x.cols();
  std::vector<std::size_t> idx(index.begin(), index.end());
  std::vector<double> v(idx.size() * c);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= x.rows()) throw ShapeError("gather_rows: index out of range");
    std::copy_n(x.values().data() + idx[i] * c, c, v.data() + i * c);
  }
  Tensor out = make_out({idx.size(), c}, std::move(v), "gather_rows");
  maybe_record("gather_rows", {x}, out, [xn = &x.node(), on = &out.node(), idx = std::move(idx), c]() {
    if (!xn->requires_grad) return;
    std::vector<double> g(xn->value.size(), 0.0);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) g[idx[i] * c + j] += on->grad[i * c + j];
    xn->accumulate(g);
  });
  return out;
}

Tensor scatter_rows(const Tensor& x, std::span<const std::size_t> index, std::size_t n_rows) {
  require_rank2(x, "scatter_rows");
  if (index.size() != x.rows()) throw ShapeError("scatter_rows: one index per row required");
  const std::size_t c = x.cols();
  std::vector<std::size_t> idx(index.begin(), index.end());
  std::vector<bool> used(n_rows, false);
  std::vector<double> v(n_rows * c, 0.0);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= n_rows || used[idx[i]]) throw ShapeError("scatter_rows: index out of range or repeated");
    used[idx[i]] = true;
    std::copy_n(x.values().data() + i * c, c, v.data() + idx[i] * c);
  }
  Tensor out = make_out({n_rows, c}, std::move(v), "scatter_rows");
  maybe_record("scatter_rows", {x}, out, [xn = &x.node(), on = &out.node(), idx = std::move(idx), c]() {
    if (!xn->requires_grad) return;
    std::vector<double> g(xn->value.size());
    for (std::size_t i = 0; i < idx.size(); ++i) std::copy_n(on->grad.data() + idx[i] * c, c, g.data() + i * c);
    xn->accumulate(g);
  });
  return out;
}

Tensor tile_rows(const Tensor& row, std::size_t n) {
  require_rank2(row, "tile_rows");
  if (row.rows() != 1) throw ShapeError("tile_rows: expected a single row");
  const std::size_t c = row.cols();
  std::vector<double> v(n * c);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(row.values().data(), c, v.data() + i * c);
  Tensor out = make_out({n, c}, std::move(v), "tile_rows");
  maybe_record("tile_rows", {row}, out, [rn = &row.node(), on = &out.node(), n, c]() {
    if (!rn->requires_grad) return;
    std::vector<double> g(c, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) g[j] += on->grad[i * c + j];
    rn->accumulate(g);
  });
  return out;
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.values()) s += x;
  Tensor out = make_out({}, {s}, "sum");
  maybe_record("sum", {a}, out, [an = &a.node(), on = &out.node()]() {
    if (!an->requires_grad) return;
    std::vector<double> g(an->value.size(), on->grad[0]);
    an->accumulate(g);
  });
  return out;
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor max(const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("max of empty tensor");
  auto vals = a.values();
  const auto arg = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
  Tensor out = make_out({}, {vals[arg]}, "max");
  maybe_record("max", {a}, out, [an = &a.node(), on = &out.node(), arg]() {
    if (!an->requires_grad) return;
    std::vector<double> g(an->value.size(), 0.0);
    g[arg] = on->grad[0];
    an->accumulate(g);
  });
  return out;
}

Tensor max_rows(const Tensor& a) {
  require_rank2(a, "max_rows");
  std::vector<std::size_t> seg(a.rows(), 0);
  return segment_max(a, seg, 1);
}

Tensor segment_max(const Tensor& a, std::span<const std::size_t> segment, std::size_t n_segments) {
  require_rank2(a, "segment_max");
  if (segment.size() != a.rows()) throw ShapeError("segment_max: one segment id per row required");
  const std::size_t c = a.cols();
  constexpr auto kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> arg(n_segments * c, kNone);
  for (std::size_t i = 0; i < segment.size(); ++i) {
    const std::size_t s = segment[i];
    if (s >= n_segments) throw ShapeError("segment_max: segment id out of range");
    for (std::size_t j = 0; j < c; ++j) {
      auto& best = arg[s * c + j];
      if (best == kNone || a.values()[i * c + j] > a.values()[best * c + j]) best = i;
    }
  }
  std::vector<double> v(n_segments * c);
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (arg[k] == kNone) throw ShapeError("segment_max: empty segment");
    v[k] = a.values()[arg[k] * c + k % c];
  }
  Tensor out = make_out({n_segments, c}, std::move(v), "segment_max");
  maybe_record("segment_max", {a}, out, [an = &a.node(), on = &out.node(), arg = std::move(arg), c]() {
    if (!an->requires_grad) return;
    std::vector<double> g(an->value.size(), 0.0);
    for (std::size_t k = 0; k < arg.size(); ++k) g[arg[k] * c + k % c] += on->grad[k];
    an->accumulate(g);
  });
  return out;
}

Tensor dot(const Tensor& a, const Tensor& b) {
  require_same(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a.values()[i] * b.values()[i];
  Tensor out = make_out({}, {s}, "dot");
  maybe_record("dot", {a, b}, out, [an = &a.node(), bn = &b.node(), on = &out.node()]() {
    const double g0 = on->grad[0];
    const std::size_t n = an->value.size();
    if (an->requires_grad) {
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i) g[i] = g0 * bn->value[i];
      an->accumulate(g);
    }
    if (bn->requires_grad) {
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i) g[i] = g0 * an->value[i];
      bn->accumulate(g);
    }
  });
  return out;
}

Tensor l2_norm(const Tensor& a) {
  double s = 0.0;
  for (double x : a.values()) s += x * x;
  Tensor out = make_out({}, {std::sqrt(s)}, "l2_norm");
  maybe_record("l2_norm", {a}, out, [an = &a.node(), on = &out.node()]() {
    if (!an->requires_grad) return;
    const double norm = on->value[0];
    std::vector<double> g(an->value.size(), 0.0);
    // Subgradient zero at the origin.
    if (norm > 0.0) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = on->grad[0] * an->value[i] / norm;
    }
    an->accumulate(g);
  });
  return out;
}

Tensor scalar_max(const Tensor& a, const Tensor& b) {
  require_scalar(a, "scalar_max");
  require_scalar(b, "scalar_max");
  const bool take_a = a.item() >= b.item();
  Tensor out = make_out({}, {take_a ? a.item() : b.item()}, "scalar_max");
  maybe_record("scalar_max", {a, b}, out, [an = &a.node(), bn = &b.node(), on = &out.node(), take_a]() {
    auto* winner = take_a ? an : bn;
    if (winner->requires_grad) winner->accumulate(on->grad);
  });
  return out;
}

Tensor tanh(const Tensor& a) {
  return unary(a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary(a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor cos(const Tensor& a) {
  return unary(a, "cos", [](double x) { return std::cos(x); }, [](double x, double) { return -std::sin(x); });
}

Tensor sin(const Tensor& a) {
  return unary(a, "sin", [](double x) { return std::sin(x); }, [](double x, double) { return std::cos(x); });
}

Tensor wrap_angle(const Tensor& a) {
  return unary(
      a, "wrap_angle",
      [](double x) {
        double r = std::remainder(x, 2.0 * std::numbers::pi);
        if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
        return r;
      },
      [](double, double) { return 1.0; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary(
      a, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor smooth_l1(const Tensor& d) {
  return unary(
      d, "smooth_l1",
      [](double x) {
        const double ax = std::abs(x);
        return ax < 1.0 ? 0.5 * x * x : ax - 0.5;
      },
      [](double x, double) {
        if (std::abs(x) < 1.0) return x;
        return x > 0.0 ? 1.0 : -1.0;
      });
}

namespace {

std::pair<std::size_t, std::size_t> row_view(const Tensor& a, const char* op) {
  if (a.rank() == 1) return {1, a.shape()[0]};
  if (a.rank() == 2) return {a.rows(), a.cols()};
  throw ShapeError(std::string(op) + ": expected rank 1 or 2");
}

}  // namespace

Tensor softmax(const Tensor& a) {
  const auto [r, c] = row_view(a, "softmax");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = a.values().data() + i * c;
    const double m = *std::max_element(x, x + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (v[i * c + j] = std::exp(x[j] - m));
    for (std::size_t j = 0; j < c; ++j) v[i * c + j] /= z;
  }
  Tensor out = make_out(a.shape(), std::move(v), "softmax");
  maybe_record("softmax", {a}, out, [an = &a.node(), on = &out.node(), r = r, c = c]() {
    if (!an->requires_grad) return;
    std::vector<double> g(an->value.size());
    for (std::size_t i = 0; i < r; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j) s += on->grad[i * c + j] * on->value[i * c + j];
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] = on->value[i * c + j] * (on->grad[i * c + j] - s);
    }
    an->accumulate(g);
  });
  return out;
}

Tensor log_softmax(const Tensor& a) {
  const auto [r, c] = row_view(a, "log_softmax");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = a.values().data() + i * c;
    const double m = *std::max_element(x, x + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(x[j] - m);
    const double lz = m + std::log(z);
    for (std::size_t j = 0; j < c; ++j) v[i * c + j] = x[j] - lz;
  }
  Tensor out = make_out(a.shape(), std::move(v), "log_softmax");
  maybe_record("log_softmax", {a}, out, [an = &a.node(), on = &out.node(), r = r, c = c]() {
    if (!an->requires_grad) return;
    std::vector<double> g(an->value.size());
    for (std::size_t i = 0; i < r; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j) s += on->grad[i * c + j];
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] = on->grad[i * c + j] - std::exp(on->value[i * c + j]) * s;
    }
    an->accumulate(g);
  });
  return out;
}

}  // namespace vrd::ad
