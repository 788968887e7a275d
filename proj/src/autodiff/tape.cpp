#include "vrd/autodiff/tape.hpp"

namespace vrd::ad {

namespace {
thread_local Tape* g_active = nullptr;
}

Tape::~Tape() {
  if (g_active == this) g_active = nullptr;
}

Tape::Scope::Scope(Tape& tape) : previous_(g_active) { g_active = &tape; }
Tape::Scope::~Scope() { g_active = previous_; }

NoGradGuard::NoGradGuard() : previous_(g_active) { g_active = nullptr; }
NoGradGuard::~NoGradGuard() { g_active = previous_; }

Tape* Tape::active() noexcept { return g_active; }

void Tape::record(const char* op, std::vector<Tensor> inputs, Tensor output, BackwardFn fn) {
  output.node().requires_grad = true;
  output.node().is_leaf = false;
  entries_.push_back(Entry{op, std::move(inputs), std::move(output), std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
  if (entries_.empty()) throw std::logic_error("backward called with an empty tape");
  if (!loss.defined() || loss.numel() != 1 || !loss.shape().empty()) {
    throw ShapeError("backward requires a scalar loss");
  }
  bool found = false;
  for (auto& e : entries_) {
    e.output.node().grad.clear();
    if (e.output.node_ptr() == loss.node_ptr()) found = true;
  }
  if (!found) throw std::logic_error("loss was not recorded on this tape");

  loss.node().grad.assign(1, 1.0);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output.node().grad.empty()) continue;
    it->fn();
  }
}

void Tape::clear() { entries_.clear(); }

}  // namespace vrd::ad
