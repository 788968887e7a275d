#pragma once

#include <functional>
#include <vector>

#include "vrd/autodiff/tensor.hpp"

namespace vrd::ad {

/**
 * Ordered record of primitive operations.
 *
 * Operations record themselves into the tape that is active on the calling
 * thread (see Tape::Scope) whenever at least one input requires gradients.
 * With no active tape every op runs in inference mode and nothing is stored.
 * backward() replays the record in exact reverse order.
 */
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  /// Makes a tape the active one for the current thread for its lifetime.
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

  static Tape* active() noexcept;

  void record(const char* op, std::vector<Tensor> inputs, Tensor output, BackwardFn fn);

  /// Populates grad on every reachable tensor that requires gradients.
  /// Intermediate gradients are reset first, so leaf gradients accumulate
  /// exactly once per call. Callers zero leaf gradients between steps.
  void backward(const Tensor& loss);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  void clear();

  struct Entry {
    const char* op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn fn;
  };
  const std::vector<Entry>& entries() const noexcept { return entries_; }

 private:
  std::vector<Entry> entries_;
};

/// Disables recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Tape* previous_;
};

}  // namespace vrd::ad
