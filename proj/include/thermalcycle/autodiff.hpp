#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "thermalcycle/tensor.hpp"

namespace thermalcycle {

using NodeId = std::size_t;

class Tape;

/// A tensor value, optionally linked to a node on a Tape.
///
/// Untracked Vars are constants: operations whose operands are all constants
/// compute their value without recording anything.
class Var {
 public:
  Var() = default;

  static Var constant(Tensor value);

  const Tensor& value() const { return *value_; }
  /// Shared handle to the immutable value, for capture by backward rules.
  std::shared_ptr<const Tensor> shared_value() const { return value_; }
  const Shape& shape() const { return value_->shape(); }
  bool tracked() const { return node_.has_value(); }
  std::optional<NodeId> node() const { return node_; }
  Tape* tape() const { return tape_; }

  /// Same value, cut from the tape.
  Var detach() const { return Var(value_, nullptr, std::nullopt); }

 private:
  friend class Tape;
  Var(std::shared_ptr<const Tensor> value, Tape* tape, std::optional<NodeId> node)
      : value_(std::move(value)), tape_(tape), node_(node) {}

  std::shared_ptr<const Tensor> value_;
  Tape* tape_ = nullptr;
  std::optional<NodeId> node_;
};

/// Receives input gradients from a node's backward rule.
class GradSink {
 public:
  GradSink(std::vector<std::optional<Tensor>>& grads, const std::vector<std::optional<NodeId>>& inputs)
      : grads_(grads), inputs_(inputs) {}

  /// True when operand `i` is tracked, i.e. its gradient is consumed.
  bool wants(std::size_t i) const { return inputs_.at(i).has_value(); }
  /// Adds `grad` to operand `i`'s accumulated gradient; ignored for constants.
  void accumulate(std::size_t i, Tensor grad);

 private:
  std::vector<std::optional<Tensor>>& grads_;
  const std::vector<std::optional<NodeId>>& inputs_;
};

using BackwardFn = std::function<void(const Tensor& grad_out, GradSink& sink)>;

/// Gradients of the leaves reachable from a loss.
class Gradients {
 public:
  /// Gradient for a leaf Var; zero-filled when the leaf was not reached.
  Tensor of(const Var& leaf) const;
  bool reached(const Var& leaf) const;
  const std::unordered_map<NodeId, Tensor>& by_node() const { return grads_; }

 private:
  friend class Tape;
  std::unordered_map<NodeId, Tensor> grads_;
};

/// Define-by-run record of differentiable operations.
///
/// Nodes are appended in execution order, so every node's inputs precede it.
/// Single-threaded; build a fresh tape per iteration.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A differentiable input (parameter or probe).
  Var leaf(Tensor value);

  /// Records an operation over `operands`. Untracked operands are stored as
  /// absent inputs. Returns a constant when no operand is tracked.
  Var record(const char* kind, Tensor value, const std::vector<const Var*>& operands, BackwardFn backward);

  /// Reverse sweep from a scalar loss. Gradients sum across fan-out.
  Gradients backward(const Var& loss) const;

  std::size_t size() const { return nodes_.size(); }
  const char* kind(NodeId id) const { return nodes_.at(id).kind; }
  const std::vector<std::optional<NodeId>>& inputs(NodeId id) const { return nodes_.at(id).inputs; }

 private:
  struct Node {
    const char* kind;
    std::vector<std::optional<NodeId>> inputs;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

/// Finds the tape shared by all tracked operands (nullptr if none).
/// Throws when tracked operands live on different tapes.
Tape* shared_tape(const std::vector<const Var*>& operands);

// ---------------------------------------------------------------------------
// Elementwise and reduction operations
// ---------------------------------------------------------------------------

enum class EwiseKind { add, sub, mul };

Var ewise(EwiseKind kind, const Var& a, const Var& b);
inline Var add(const Var& a, const Var& b) { return ewise(EwiseKind::add, a, b); }
inline Var sub(const Var& a, const Var& b) { return ewise(EwiseKind::sub, a, b); }
inline Var mul(const Var& a, const Var& b) { return ewise(EwiseKind::mul, a, b); }

/// Unary maps. `softplus` is log(1 + e^x), used by the log-form GAN loss.
struct UnaryKind {
  enum class Tag { neg, square, abs, scale, softplus };
  Tag tag;
  float factor = 1.0f;

  static UnaryKind neg() { return {Tag::neg}; }
  static UnaryKind square() { return {Tag::square}; }
  static UnaryKind abs() { return {Tag::abs}; }
  static UnaryKind scale(float c) { return {Tag::scale, c}; }
  static UnaryKind softplus() { return {Tag::softplus}; }
};

Var map_unary(UnaryKind kind, const Var& a);
inline Var neg(const Var& a) { return map_unary(UnaryKind::neg(), a); }
inline Var square(const Var& a) { return map_unary(UnaryKind::square(), a); }
inline Var abs(const Var& a) { return map_unary(UnaryKind::abs(), a); }
inline Var scale(const Var& a, float c) { return map_unary(UnaryKind::scale(c), a); }
inline Var softplus(const Var& a) { return map_unary(UnaryKind::softplus(), a); }

/// Mean over every element; result has shape 1x1x1x1.
Var reduce_mean(const Var& a);

// ---------------------------------------------------------------------------
// Finite-difference verification
// ---------------------------------------------------------------------------

using ScalarFn = std::function<Var(const Var&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  float analytic = 0.0f;
  float numeric = 0.0f;
};

/// Compares reverse-mode gradients of `f` at `x` with central differences
/// (f(x + eps e_i) - f(x - eps e_i)) / (2 eps). Relative error per coordinate
/// uses the denominator max(|analytic|, |numeric|, 1e-8).
///
/// `coords` restricts the comparison to the given flat indices (all when empty).
GradCheckResult grad_check(const ScalarFn& f, const Tensor& x, float eps,
                           const std::vector<std::size_t>& coords = {});

}  // namespace thermalcycle
