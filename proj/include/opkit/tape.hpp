#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "opkit/tensor.hpp"

namespace opkit {

/// Gradients of a backward pass, keyed by leaf storage identity.
class GradMap {
 public:
  bool contains(const Tensor& leaf) const {
    return m_.find(leaf.id()) != m_.end();
  }
  /// Gradient of the root w.r.t. `leaf`; zeros of the leaf's shape when the
  /// leaf was not reached.
  Tensor grad(const Tensor& leaf) const;
  std::size_t size() const { return m_.size(); }

  void insert(const void* key, Tensor g) { m_[key] = std::move(g); }

 private:
  std::unordered_map<const void*, Tensor> m_;
};

/// Reverse-mode differentiation tape.
///
/// Nodes are appended in execution order, so input ids always precede output
/// ids. A tape records one forward pass; backward() traverses it once in
/// reverse. Confine a tape to a single thread.
class Tape {
 public:
  using BackFn = std::function<void(const Tensor& grad_out, Tape& tape)>;

  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Activates a tape for the enclosing scope.
  class Scope {
   public:
    explicit Scope(Tape& t);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* prev_;
  };

  static Tape* active();

  bool recording() const { return !in_backward_; }
  std::uint64_t id() const { return id_; }
  std::size_t size() const { return nodes_.size(); }

  /// Node id for a differentiable input: an op output keeps its node, a leaf
  /// is registered on first use.
  std::int64_t input_id(const Tensor& t);

  std::int64_t record(BackFn back);

  /// Stamps an op output with its node id on this tape.
  void tag(Tensor& t, std::int64_t node) const;

  /// True when `t` feeds differentiation on this tape: a leaf marked
  /// requires_grad, or the output of an op recorded here.
  bool tracks(const Tensor& t) const;

  /// Accumulates a gradient contribution for node `id` during backward.
  void accumulate(std::int64_t id, Tensor g);

  /// Gradients of a real scalar root w.r.t. every reachable leaf that
  /// requires grad. The tape stays intact; reset() clears it for reuse.
  GradMap backward(const Tensor& root);

  void reset();

 private:
  struct Node {
    BackFn back;                              // null for leaves
    const detail::Storage* leaf = nullptr;    // set for leaves
    Shape leaf_shape;
    ElemKind leaf_kind = ElemKind::Real64;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const detail::Storage*, std::int64_t> leaf_ids_;
  std::vector<Tensor> grads_;
  bool in_backward_ = false;
  std::uint64_t id_;
};

}  // namespace opkit
