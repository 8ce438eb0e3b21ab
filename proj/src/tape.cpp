#include "opkit/tape.hpp"

#include <atomic>
#include <stdexcept>

#include "opkit/kernels.hpp"

namespace opkit {

namespace {

thread_local Tape* g_active = nullptr;

std::uint64_t next_tape_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

}  // namespace

Tensor GradMap::grad(const Tensor& leaf) const {
  auto it = m_.find(leaf.id());
  if (it != m_.end()) return it->second;
  return Tensor::zeros(leaf.shape(), leaf.kind());
}

Tape::Tape() : id_(next_tape_id()) {}

Tape::~Tape() = default;

Tape::Scope::Scope(Tape& t) : prev_(g_active) { g_active = &t; }

Tape::Scope::~Scope() { g_active = prev_; }

Tape* Tape::active() { return g_active; }

std::int64_t Tape::input_id(const Tensor& t) {
  if (t.tape_id() == id_ && t.node() >= 0) return t.node();
  const auto* key = static_cast<const detail::Storage*>(t.id());
  auto it = leaf_ids_.find(key);
  if (it != leaf_ids_.end()) return it->second;
  Node n;
  n.leaf = key;
  n.leaf_shape = t.shape();
  n.leaf_kind = t.kind();
  const auto id = static_cast<std::int64_t>(nodes_.size());
  nodes_.push_back(std::move(n));
  leaf_ids_.emplace(key, id);
  return id;
}

std::int64_t Tape::record(BackFn back) {
  Node n;
  n.back = std::move(back);
  const auto id = static_cast<std::int64_t>(nodes_.size());
  nodes_.push_back(std::move(n));
  return id;
}

void Tape::tag(Tensor& t, std::int64_t node) const {
  t.node_ = node;
  t.tape_id_ = id_;
}

bool Tape::tracks(const Tensor& t) const {
  if (t.requires_grad()) return true;
  return t.tape_id() == id_ && t.node() >= 0;
}

void Tape::accumulate(std::int64_t id, Tensor g) {
  if (id < 0 || id >= static_cast<std::int64_t>(nodes_.size()))
    throw std::logic_error("gradient accumulation for unknown tape node");
  auto& slot = grads_[static_cast<std::size_t>(id)];
  if (!slot.defined())
    slot = std::move(g);
  else
    slot = kernels::ewise(kernels::BinOp::Add, slot, g);
}

GradMap Tape::backward(const Tensor& root) {
  check_arg(root.defined(), "backward root is undefined");
  check_arg(root.is_real() && root.numel() == 1,
            "backward requires a real scalar root");
  GradMap out;
  if (root.tape_id() != id_ || root.node() < 0) return out;

  grads_.assign(nodes_.size(), Tensor{});
  grads_[static_cast<std::size_t>(root.node())] =
      Tensor::full(root.shape(), 1.0);

  in_backward_ = true;
  try {
    for (std::int64_t id = root.node(); id >= 0; --id) {
      const auto& g = grads_[static_cast<std::size_t>(id)];
      if (!g.defined()) continue;
      const Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.back) n.back(g, *this);
    }
  } catch (...) {
    in_backward_ = false;
    grads_.clear();
    throw;
  }
  in_backward_ = false;

  for (const auto& [key, id] : leaf_ids_) {
    auto& g = grads_[static_cast<std::size_t>(id)];
    if (g.defined()) out.insert(key, std::move(g));
  }
  grads_.clear();
  return out;
}

void Tape::reset() {
  nodes_.clear();
  leaf_ids_.clear();
  grads_.clear();
}

}  // namespace opkit
