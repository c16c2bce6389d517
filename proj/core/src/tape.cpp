#include "akorn/tape.hpp"

#include <stdexcept>

namespace akorn {

Var Tape::leaf(Tensor value, bool requires_grad) {
  if (!requires_grad) return Var(std::move(value));
  return emit(std::move(value), nullptr);
}

Var Tape::use(Param& p) {
  auto it = param_ids_.find(&p);
  if (it != param_ids_.end()) {
    Var v;
    v.val_ = nodes_[static_cast<size_t>(it->second)].value;
    v.tape_ = this;
    v.id_ = it->second;
    return v;
  }
  Var v = emit(p.value, nullptr);
  param_ids_.emplace(&p, v.id());
  bound_.emplace_back(v.id(), &p);
  return v;
}

Var Tape::emit(Tensor value, std::function<void(Tape&, const Tensor&)> backward) {
#ifndef NDEBUG
  if (!value.all_finite())
    throw std::runtime_error("non-finite value produced on tape at node " +
                             std::to_string(nodes_.size()));
#endif
  Node n;
  n.value = std::make_shared<Tensor>(std::move(value));
  n.backward = std::move(backward);
  Var v;
  v.val_ = n.value;
  v.tape_ = this;
  v.id_ = static_cast<int32_t>(nodes_.size());
  nodes_.push_back(std::move(n));
  return v;
}

void Tape::accumulate(const Var& input, const Tensor& contribution) {
  if (!input.on_tape()) return;  // constants take no gradient
  detail::require(input.tape() == this, "gradient routed to a different tape");
  Node& n = nodes_[static_cast<size_t>(input.id())];
  if (!n.has_grad) {
    n.grad = Tensor(n.value->shape());
    n.has_grad = true;
  }
  detail::require(contribution.numel() == n.grad.numel(),
                  "gradient shape mismatch: " + shape_str(contribution.shape()) +
                      " vs " + shape_str(n.grad.shape()));
  double* g = n.grad.data();
  const double* c = contribution.data();
  for (int64_t i = 0; i < n.grad.numel(); ++i) g[i] += c[i];
}

void Tape::backward(const Var& loss, GradSink* sink) {
  if (ran_backward_)
    throw std::logic_error("backward() already ran on this tape; call reset() first");
  detail::require(loss.on_tape() && loss.tape() == this,
                  "backward() needs a loss recorded on this tape");
  detail::require(loss.value().numel() == 1, "backward() needs a scalar loss");
  ran_backward_ = true;

  Node& l = nodes_[static_cast<size_t>(loss.id())];
  if (!l.has_grad) {
    l.grad = Tensor(l.value->shape());
    l.has_grad = true;
  }
  l.grad[0] += 1.0;

  for (int32_t id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.has_grad && n.backward) n.backward(*this, n.grad);
  }

  for (auto& [id, p] : bound_) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.has_grad) continue;
    if (sink) {
      auto [it, fresh] = sink->try_emplace(p, n.grad.shape());
      double* dst = it->second.data();
      const double* src = n.grad.data();
      for (int64_t i = 0; i < n.grad.numel(); ++i) dst[i] += src[i];
    } else {
      double* dst = p->grad.data();
      const double* src = n.grad.data();
      for (int64_t i = 0; i < n.grad.numel(); ++i) dst[i] += src[i];
    }
  }
}

const Tensor& Tape::grad(const Var& v) {
  detail::require(v.on_tape() && v.tape() == this, "grad() of a var not on this tape");
  Node& n = nodes_[static_cast<size_t>(v.id())];
  if (!n.has_grad) {
    n.grad = Tensor(n.value->shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::reset() {
  nodes_.clear();
  bound_.clear();
  param_ids_.clear();
  ran_backward_ = false;
}

}  // namespace akorn
