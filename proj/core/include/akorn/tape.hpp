#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "akorn/tensor.hpp"

namespace akorn {

class Tape;

// Handle to a tensor in a computation. A Var without a tape is a constant:
// ops on constants just compute values and record nothing.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value) : val_(std::make_shared<Tensor>(std::move(value))) {}

  const Tensor& value() const { return *val_; }
  const Shape& shape() const { return val_->shape(); }
  bool defined() const { return val_ != nullptr; }
  bool on_tape() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int32_t id() const { return id_; }

 private:
  friend class Tape;
  std::shared_ptr<const Tensor> val_;
  Tape* tape_ = nullptr;
  int32_t id_ = -1;
};

// Learnable tensor with a persistent gradient buffer. backward() adds into
// grad; call zero_grad() between optimizer steps.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(0.0); }
};

using GradSink = std::unordered_map<const Param*, Tensor>;

// Append-only record of forward ops. Nodes are created in topological order
// (every input of a node precedes it); backward() visits them in strict
// reverse creation order, so gradient flow is deterministic.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // requires_grad=false returns an off-tape constant
  Var leaf(Tensor value, bool requires_grad = true);

  // leaf bound to p; repeated calls for the same Param reuse one node
  Var use(Param& p);

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients for every node.
  // Bound Param leaves are flushed into Param::grad, or into *sink when
  // given. loss must be a scalar living on this tape. Calling backward a
  // second time without reset() throws.
  void backward(const Var& loss, GradSink* sink = nullptr);

  // gradient of the last backward() pass w.r.t. v (zeros if v unreached)
  const Tensor& grad(const Var& v);

  size_t size() const { return nodes_.size(); }
  void reset();

  // op plumbing: record a node whose backward closure routes the output
  // gradient to the inputs via accumulate()
  Var emit(Tensor value, std::function<void(Tape&, const Tensor&)> backward);
  void accumulate(const Var& input, const Tensor& contribution);

 private:
  struct Node {
    std::shared_ptr<const Tensor> value;
    Tensor grad;
    bool has_grad = false;
    std::function<void(Tape&, const Tensor&)> backward;
  };

  std::vector<Node> nodes_;
  std::vector<std::pair<int32_t, Param*>> bound_;
  std::unordered_map<const Param*, int32_t> param_ids_;
  bool ran_backward_ = false;
};

// parameter as a graph input when training, as a plain constant otherwise
inline Var bind(Tape* t, Param& p) { return t ? t->use(p) : Var(p.value); }

}  // namespace akorn
