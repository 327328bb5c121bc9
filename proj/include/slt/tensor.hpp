#pragma once

// Dense row-major tensors with a dynamic reverse-mode autodiff graph.
//
// A Tensor is a cheap handle onto shared storage. Values are immutable once an
// operation has produced them; only the gradient buffer is written by
// backward(). Parameters are leaves whose storage the optimizer may update
// between steps through mutable_data().

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "slt/errors.hpp"

namespace slt {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorImpl;
class Tensor;

// Backward rule of one recorded operation. `out` is the produced tensor; its
// grad buffer is populated when the rule runs.
using BackwardFn = std::function<void(const TensorImpl& out)>;

struct Node {
  std::string op;
  std::vector<std::shared_ptr<TensorImpl>> parents;
  BackwardFn backward;
};

struct TensorImpl {
  Shape shape;
  std::shared_ptr<std::vector<double>> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool backward_done = false;
  std::shared_ptr<Node> node;  // null for leaves

  std::span<double> grad_buffer();  // allocates zero-filled on first use
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, double value, bool requires_grad = false);
  static Tensor from(const Shape& shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;

  std::span<const double> data() const;
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;  // empty span if none yet
  void zero_grad();

  // Write access to leaf storage, for optimizers and finite-difference
  // probing. Never call while a graph that reads this tensor is still live.
  std::span<double> mutable_data();

  // New leaf sharing this tensor's storage with a separate grad buffer.
  Tensor alias() const;
  // Copy of the values with no graph history.
  Tensor detach() const;
  bool shares_storage(const Tensor& other) const;

  TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<TensorImpl>& impl_ptr() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  friend Tensor make_result(const Shape&, std::vector<double>, std::initializer_list<Tensor>,
                            const char*, BackwardFn);
  friend Tensor make_result(const Shape&, std::vector<double>, const std::vector<Tensor>&,
                            const char*, BackwardFn);

  std::shared_ptr<TensorImpl> impl_;
};

// Builds an operation result. The backward rule is recorded only when grad
// mode is on and at least one parent requires grad.
Tensor make_result(const Shape& shape, std::vector<double> values,
                   std::initializer_list<Tensor> parents, const char* op, BackwardFn backward);
Tensor make_result(const Shape& shape, std::vector<double> values,
                   const std::vector<Tensor>& parents, const char* op, BackwardFn backward);

// Grad accumulation target of the i-th parent of `out`, or an empty span when
// that parent does not require grad.
std::span<double> parent_grad(const TensorImpl& out, std::size_t i);

bool grad_enabled();

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Topologically ordered record of the operations reachable from a root:
// every entry appears after all of its parents.
class Tape {
 public:
  static Tape record(const Tensor& root);
  const std::vector<TensorImpl*>& order() const { return order_; }
  std::size_t size() const { return order_.size(); }

 private:
  std::vector<TensorImpl*> order_;
};

// Reverse-mode accumulation from a scalar root. Leaf grads accumulate across
// calls on different roots; a second call on the same root throws GraphError.
void backward(const Tensor& root);

}  // namespace slt
