#include "slt/tensor.hpp"

#include <numeric>
#include <sstream>
#include <unordered_set>

namespace slt {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::span<double> TensorImpl::grad_buffer() {
  if (grad.empty()) grad.assign(data->size(), 0.0);
  return grad;
}

static std::shared_ptr<TensorImpl> new_impl(const Shape& shape, std::vector<double> values,
                                            bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
  }
  if (values.size() != shape_numel(shape)) {
    throw ShapeError("tensor data length " + std::to_string(values.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->data = std::make_shared<std::vector<double>>(std::move(values));
  impl->requires_grad = requires_grad;
  return impl;
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  return full(shape, 0.0, requires_grad);
}

Tensor Tensor::full(const Shape& shape, double value, bool requires_grad) {
  return Tensor(new_impl(shape, std::vector<double>(shape_numel(shape), value), requires_grad));
}

Tensor Tensor::from(const Shape& shape, std::vector<double> values, bool requires_grad) {
  return Tensor(new_impl(shape, std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(new_impl({1}, {value}, requires_grad));
}

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_str(impl_->shape));
  }
  return impl_->shape[axis];
}

std::size_t Tensor::numel() const { return impl_->data->size(); }

std::span<const double> Tensor::data() const { return *impl_->data; }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
  return (*impl_->data)[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const Shape& s = shape();
  if (index.size() != s.size()) throw ShapeError("index rank does not match " + shape_str(s));
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= s[axis]) throw IndexError("index out of range for " + shape_str(s));
    flat = flat * s[axis] + i;
    ++axis;
  }
  return (*impl_->data)[flat];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }
bool Tensor::has_grad() const { return !impl_->grad.empty(); }
std::span<const double> Tensor::grad() const { return impl_->grad; }

void Tensor::zero_grad() {
  impl_->grad.clear();
  impl_->backward_done = false;
}

std::span<double> Tensor::mutable_data() { return *impl_->data; }

Tensor Tensor::alias() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->requires_grad = impl_->requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::detach() const {
  return Tensor(new_impl(impl_->shape, *impl_->data, false));
}

bool Tensor::shares_storage(const Tensor& other) const {
  return impl_ && other.impl_ && impl_->data == other.impl_->data;
}

Tensor make_result(const Shape& shape, std::vector<double> values,
                   std::initializer_list<Tensor> parents, const char* op, BackwardFn backward) {
  return make_result(shape, std::move(values), std::vector<Tensor>(parents), op,
                     std::move(backward));
}

Tensor make_result(const Shape& shape, std::vector<double> values,
                   const std::vector<Tensor>& parents, const char* op, BackwardFn backward) {
  bool needs = false;
  if (g_grad_enabled) {
    for (const Tensor& p : parents) needs = needs || p.requires_grad();
  }
  auto impl = new_impl(shape, std::move(values), needs);
  if (needs) {
    auto node = std::make_shared<Node>();
    node->op = op;
    node->parents.reserve(parents.size());
    for (const Tensor& p : parents) node->parents.push_back(p.impl_ptr());
    node->backward = std::move(backward);
    impl->node = std::move(node);
  }
  return Tensor(std::move(impl));
}

std::span<double> parent_grad(const TensorImpl& out, std::size_t i) {
  TensorImpl& p = *out.node->parents.at(i);
  if (!p.requires_grad) return {};
  return p.grad_buffer();
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tape Tape::record(const Tensor& root) {
  Tape tape;
  std::unordered_set<TensorImpl*> visited;
  // Iterative post-order DFS; graphs from long sequences get deep.
  std::vector<std::pair<TensorImpl*, std::size_t>> stack;
  stack.emplace_back(root.impl(), 0);
  visited.insert(root.impl());
  while (!stack.empty()) {
    auto& [impl, next] = stack.back();
    const std::size_t n_parents = impl->node ? impl->node->parents.size() : 0;
    if (next < n_parents) {
      TensorImpl* parent = impl->node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      tape.order_.push_back(impl);
      stack.pop_back();
    }
  }
  return tape;
}

void backward(const Tensor& root) {
  if (!root.defined()) throw GraphError("backward on undefined tensor");
  if (root.numel() != 1) {
    throw ShapeError("backward requires a scalar root, got " + shape_str(root.shape()));
  }
  TensorImpl* r = root.impl();
  if (!r->requires_grad) throw GraphError("backward on a tensor that does not require grad");
  if (r->backward_done) throw GraphError("backward already called on this root");
  Tape tape = Tape::record(root);
  // Interior grads are per-pass; leaves accumulate.
  for (TensorImpl* t : tape.order()) {
    if (t->node) t->grad.clear();
  }
  r->grad_buffer()[0] += 1.0;
  const auto& order = tape.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* t = *it;
    if (!t->node || t->grad.empty()) continue;
    t->node->backward(*t);
  }
  r->backward_done = true;
}

}  // namespace slt
