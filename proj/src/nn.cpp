#include "slt/nn.hpp"

#include <cmath>

#include "slt/ops.hpp"
#include "slt/rng.hpp"

namespace slt {

const Tensor& ParameterSet::add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw ParameterError("duplicate parameter '" + name + "'");
  index_.emplace(name, tensors_.size());
  names_.push_back(name);
  tensors_.push_back(std::move(value));
  return tensors_.back();
}

const Tensor& ParameterSet::get(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ParameterError("unknown parameter '" + std::string(name) + "'");
  return tensors_[it->second];
}

bool ParameterSet::contains(std::string_view name) const { return index_.count(name) > 0; }

std::size_t ParameterSet::total_numel() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors_) n += t.numel();
  return n;
}

ParameterSet ParameterSet::aliased() const {
  ParameterSet out;
  out.names_ = names_;
  out.index_ = index_;
  out.tensors_.reserve(tensors_.size());
  for (const Tensor& t : tensors_) out.tensors_.push_back(t.alias());
  return out;
}

void ParameterSet::set_requires_grad(std::string_view prefix, bool value) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].compare(0, prefix.size(), prefix) != 0) continue;
    tensors_[i].impl()->requires_grad = value;
  }
}

void ParameterSet::zero_grad() {
  for (Tensor& t : tensors_) t.zero_grad();
}

Tensor init_uniform(const Shape& shape, double bound, std::uint64_t seed, std::string_view name) {
  Rng rng = derive_rng(seed, {hash_str(name)});
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = uniform(rng, -bound, bound);
  return Tensor::from(shape, std::move(v), true);
}

Tensor init_xavier(const Shape& shape, std::uint64_t seed, std::string_view name) {
  const std::size_t fan_out = shape.back();
  const std::size_t fan_in = shape_numel(shape) / fan_out;
  return init_uniform(shape, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)), seed, name);
}

Tensor init_normal(const Shape& shape, double stddev, std::uint64_t seed, std::string_view name) {
  Rng rng = derive_rng(seed, {hash_str(name)});
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = normal(rng, 0.0, stddev);
  return Tensor::from(shape, std::move(v), true);
}

void add_linear(ParameterSet& params, const std::string& prefix, std::size_t in,
                std::size_t out, std::uint64_t seed) {
  params.add(prefix + ".w", init_xavier({in, out}, seed, prefix + ".w"));
  params.add(prefix + ".b", Tensor::zeros({out}, true));
}

Tensor linear(const ParameterSet& params, const std::string& prefix, const Tensor& x) {
  return add_rowwise(matmul(x, params.get(prefix + ".w")), params.get(prefix + ".b"));
}

}  // namespace slt
