#pragma once

// Named parameter storage and initializers shared by the model components.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "slt/tensor.hpp"

namespace slt {

// Ordered collection of named leaf tensors. Lookup is by name so the same
// forward code runs against the master set or a per-worker alias set.
class ParameterSet {
 public:
  const Tensor& add(const std::string& name, Tensor value);
  const Tensor& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return tensors_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::size_t total_numel() const;

  // Same storage, fresh grad buffers.
  ParameterSet aliased() const;
  // Marks every parameter whose name starts with `prefix` as (not) trainable.
  void set_requires_grad(std::string_view prefix, bool value);
  void zero_grad();

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Deterministic initializers: each parameter draws from its own stream keyed
// on (seed, name), so adding a component never shifts another's values.
Tensor init_uniform(const Shape& shape, double bound, std::uint64_t seed, std::string_view name);
// Glorot uniform over the last two dimensions' fan-in/fan-out.
Tensor init_xavier(const Shape& shape, std::uint64_t seed, std::string_view name);
Tensor init_normal(const Shape& shape, double stddev, std::uint64_t seed, std::string_view name);

// x[n, in] . W[in, out] + b[out], with parameters "<prefix>.w" and "<prefix>.b".
void add_linear(ParameterSet& params, const std::string& prefix, std::size_t in,
                std::size_t out, std::uint64_t seed);
Tensor linear(const ParameterSet& params, const std::string& prefix, const Tensor& x);

}  // namespace slt
