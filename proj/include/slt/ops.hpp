#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slt/rng.hpp"
#include "slt/tensor.hpp"

namespace slt {

// 2-D matrix product. Throws ShapeError naming both shapes on mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);
// 2-D transpose.
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, const Shape& shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length);

Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);
Tensor multiply(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
// x[..., d] + bias[d], broadcast over all leading positions.
Tensor add_rowwise(const Tensor& x, const Tensor& bias);

Tensor sum(const Tensor& a);  // -> [1]
// Mean over one axis; the axis is removed (a rank-1 input gives [1]).
Tensor mean(const Tensor& a, std::size_t axis);

Tensor relu(const Tensor& a);
// tanh approximation.
Tensor gelu(const Tensor& a);

Tensor softmax(const Tensor& x, std::size_t axis);
// Softmax over the last axis where entries with mask == 0 are excluded
// (probability exactly 0). A row with no valid entry yields all zeros.
Tensor masked_softmax(const Tensor& x, std::span<const std::uint8_t> mask);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// Inverted dropout: survivors are scaled by 1/(1-p) so inference is identity.
Tensor dropout(const Tensor& x, double p, bool train, Rng& rng);

// Row gather table[ids]; backward scatter-adds into the table grad.
Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids);

// u.v / max(|u||v|, eps) over flattened inputs of equal size.
Tensor cosine_similarity(const Tensor& u, const Tensor& v, double eps = 1e-8);

// Mean over non-ignored rows of -log softmax(logits)[target].
// Throws UndefinedError when every position is ignored.
Tensor cross_entropy_logits(const Tensor& logits, std::span<const std::size_t> targets,
                            std::size_t ignore_index);

}  // namespace slt
