#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slt/nn.hpp"
#include "slt/rng.hpp"
#include "slt/tensor.hpp"

namespace slt {

// Training-mode switch and dropout stream for one forward pass.
struct ForwardContext {
  bool train = false;
  Rng* rng = nullptr;
  double dropout = 0.0;

  Tensor apply_dropout(const Tensor& x) const;
};

struct AttentionWeights {
  Tensor wq, wk, wv, wo;  // [d_q, h*d], [d_kv, h*d], [d_kv, h*d], [h*d, d_out]
  Tensor bq, bk, bv, bo;  // optional; undefined means no bias

  // Reads "<prefix>.{q,k,v,o}.{w,b}".
  static AttentionWeights from(const ParameterSet& params, const std::string& prefix);
};

// Registers biased q/k/v/o projections under `prefix`.
void add_attention(ParameterSet& params, const std::string& prefix, std::size_t d_query,
                   std::size_t d_kv, std::size_t d_inner, std::size_t d_out, std::uint64_t seed);

// Multi-head scaled dot-product attention. `mask` is empty (all visible) or
// has Lq * Lk entries where 0 hides key k from query q. If `probs` is given,
// it receives each head's [Lq, Lk] attention matrix.
Tensor multi_head_attention(const Tensor& query, const Tensor& keys, const AttentionWeights& w,
                            std::size_t heads, std::span<const std::uint8_t> mask,
                            std::vector<Tensor>* probs = nullptr);

// Lq x Lk mask hiding invalid keys.
std::vector<std::uint8_t> key_padding_mask(std::size_t queries,
                                           std::span<const std::uint8_t> key_valid);
// Lower-triangular L x L mask.
std::vector<std::uint8_t> causal_mask(std::size_t length);

}  // namespace slt
