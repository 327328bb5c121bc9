#include "slt/attention.hpp"

#include <cmath>

#include "slt/ops.hpp"

namespace slt {

Tensor ForwardContext::apply_dropout(const Tensor& x) const {
  if (!train || dropout == 0.0) return x;
  if (!rng) throw ParameterError("training-mode forward needs a dropout generator");
  return slt::dropout(x, dropout, true, *rng);
}

AttentionWeights AttentionWeights::from(const ParameterSet& params, const std::string& prefix) {
  AttentionWeights w;
  w.wq = params.get(prefix + ".q.w");
  w.wk = params.get(prefix + ".k.w");
  w.wv = params.get(prefix + ".v.w");
  w.wo = params.get(prefix + ".o.w");
  w.bq = params.get(prefix + ".q.b");
  w.bk = params.get(prefix + ".k.b");
  w.bv = params.get(prefix + ".v.b");
  w.bo = params.get(prefix + ".o.b");
  return w;
}

void add_attention(ParameterSet& params, const std::string& prefix, std::size_t d_query,
                   std::size_t d_kv, std::size_t d_inner, std::size_t d_out, std::uint64_t seed) {
  add_linear(params, prefix + ".q", d_query, d_inner, seed);
  add_linear(params, prefix + ".k", d_kv, d_inner, seed);
  add_linear(params, prefix + ".v", d_kv, d_inner, seed);
  add_linear(params, prefix + ".o", d_inner, d_out, seed);
}

namespace {

Tensor project(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor y = matmul(x, w);
  return b.defined() ? add_rowwise(y, b) : y;
}

}  // namespace

Tensor multi_head_attention(const Tensor& query, const Tensor& keys, const AttentionWeights& w,
                            std::size_t heads, std::span<const std::uint8_t> mask,
                            std::vector<Tensor>* probs) {
  const std::size_t inner = w.wq.dim(1);
  if (heads == 0 || inner % heads != 0) {
    throw ParameterError("attention width " + std::to_string(inner) +
                         " is not divisible by " + std::to_string(heads) + " heads");
  }
  if (w.wk.dim(1) != inner || w.wv.dim(1) != inner || w.wo.dim(0) != inner) {
    throw ShapeError("attention projections disagree on inner width");
  }
  const std::size_t lq = query.dim(0), lk = keys.dim(0);
  if (!mask.empty() && mask.size() != lq * lk) {
    throw ShapeError("attention mask has " + std::to_string(mask.size()) + " entries, expected " +
                     std::to_string(lq) + "x" + std::to_string(lk));
  }
  const std::size_t dh = inner / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor q = project(query, w.wq, w.bq);
  Tensor k = project(keys, w.wk, w.bk);
  Tensor v = project(keys, w.wv, w.bv);
  std::vector<Tensor> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor qh = heads == 1 ? q : slice(q, 1, h * dh, dh);
    Tensor kh = heads == 1 ? k : slice(k, 1, h * dh, dh);
    Tensor vh = heads == 1 ? v : slice(v, 1, h * dh, dh);
    Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    Tensor p = mask.empty() ? softmax(scores, 1) : masked_softmax(scores, mask);
    if (probs) probs->push_back(p);
    outs.push_back(matmul(p, vh));
  }
  Tensor joined = heads == 1 ? outs[0] : concat(outs, 1);
  return project(joined, w.wo, w.bo);
}

std::vector<std::uint8_t> key_padding_mask(std::size_t queries,
                                           std::span<const std::uint8_t> key_valid) {
  std::vector<std::uint8_t> m(queries * key_valid.size());
  for (std::size_t q = 0; q < queries; ++q) {
    for (std::size_t k = 0; k < key_valid.size(); ++k) m[q * key_valid.size() + k] = key_valid[k];
  }
  return m;
}

std::vector<std::uint8_t> causal_mask(std::size_t length) {
  std::vector<std::uint8_t> m(length * length, 0);
  for (std::size_t q = 0; q < length; ++q) {
    for (std::size_t k = 0; k <= q; ++k) m[q * length + k] = 1;
  }
  return m;
}

}  // namespace slt
