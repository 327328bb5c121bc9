#include "slt/ccm.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "slt/ops.hpp"

namespace slt {

void CcmConfig::validate() const {
  if (!(margin > 0.0)) throw ParameterError("triplet margin must be positive");
  if (!(weight >= 0.0)) throw ParameterError("triplet loss weight must be non-negative");
  if (heads == 0) throw ParameterError("concept mining needs at least one head");
}

BatchAnchorSet collect_batch_anchors(const std::vector<std::string>& translations,
                                     const AnchorVocab& vocab) {
  std::map<std::string_view, std::size_t> ids;
  for (std::size_t i = 0; i < vocab.words.size(); ++i) ids.emplace(vocab.words[i], i);
  std::map<std::size_t, std::set<std::size_t>> members;
  for (std::size_t n = 0; n < translations.size(); ++n) {
    for (const std::string& w : tokenize(translations[n])) {
      auto it = ids.find(w);
      if (it != ids.end()) members[it->second].insert(n);
    }
  }
  BatchAnchorSet out;
  out.samples = translations.size();
  for (const auto& [id, set] : members) {
    out.anchors.push_back(id);
    out.membership.emplace_back(set.begin(), set.end());
  }
  return out;
}

TripletDraw sample_triplets(const BatchAnchorSet& batch, Rng& rng) {
  TripletDraw draw;
  for (std::size_t m = 0; m < batch.size(); ++m) {
    const auto& pos = batch.membership[m];
    std::vector<std::size_t> neg;
    for (std::size_t n = 0, k = 0; n < batch.samples; ++n) {
      if (k < pos.size() && pos[k] == n) {
        ++k;
      } else {
        neg.push_back(n);
      }
    }
    if (pos.empty() || neg.empty()) {
      ++draw.skipped;
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick_pos(0, pos.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_neg(0, neg.size() - 1);
    const std::size_t p = pos[pick_pos(rng)];
    const std::size_t q = neg[pick_neg(rng)];
    draw.triplets.push_back({m, p, q});
  }
  return draw;
}

ConceptMiner::ConceptMiner(CcmConfig config, std::size_t d_ca, std::size_t d_visual)
    : config_(config), d_ca_(d_ca), d_visual_(d_visual) {
  config_.validate();
  if (d_ca == 0 || d_visual == 0) throw ParameterError("concept mining widths must be positive");
  head_dim_ = config_.head_dim ? config_.head_dim : d_ca / config_.heads;
  if (head_dim_ == 0) {
    throw ParameterError("anchor width " + std::to_string(d_ca) + " is too small for " +
                         std::to_string(config_.heads) + " heads");
  }
}

void ConceptMiner::init_params(ParameterSet& params, const EmbeddingInit& init,
                               std::uint64_t seed) const {
  if (init.dim != d_ca_) {
    throw ShapeError("anchor embeddings have width " + std::to_string(init.dim) + ", expected " +
                     std::to_string(d_ca_));
  }
  const std::size_t rows = init.oov_mask.size();
  if (rows == 0) throw ParameterError("anchor vocabulary is empty");
  params.add("ccm.anchors", Tensor::from({rows, d_ca_}, init.matrix, true));
  const std::size_t inner = config_.heads * head_dim_;
  params.add("ccm.attn.q.w", init_xavier({d_ca_, inner}, seed, "ccm.attn.q.w"));
  params.add("ccm.attn.k.w", init_xavier({d_visual_, inner}, seed, "ccm.attn.k.w"));
  params.add("ccm.attn.v.w", init_xavier({d_visual_, inner}, seed, "ccm.attn.v.w"));
  params.add("ccm.attn.o.w", init_xavier({inner, d_ca_}, seed, "ccm.attn.o.w"));
}

Tensor ConceptMiner::batch_queries(const ParameterSet& params, const BatchAnchorSet& batch) {
  return embedding_lookup(params.get("ccm.anchors"), batch.anchors);
}

Tensor ConceptMiner::anchor_query(const ParameterSet& params, const BatchAnchorSet& batch,
                                  const std::vector<EncodedFeatures>& encoded,
                                  std::vector<std::vector<Tensor>>* probs) const {
  if (batch.size() == 0) return Tensor();
  if (encoded.size() != batch.samples) {
    throw ShapeError("anchor_query: " + std::to_string(encoded.size()) +
                     " encoded samples for a batch of " + std::to_string(batch.samples));
  }
  AttentionWeights w;
  w.wq = params.get("ccm.attn.q.w");
  w.wk = params.get("ccm.attn.k.w");
  w.wv = params.get("ccm.attn.v.w");
  w.wo = params.get("ccm.attn.o.w");
  const Tensor q = batch_queries(params, batch);
  const std::size_t m = batch.size();
  std::vector<Tensor> per_sample;
  per_sample.reserve(encoded.size());
  if (probs) probs->assign(encoded.size(), {});
  for (std::size_t n = 0; n < encoded.size(); ++n) {
    const auto mask = key_padding_mask(m, encoded[n].valid);
    per_sample.push_back(multi_head_attention(q, encoded[n].tokens, w, config_.heads, mask,
                                              probs ? &(*probs)[n] : nullptr));
  }
  Tensor stacked = per_sample.size() == 1 ? per_sample[0] : concat(per_sample, 1);
  return reshape(stacked, {m, encoded.size(), d_ca_});
}

namespace {

struct TripletRows {
  Tensor pos, neg, query;  // [K, d] each
};

TripletRows gather_rows(const Tensor& h, const std::vector<Triplet>& triplets,
                        const Tensor& queries) {
  if (h.rank() != 3 || queries.rank() != 2 || queries.dim(0) != h.dim(0) ||
      queries.dim(1) != h.dim(2)) {
    throw ShapeError("triplet_loss: H " + shape_str(h.shape()) + " and queries " +
                     shape_str(queries.shape()) + " disagree");
  }
  const std::size_t n = h.dim(1);
  std::vector<std::size_t> pos, neg, anchor;
  for (const Triplet& t : triplets) {
    if (t.anchor >= h.dim(0) || t.positive >= n || t.negative >= n) {
      throw IndexError("triplet (" + std::to_string(t.anchor) + ", " +
                       std::to_string(t.positive) + ", " + std::to_string(t.negative) +
                       ") outside H " + shape_str(h.shape()));
    }
    pos.push_back(t.anchor * n + t.positive);
    neg.push_back(t.anchor * n + t.negative);
    anchor.push_back(t.anchor);
  }
  Tensor flat = reshape(h, {h.dim(0) * n, h.dim(2)});
  return {embedding_lookup(flat, pos), embedding_lookup(flat, neg),
          embedding_lookup(queries, anchor)};
}

}  // namespace

Tensor triplet_loss(const Tensor& h, const std::vector<Triplet>& triplets, const Tensor& queries,
                    double margin, bool hinge_over_mean) {
  if (triplets.empty()) return Tensor::zeros({1});
  TripletRows rows = gather_rows(h, triplets, queries);
  std::vector<Tensor> terms;
  terms.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    Tensor q = slice(rows.query, 0, k, 1);
    Tensor sp = cosine_similarity(slice(rows.pos, 0, k, 1), q);
    Tensor sn = cosine_similarity(slice(rows.neg, 0, k, 1), q);
    terms.push_back(add_scalar(subtract(sn, sp), margin));
  }
  Tensor l = terms.size() == 1 ? terms[0] : concat(terms, 0);
  return hinge_over_mean ? relu(mean(l, 0)) : mean(relu(l), 0);
}

std::vector<TripletSimilarity> triplet_similarities(const Tensor& h,
                                                    const std::vector<Triplet>& triplets,
                                                    const Tensor& queries) {
  NoGradGuard no_grad;
  std::vector<TripletSimilarity> out;
  if (triplets.empty()) return out;
  TripletRows rows = gather_rows(h, triplets, queries);
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    Tensor q = slice(rows.query, 0, k, 1);
    out.push_back({cosine_similarity(slice(rows.pos, 0, k, 1), q).item(),
                   cosine_similarity(slice(rows.neg, 0, k, 1), q).item()});
  }
  return out;
}

Tensor combined_loss(const Tensor& l_ce, const Tensor& l_itl, double lambda) {
  if (lambda == 0.0 || !l_itl.defined()) return l_ce;
  return add(l_ce, scale(l_itl, lambda));
}

}  // namespace slt
