#pragma once

// Contrastive concept mining: learnable anchor-word embeddings query each
// sample's encoded features by cross-attention, and an inter-sample triplet
// loss pulls a sample's query result toward the anchors its translation
// contains and away from those it lacks. Training only; inference never
// builds any of this.

#include <cstdint>
#include <string>
#include <vector>

#include "slt/anchors.hpp"
#include "slt/attention.hpp"
#include "slt/nn.hpp"
#include "slt/rng.hpp"
#include "slt/seq2sign.hpp"

namespace slt {

struct CcmConfig {
  double margin = 0.4;        // mu
  double weight = 1.0;        // lambda
  std::size_t heads = 4;
  std::size_t head_dim = 0;   // 0 = d_ca / heads
  // true: max(0, mean(l)); false: mean(max(0, l)).
  bool hinge_over_mean = true;

  void validate() const;
};

struct BatchAnchorSet {
  std::vector<std::size_t> anchors;                  // anchor ids, ascending
  std::vector<std::vector<std::size_t>> membership;  // sorted sample indices per anchor
  std::size_t samples = 0;                           // N

  std::size_t size() const { return anchors.size(); }
};

// Word-level scan of each translation; a word repeated within one sample
// counts once.
BatchAnchorSet collect_batch_anchors(const std::vector<std::string>& translations,
                                     const AnchorVocab& vocab);

struct Triplet {
  std::size_t anchor;    // index into BatchAnchorSet::anchors
  std::size_t positive;  // sample containing the anchor
  std::size_t negative;  // sample not containing it
};

struct TripletDraw {
  std::vector<Triplet> triplets;
  std::size_t skipped = 0;  // anchors lacking a positive or a negative
};

// One uniformly drawn (positive, negative) pair per anchor that has both.
TripletDraw sample_triplets(const BatchAnchorSet& batch, Rng& rng);

class ConceptMiner {
 public:
  ConceptMiner(CcmConfig config, std::size_t d_ca, std::size_t d_visual);

  // Registers "ccm.anchors" (initialized from `init`) and the bias-free
  // projections "ccm.attn.{q,k,v,o}.w".
  void init_params(ParameterSet& params, const EmbeddingInit& init, std::uint64_t seed) const;

  // H: [M, N, d_ca], H[m][n] = anchor m queried against sample n. Returns an
  // undefined tensor when the batch has no anchors. `probs`, if given,
  // receives per sample the per-head [M, L_n] attention matrices.
  Tensor anchor_query(const ParameterSet& params, const BatchAnchorSet& batch,
                      const std::vector<EncodedFeatures>& encoded,
                      std::vector<std::vector<Tensor>>* probs = nullptr) const;

  // Anchor embeddings Q for the batch anchors: [M, d_ca].
  static Tensor batch_queries(const ParameterSet& params, const BatchAnchorSet& batch);

  const CcmConfig& config() const { return config_; }
  std::size_t d_ca() const { return d_ca_; }

 private:
  CcmConfig config_;
  std::size_t d_ca_;
  std::size_t d_visual_;
  std::size_t head_dim_;
};

// l_t = mu - cos(H[m][pos], Q_m) + cos(H[m][neg], Q_m) per triplet, combined
// per CcmConfig::hinge_over_mean. No triplets gives 0. H: [M, N, d], Q: [M, d].
Tensor triplet_loss(const Tensor& h, const std::vector<Triplet>& triplets, const Tensor& queries,
                    double margin, bool hinge_over_mean = true);

// Per-triplet similarities, for telemetry and mechanism checks.
struct TripletSimilarity {
  double positive = 0.0;
  double negative = 0.0;
};
std::vector<TripletSimilarity> triplet_similarities(const Tensor& h,
                                                    const std::vector<Triplet>& triplets,
                                                    const Tensor& queries);

// L = L_ce + lambda * L_itl.
Tensor combined_loss(const Tensor& l_ce, const Tensor& l_itl, double lambda);

}  // namespace slt
