#pragma once

// Visual-to-text transformer: a pre-norm encoder over backbone features and a
// causal decoder with cross-attention whose output layer reuses the word
// embedding matrix.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "slt/attention.hpp"
#include "slt/nn.hpp"
#include "slt/tensor.hpp"

namespace slt {

struct TransformerConfig {
  std::size_t layers = 4;
  std::size_t heads = 4;
  std::size_t model_dim = 768;
  std::size_t ff_dim = 1024;
  double dropout = 0.1;
  std::size_t max_positions = 128;
  std::string activation = "relu";  // feed-forward nonlinearity: relu or gelu
};

struct Seq2SignConfig {
  TransformerConfig encoder;  // encoder.model_dim is the visual feature width
  TransformerConfig decoder;
  std::size_t vocab_size = 0;
  bool use_pe = true;

  void validate() const;
};

// pe[p, 2i] = sin(p / 10000^(2i/dim)), pe[p, 2i+1] = cos(same). Throws
// ParameterError for odd dim.
Tensor sinusoidal_pe(std::size_t length, std::size_t dim);

struct EncodedFeatures {
  Tensor tokens;                      // [L_enc, d_visual]
  std::vector<std::uint8_t> valid;    // per position, 1 = real frame
};

struct DecoderOutput {
  Tensor states;  // [L, model_dim] after the final layer norm
  Tensor logits;  // [L, vocab]
};

class Seq2Sign {
 public:
  explicit Seq2Sign(Seq2SignConfig config);

  // Registers "encoder.*" and "decoder.*" parameters.
  void init_params(ParameterSet& params, std::uint64_t seed) const;

  // features: [L, d_visual]; `valid` empty means all positions are real.
  EncodedFeatures encode(const ParameterSet& params, const Tensor& features,
                         std::span<const std::uint8_t> valid, const ForwardContext& ctx) const;

  // Teacher-forced decoding of `ids` (BOS ... EOS, PAD-padded). Throws
  // LengthError beyond max_positions.
  DecoderOutput decode(const ParameterSet& params, const EncodedFeatures& enc,
                       std::span<const std::size_t> ids, const ForwardContext& ctx) const;

  // Log-probabilities of the token following `prefix` (which starts with BOS),
  // computed without recording a graph.
  std::vector<double> next_log_probs(const ParameterSet& params, const EncodedFeatures& enc,
                                     std::span<const std::size_t> prefix) const;

  static const Tensor& embedding(const ParameterSet& params);
  // The output projection: the same tensor as embedding().
  static const Tensor& lm_head(const ParameterSet& params);

  const Seq2SignConfig& config() const { return config_; }

 private:
  Seq2SignConfig config_;
};

// Mean cross-entropy of logits[i] against ids[i + 1] over non-PAD targets.
Tensor translation_loss(const Tensor& logits, std::span<const std::size_t> ids,
                        std::size_t pad_id);

struct BeamOptions {
  std::size_t beam_size = 5;
  std::size_t max_len = 64;      // generated tokens, EOS included
  double length_penalty = 0.0;   // final score = sum / len^penalty
  std::size_t eos_id = 2;
  std::vector<std::size_t> forbidden;  // never generated (e.g. PAD, BOS)
};

struct GenerationResult {
  std::vector<std::size_t> tokens;        // after BOS; ends with EOS when finished
  std::vector<double> step_log_probs;
  double score = 0.0;                     // length-penalized sum of log-probs
  bool finished = false;
};

// Log-probabilities over the vocabulary for the next token after `prefix`
// (prefix excludes BOS).
using NextTokenScorer = std::function<std::vector<double>(const std::vector<std::size_t>&)>;

// Standard beam search. Each step expands every live hypothesis, keeps the
// beam_size best candidates (ties by lower token id, then earlier parent);
// candidates ending in EOS are finalized and shrink the live beam. Stops when
// no live hypothesis can beat the best finished one or at max_len, where
// remaining hypotheses are finalized unfinished.
GenerationResult beam_search(const NextTokenScorer& scorer, const BeamOptions& options);
GenerationResult greedy_decode(const NextTokenScorer& scorer, const BeamOptions& options);

}  // namespace slt
