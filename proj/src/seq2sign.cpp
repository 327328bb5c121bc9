#include "slt/seq2sign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slt/ops.hpp"

namespace slt {

namespace {

void add_layer_norm(ParameterSet& params, const std::string& prefix, std::size_t dim) {
  params.add(prefix + ".g", Tensor::full({dim}, 1.0, true));
  params.add(prefix + ".b", Tensor::zeros({dim}, true));
}

Tensor norm(const ParameterSet& params, const std::string& prefix, const Tensor& x) {
  return layer_norm(x, params.get(prefix + ".g"), params.get(prefix + ".b"));
}

void add_feed_forward(ParameterSet& params, const std::string& prefix, std::size_t dim,
                      std::size_t hidden, std::uint64_t seed) {
  add_linear(params, prefix + ".ff1", dim, hidden, seed);
  add_linear(params, prefix + ".ff2", hidden, dim, seed);
}

Tensor feed_forward(const ParameterSet& params, const std::string& prefix, const Tensor& x,
                    const std::string& activation, const ForwardContext& ctx) {
  Tensor h = linear(params, prefix + ".ff1", x);
  h = ctx.apply_dropout(activation == "gelu" ? gelu(h) : relu(h));
  return linear(params, prefix + ".ff2", h);
}

void check_transformer(const TransformerConfig& c, const char* what) {
  if (c.model_dim == 0 || c.heads == 0 || c.model_dim % c.heads != 0) {
    throw ParameterError(std::string(what) + " model_dim " + std::to_string(c.model_dim) +
                         " must be a positive multiple of heads " + std::to_string(c.heads));
  }
  if (c.layers > 0 && c.ff_dim == 0) throw ParameterError(std::string(what) + " ff_dim is 0");
  if (c.dropout < 0.0 || c.dropout >= 1.0) {
    throw ParameterError(std::string(what) + " dropout must be in [0, 1)");
  }
  if (c.activation != "relu" && c.activation != "gelu") {
    throw ParameterError(std::string(what) + " activation must be relu or gelu, got " + c.activation);
  }
}

std::string layer_name(const char* stack, std::size_t i) {
  return std::string(stack) + ".layer" + std::to_string(i);
}

}  // namespace

void Seq2SignConfig::validate() const {
  check_transformer(encoder, "encoder");
  check_transformer(decoder, "decoder");
  if (decoder.max_positions == 0) throw ParameterError("decoder max_positions is 0");
  if (vocab_size < 4) throw ParameterError("vocabulary must include the 4 special tokens");
  if (use_pe && encoder.model_dim % 2 != 0) {
    throw ParameterError("positional encoding needs an even visual width");
  }
}

Tensor sinusoidal_pe(std::size_t length, std::size_t dim) {
  if (dim == 0 || dim % 2 != 0) {
    throw ParameterError("sinusoidal_pe: dim must be even, got " + std::to_string(dim));
  }
  std::vector<double> v(length * dim);
  for (std::size_t p = 0; p < length; ++p) {
    for (std::size_t i = 0; i < dim; i += 2) {
      const double angle =
          static_cast<double>(p) / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(dim));
      v[p * dim + i] = std::sin(angle);
      v[p * dim + i + 1] = std::cos(angle);
    }
  }
  return Tensor::from({length, dim}, std::move(v));
}

Seq2Sign::Seq2Sign(Seq2SignConfig config) : config_(std::move(config)) { config_.validate(); }

void Seq2Sign::init_params(ParameterSet& params, std::uint64_t seed) const {
  const auto& e = config_.encoder;
  for (std::size_t i = 0; i < e.layers; ++i) {
    const std::string p = layer_name("encoder", i);
    add_layer_norm(params, p + ".ln1", e.model_dim);
    add_attention(params, p + ".attn", e.model_dim, e.model_dim, e.model_dim, e.model_dim, seed);
    add_layer_norm(params, p + ".ln2", e.model_dim);
    add_feed_forward(params, p, e.model_dim, e.ff_dim, seed);
  }
  if (e.layers > 0) add_layer_norm(params, "encoder.ln_f", e.model_dim);

  const auto& d = config_.decoder;
  params.add("decoder.embed", init_normal({config_.vocab_size, d.model_dim}, 0.02, seed,
                                          "decoder.embed"));
  params.add("decoder.pos", init_normal({d.max_positions, d.model_dim}, 0.02, seed,
                                        "decoder.pos"));
  add_layer_norm(params, "decoder.ln_emb", d.model_dim);
  for (std::size_t i = 0; i < d.layers; ++i) {
    const std::string p = layer_name("decoder", i);
    add_layer_norm(params, p + ".ln1", d.model_dim);
    add_attention(params, p + ".self", d.model_dim, d.model_dim, d.model_dim, d.model_dim, seed);
    add_layer_norm(params, p + ".ln2", d.model_dim);
    add_attention(params, p + ".cross", d.model_dim, e.model_dim, d.model_dim, d.model_dim, seed);
    add_layer_norm(params, p + ".ln3", d.model_dim);
    add_feed_forward(params, p, d.model_dim, d.ff_dim, seed);
  }
  add_layer_norm(params, "decoder.ln_f", d.model_dim);
}

EncodedFeatures Seq2Sign::encode(const ParameterSet& params, const Tensor& features,
                                 std::span<const std::uint8_t> valid,
                                 const ForwardContext& ctx) const {
  const auto& e = config_.encoder;
  if (features.rank() != 2 || features.dim(1) != e.model_dim) {
    throw ShapeError("encode: expected [L, " + std::to_string(e.model_dim) + "], got " +
                     shape_str(features.shape()));
  }
  const std::size_t len = features.dim(0);
  EncodedFeatures out;
  if (valid.empty()) {
    out.valid.assign(len, 1);
  } else if (valid.size() != len) {
    throw ShapeError("encode: mask length " + std::to_string(valid.size()) + " vs " +
                     std::to_string(len) + " positions");
  } else {
    out.valid.assign(valid.begin(), valid.end());
  }

  Tensor x = config_.use_pe ? add(features, sinusoidal_pe(len, e.model_dim)) : features;
  if (e.layers == 0) {
    out.tokens = x;
    return out;
  }
  ForwardContext layer_ctx = ctx;
  layer_ctx.dropout = e.dropout;
  x = layer_ctx.apply_dropout(x);
  const std::vector<std::uint8_t> mask = key_padding_mask(len, out.valid);
  for (std::size_t i = 0; i < e.layers; ++i) {
    const std::string p = layer_name("encoder", i);
    Tensor h = norm(params, p + ".ln1", x);
    h = multi_head_attention(h, h, AttentionWeights::from(params, p + ".attn"), e.heads, mask);
    x = add(x, layer_ctx.apply_dropout(h));
    h = feed_forward(params, p, norm(params, p + ".ln2", x), e.activation, layer_ctx);
    x = add(x, layer_ctx.apply_dropout(h));
  }
  out.tokens = norm(params, "encoder.ln_f", x);
  return out;
}

DecoderOutput Seq2Sign::decode(const ParameterSet& params, const EncodedFeatures& enc,
                               std::span<const std::size_t> ids,
                               const ForwardContext& ctx) const {
  const auto& d = config_.decoder;
  const std::size_t len = ids.size();
  if (len == 0) throw ShapeError("decode: empty target sequence");
  if (len > d.max_positions) {
    throw LengthError("decode: target length " + std::to_string(len) + " exceeds " +
                      std::to_string(d.max_positions) + " positions");
  }
  std::vector<std::size_t> positions(len);
  for (std::size_t i = 0; i < len; ++i) positions[i] = i;

  ForwardContext layer_ctx = ctx;
  layer_ctx.dropout = d.dropout;
  const Tensor& embed = embedding(params);
  Tensor x = add(embedding_lookup(embed, ids), embedding_lookup(params.get("decoder.pos"), positions));
  x = layer_ctx.apply_dropout(norm(params, "decoder.ln_emb", x));

  const std::vector<std::uint8_t> self_mask = causal_mask(len);
  const std::vector<std::uint8_t> cross_mask = key_padding_mask(len, enc.valid);
  for (std::size_t i = 0; i < d.layers; ++i) {
    const std::string p = layer_name("decoder", i);
    Tensor h = norm(params, p + ".ln1", x);
    h = multi_head_attention(h, h, AttentionWeights::from(params, p + ".self"), d.heads,
                             self_mask);
    x = add(x, layer_ctx.apply_dropout(h));
    h = multi_head_attention(norm(params, p + ".ln2", x), enc.tokens,
                             AttentionWeights::from(params, p + ".cross"), d.heads, cross_mask);
    x = add(x, layer_ctx.apply_dropout(h));
    h = feed_forward(params, p, norm(params, p + ".ln3", x), d.activation, layer_ctx);
    x = add(x, layer_ctx.apply_dropout(h));
  }
  DecoderOutput out;
  out.states = norm(params, "decoder.ln_f", x);
  out.logits = matmul(out.states, transpose(lm_head(params)));
  return out;
}

std::vector<double> Seq2Sign::next_log_probs(const ParameterSet& params,
                                             const EncodedFeatures& enc,
                                             std::span<const std::size_t> prefix) const {
  NoGradGuard no_grad;
  DecoderOutput out = decode(params, enc, prefix, ForwardContext{});
  const std::size_t v = out.logits.dim(1);
  auto row = out.logits.data().subspan((prefix.size() - 1) * v, v);
  const double mx = *std::max_element(row.begin(), row.end());
  double z = 0.0;
  for (double x : row) z += std::exp(x - mx);
  const double log_z = mx + std::log(z);
  std::vector<double> lp(v);
  for (std::size_t i = 0; i < v; ++i) lp[i] = row[i] - log_z;
  return lp;
}

const Tensor& Seq2Sign::embedding(const ParameterSet& params) {
  return params.get("decoder.embed");
}

const Tensor& Seq2Sign::lm_head(const ParameterSet& params) { return embedding(params); }

Tensor translation_loss(const Tensor& logits, std::span<const std::size_t> ids,
                        std::size_t pad_id) {
  if (logits.rank() != 2 || logits.dim(0) != ids.size()) {
    throw ShapeError("translation_loss: logits " + shape_str(logits.shape()) + " for " +
                     std::to_string(ids.size()) + " target ids");
  }
  if (ids.size() < 2) throw UndefinedError("translation_loss: need at least two target ids");
  Tensor pred = slice(logits, 0, 0, ids.size() - 1);
  return cross_entropy_logits(pred, ids.subspan(1), pad_id);
}

namespace {

struct Hypothesis {
  std::vector<std::size_t> tokens;
  std::vector<double> log_probs;
  double sum = 0.0;
};

double final_score(const Hypothesis& h, double penalty) {
  if (penalty == 0.0 || h.tokens.empty()) return h.sum;
  return h.sum / std::pow(static_cast<double>(h.tokens.size()), penalty);
}

void check_options(const BeamOptions& options) {
  if (options.max_len < 1) throw ParameterError("max_len must be at least 1");
  if (options.beam_size < 1) throw ParameterError("beam_size must be at least 1");
}

bool forbidden(const BeamOptions& options, std::size_t token) {
  return std::find(options.forbidden.begin(), options.forbidden.end(), token) !=
         options.forbidden.end();
}

}  // namespace

GenerationResult beam_search(const NextTokenScorer& scorer, const BeamOptions& options) {
  check_options(options);
  struct Candidate {
    double sum;
    std::size_t parent;
    std::size_t token;
    double log_prob;
  };
  std::vector<Hypothesis> live(1);
  std::vector<std::pair<Hypothesis, bool>> done;  // (hypothesis, finished)
  double best_done = -std::numeric_limits<double>::infinity();

  for (std::size_t step = 0; step < options.max_len && !live.empty(); ++step) {
    std::vector<Candidate> cands;
    for (std::size_t b = 0; b < live.size(); ++b) {
      const std::vector<double> lp = scorer(live[b].tokens);
      for (std::size_t tok = 0; tok < lp.size(); ++tok) {
        if (forbidden(options, tok) || !std::isfinite(lp[tok])) continue;
        cands.push_back({live[b].sum + lp[tok], b, tok, lp[tok]});
      }
    }
    const std::size_t keep = std::min(options.beam_size, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<long>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.sum != b.sum) return a.sum > b.sum;
                        if (a.token != b.token) return a.token < b.token;
                        return a.parent < b.parent;
                      });
    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = cands[i];
      Hypothesis h = live[c.parent];
      h.tokens.push_back(c.token);
      h.log_probs.push_back(c.log_prob);
      h.sum = c.sum;
      if (c.token == options.eos_id) {
        best_done = std::max(best_done, final_score(h, options.length_penalty));
        done.emplace_back(std::move(h), true);
      } else {
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
    // Log-probabilities are <= 0, so without a length penalty a live
    // hypothesis can only lose score from here on.
    if (options.length_penalty == 0.0 && !live.empty() && best_done >= live.front().sum) {
      live.clear();
    }
  }
  for (Hypothesis& h : live) done.emplace_back(std::move(h), false);

  GenerationResult best;
  bool have = false;
  for (auto& [h, finished] : done) {
    const double s = final_score(h, options.length_penalty);
    if (!have || s > best.score) {
      best.tokens = h.tokens;
      best.step_log_probs = h.log_probs;
      best.score = s;
      best.finished = finished;
      have = true;
    }
  }
  return best;
}

GenerationResult greedy_decode(const NextTokenScorer& scorer, const BeamOptions& options) {
  check_options(options);
  GenerationResult r;
  double sum = 0.0;
  for (std::size_t step = 0; step < options.max_len; ++step) {
    const std::vector<double> lp = scorer(r.tokens);
    std::size_t arg = lp.size();
    for (std::size_t tok = 0; tok < lp.size(); ++tok) {
      if (forbidden(options, tok) || !std::isfinite(lp[tok])) continue;
      if (arg == lp.size() || lp[tok] > lp[arg]) arg = tok;
    }
    if (arg == lp.size()) break;
    r.tokens.push_back(arg);
    r.step_log_probs.push_back(lp[arg]);
    sum += lp[arg];
    if (arg == options.eos_id) {
      r.finished = true;
      break;
    }
  }
  Hypothesis h{r.tokens, r.step_log_probs, sum};
  r.score = final_score(h, options.length_penalty);
  return r;
}

}  // namespace slt
