#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>

#include "slt/ccm.hpp"
#include "slt/posenet.hpp"
#include "slt/seq2sign.hpp"

namespace slt {

// Every training and model hyperparameter. Field names double as JSON keys
// and CLI flags.
struct TrainConfig {
  // optimization
  double learning_rate = 3e-4;
  std::size_t warmup_steps = 1000;
  std::size_t epochs = 400;
  std::size_t batch_size = 48;
  double weight_decay = 0.01;
  double grad_clip = 1.0;
  double dropout = 0.1;
  int precision = 64;  // 32 rounds parameters to float after every update
  std::uint64_t seed = 0;

  // data
  std::size_t frame_cap = 512;
  std::size_t bpe_vocab_size = 4000;

  // backbone
  std::size_t gcn_channels = 64;
  std::size_t tcn_channels = 128;
  std::size_t d_visual = 1024;

  // visual2text encoder (width is d_visual)
  std::size_t enc_layers = 4;
  std::size_t enc_heads = 4;
  std::size_t enc_ff_dim = 1024;

  // textual decoder
  std::size_t dec_layers = 4;
  std::size_t dec_heads = 4;
  std::size_t model_dim = 768;
  std::size_t dec_ff_dim = 1024;
  std::size_t max_positions = 128;
  std::string ff_activation = "relu";

  // concept mining
  double lambda = 1.0;
  double margin = 0.4;
  std::size_t d_ca = 300;
  std::size_t ccm_heads = 4;
  std::size_t ccm_head_dim = 0;
  bool hinge_over_mean = true;
  std::string anchor_preset = "VN";
  std::size_t anchor_min_count = 10;
  double anchor_max_doc_fraction = 0.9;

  // ablation flags
  bool e2e = true;
  bool pe = true;
  bool ccm = true;

  // generation
  std::size_t beam_size = 5;
  std::size_t max_decode_len = 64;
  double length_penalty = 0.0;

  void validate() const;

  PoseNetConfig posenet() const;
  Seq2SignConfig seq2sign(std::size_t vocab_size) const;
  CcmConfig ccm_config() const;

  nlohmann::json to_json() const;
  // Unknown keys are rejected; missing keys keep their defaults.
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};


// Applies `fn(key, field)` to every field, keeping JSON I/O in one place.
template <typename Config, typename Fn>
void visit_config_fields(Config& c, Fn&& fn) {
  fn("learning_rate", c.learning_rate);
  fn("warmup_steps", c.warmup_steps);
  fn("epochs", c.epochs);
  fn("batch_size", c.batch_size);
  fn("weight_decay", c.weight_decay);
  fn("grad_clip", c.grad_clip);
  fn("dropout", c.dropout);
  fn("precision", c.precision);
  fn("seed", c.seed);
  fn("frame_cap", c.frame_cap);
  fn("bpe_vocab_size", c.bpe_vocab_size);
  fn("gcn_channels", c.gcn_channels);
  fn("tcn_channels", c.tcn_channels);
  fn("d_visual", c.d_visual);
  fn("enc_layers", c.enc_layers);
  fn("enc_heads", c.enc_heads);
  fn("enc_ff_dim", c.enc_ff_dim);
  fn("dec_layers", c.dec_layers);
  fn("dec_heads", c.dec_heads);
  fn("model_dim", c.model_dim);
  fn("dec_ff_dim", c.dec_ff_dim);
  fn("max_positions", c.max_positions);
  fn("ff_activation", c.ff_activation);
  fn("lambda", c.lambda);
  fn("margin", c.margin);
  fn("d_ca", c.d_ca);
  fn("ccm_heads", c.ccm_heads);
  fn("ccm_head_dim", c.ccm_head_dim);
  fn("hinge_over_mean", c.hinge_over_mean);
  fn("anchor_preset", c.anchor_preset);
  fn("anchor_min_count", c.anchor_min_count);
  fn("anchor_max_doc_fraction", c.anchor_max_doc_fraction);
  fn("e2e", c.e2e);
  fn("pe", c.pe);
  fn("ccm", c.ccm);
  fn("beam_size", c.beam_size);
  fn("max_decode_len", c.max_decode_len);
  fn("length_penalty", c.length_penalty);
}

}  // namespace slt
