#include "slt/config.hpp"

#include <fstream>

#include "slt/anchors.hpp"
#include "slt/errors.hpp"

namespace slt {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ParameterError(message);
}

}  // namespace

void TrainConfig::validate() const {
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(epochs > 0, "epochs must be positive");
  require(batch_size > 0, "batch_size must be positive");
  require(weight_decay >= 0.0, "weight_decay must be non-negative");
  require(grad_clip > 0.0, "grad_clip must be positive");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  require(precision == 32 || precision == 64, "precision must be 32 or 64");
  require(frame_cap > 0, "frame_cap must be positive");
  require(gcn_channels > 0 && tcn_channels > 0 && d_visual > 0, "backbone widths must be positive");
  require(d_visual % enc_heads == 0, "d_visual must be divisible by enc_heads");
  require(model_dim % dec_heads == 0, "model_dim must be divisible by dec_heads");
  require(max_positions >= 2, "max_positions must be at least 2");
  require(ff_activation == "relu" || ff_activation == "gelu", "ff_activation must be relu or gelu");
  require(lambda >= 0.0, "lambda must be non-negative");
  require(margin > 0.0, "margin must be positive");
  require(d_ca > 0 && ccm_heads > 0, "d_ca and ccm_heads must be positive");
  require(anchor_max_doc_fraction > 0.0, "anchor_max_doc_fraction must be positive");
  require(beam_size > 0, "beam_size must be positive");
  require(max_decode_len > 0, "max_decode_len must be positive");
  parse_word_type_preset(anchor_preset);
}

PoseNetConfig TrainConfig::posenet() const {
  PoseNetConfig c;
  c.gcn_channels = gcn_channels;
  c.tcn_channels = tcn_channels;
  c.d_visual = d_visual;
  return c;
}

Seq2SignConfig TrainConfig::seq2sign(std::size_t vocab_size) const {
  Seq2SignConfig c;
  c.encoder = {enc_layers, enc_heads, d_visual, enc_ff_dim, dropout, max_positions, ff_activation};
  c.decoder = {dec_layers, dec_heads, model_dim, dec_ff_dim, dropout, max_positions, ff_activation};
  c.vocab_size = vocab_size;
  c.use_pe = pe;
  return c;
}

CcmConfig TrainConfig::ccm_config() const {
  CcmConfig c;
  c.margin = margin;
  c.weight = lambda;
  c.heads = ccm_heads;
  c.head_dim = ccm_head_dim;
  c.hinge_over_mean = hinge_over_mean;
  return c;
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j;
  visit_config_fields(*this, [&](const char* key, const auto& field) { j[key] = field; });
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  TrainConfig c;
  std::size_t matched = 0;
  visit_config_fields(c, [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("config field '") + key + "': " + e.what());
    }
    ++matched;
  });
  if (matched != j.size()) {
    for (const auto& [key, value] : j.items()) {
      bool known = false;
      visit_config_fields(c, [&](const char* k, auto&) { known |= key == k; });
      if (!known) throw FormatError("unknown config field '" + key + "'");
    }
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open config " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("config " + path.string() + ": " + e.what());
  }
}

void TrainConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write config " + path.string());
  out << to_json().dump(2) << '\n';
}

}  // namespace slt
