#include "slt/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "slt/errors.hpp"

namespace slt {

namespace fs = std::filesystem;

namespace {

std::optional<ConceptMiner> make_miner(const TrainConfig& config, const AnchorVocab& anchors) {
  if (anchors.size() == 0) return std::nullopt;
  return ConceptMiner(config.ccm_config(), config.d_ca, config.d_visual);
}

}  // namespace

SignTranslator::SignTranslator(TrainConfig config, BpeModel bpe, AnchorVocab anchors,
                               SkeletonSpec skeleton,
                               const std::optional<EmbeddingInit>& anchor_init)
    : config_(std::move(config)),
      bpe_(std::move(bpe)),
      anchors_(std::move(anchors)),
      skeleton_(std::move(skeleton)),
      backbone_(config_.posenet(), skeleton_),
      seq2sign_(config_.seq2sign(bpe_.vocab_size())),
      miner_(make_miner(config_, anchors_)) {
  config_.validate();
  backbone_.init_params(params_, config_.seed);
  seq2sign_.init_params(params_, config_.seed);
  if (miner_) {
    EmbeddingInit init = anchor_init ? *anchor_init
                                     : load_pretrained_embeddings(std::nullopt, anchors_,
                                                                  config_.d_ca, config_.seed);
    if (init.dim != config_.d_ca) {
      throw ParameterError("anchor embeddings have width " + std::to_string(init.dim) +
                           ", expected d_ca = " + std::to_string(config_.d_ca));
    }
    miner_->init_params(params_, init, config_.seed);
  }
}

EncodedFeatures SignTranslator::encode(const PoseSequence& pose, const ForwardContext& ctx,
                                       bool train_backbone) const {
  Tensor features;
  if (train_backbone) {
    features = backbone_.forward(params_, pose);
  } else {
    NoGradGuard no_grad;
    features = backbone_.forward(params_, pose).detach();
  }
  return seq2sign_.encode(params_, features, {}, ctx);
}

std::vector<std::size_t> SignTranslator::target_ids(const std::string& text) const {
  std::vector<std::size_t> ids = bpe_.encode(text, true);
  const std::size_t cap = config_.max_positions;
  if (ids.size() > cap) {
    ids.resize(cap);
    ids.back() = kEosId;
  }
  return ids;
}

BeamOptions SignTranslator::beam_options(std::size_t beam_size) const {
  BeamOptions options;
  options.beam_size = beam_size;
  // The decoder also consumes BOS, so generation stops one short of capacity.
  options.max_len = std::min(config_.max_decode_len, config_.max_positions - 1);
  options.length_penalty = config_.length_penalty;
  options.eos_id = kEosId;
  options.forbidden = {kPadId, kBosId};
  return options;
}

NextTokenScorer SignTranslator::scorer(const EncodedFeatures& enc) const {
  return [this, &enc](const std::vector<std::size_t>& prefix) {
    std::vector<std::size_t> full;
    full.reserve(prefix.size() + 1);
    full.push_back(kBosId);
    full.insert(full.end(), prefix.begin(), prefix.end());
    return seq2sign_.next_log_probs(params_, enc, full);
  };
}

GenerationResult SignTranslator::generate(const PoseSequence& pose, std::size_t beam_size) const {
  NoGradGuard no_grad;
  const EncodedFeatures enc = encode(pose, ForwardContext{}, false);
  return beam_search(scorer(enc), beam_options(beam_size));
}

GenerationResult SignTranslator::generate_greedy(const PoseSequence& pose) const {
  NoGradGuard no_grad;
  const EncodedFeatures enc = encode(pose, ForwardContext{}, false);
  return greedy_decode(scorer(enc), beam_options(1));
}

std::string SignTranslator::translate(const PoseSequence& pose, std::size_t beam_size) const {
  return detokenize(generate(pose, beam_size).tokens);
}

std::string SignTranslator::detokenize(const std::vector<std::size_t>& ids) const {
  std::vector<std::size_t> body;
  for (std::size_t id : ids) {
    if (id == kEosId) break;
    body.push_back(id);
  }
  return bpe_.decode(body);
}

// ---------------------------------------------------------------------------
// checkpoints

namespace {

constexpr const char* kFormat = "slt-checkpoint";
constexpr int kVersion = 1;

void write_f32(const fs::path& path, std::span<const double> values) {
  std::vector<char> buf(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) buf[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  std::ofstream out(path, std::ios::binary);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw LoadError("cannot write " + path.string());
}

std::vector<double> read_f32(const fs::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("missing checkpoint file " + path.string());
  std::vector<char> buf(count * 4);
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size() || in.peek() != EOF) {
    throw FormatError(path.string() + ": expected " + std::to_string(count) + " float32 values");
  }
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i * 4 + b])) << (8 * b);
    }
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("missing checkpoint file " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

void save_checkpoint(const fs::path& dir, const SignTranslator& model, const AdamWState* optimizer,
                     const CheckpointInfo& info) {
  const fs::path target = fs::absolute(dir).lexically_normal();
  const fs::path parent = target.parent_path();
  fs::create_directories(parent);
  const fs::path tmp = parent / (target.filename().string() + ".tmp");
  fs::remove_all(tmp);
  fs::create_directories(tmp / "params");

  const ParameterSet& params = model.params();
  nlohmann::ordered_json manifest;
  manifest["format"] = kFormat;
  manifest["version"] = kVersion;
  manifest["step"] = info.step;
  manifest["epoch"] = info.epoch;
  manifest["config"] = model.config().to_json();
  manifest["parameters"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.names()[i];
    manifest["parameters"].push_back({{"name", name}, {"shape", params.tensors()[i].shape()}});
    write_f32(tmp / "params" / (name + ".f32"), params.tensors()[i].data());
  }
  if (optimizer && !optimizer->m.empty()) {
    if (optimizer->m.size() != params.size()) {
      throw ParameterError("optimizer state does not match the parameter set");
    }
    fs::create_directories(tmp / "optim");
    manifest["optimizer"] = {{"step", optimizer->step}};
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string& name = params.names()[i];
      write_f32(tmp / "optim" / (name + ".m.f32"), optimizer->m[i]);
      write_f32(tmp / "optim" / (name + ".v.f32"), optimizer->v[i]);
    }
  }
  {
    std::ofstream out(tmp / "manifest.json");
    out << manifest.dump(2) << '\n';
    if (!out) throw LoadError("cannot write " + (tmp / "manifest.json").string());
  }
  model.bpe().save(tmp / "bpe.json");
  model.anchors().save_tsv(tmp / "anchors.tsv");
  model.skeleton().save(tmp / "skeleton.json");

  // Swap into place; an interrupted save leaves either the old or the new
  // directory intact.
  const fs::path old = parent / (target.filename().string() + ".old");
  fs::remove_all(old);
  if (fs::exists(target)) fs::rename(target, old);
  fs::rename(tmp, target);
  fs::remove_all(old);
}

LoadedCheckpoint load_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw LoadError("checkpoint directory not found: " + dir.string());
  const nlohmann::json manifest = read_json(dir / "manifest.json");
  if (manifest.value("format", "") != kFormat || manifest.value("version", 0) != kVersion) {
    throw FormatError(dir.string() + ": not a version " + std::to_string(kVersion) +
                      " checkpoint");
  }
  TrainConfig config = TrainConfig::from_json(manifest.at("config"));
  BpeModel bpe = BpeModel::load(dir / "bpe.json");
  AnchorVocab anchors = AnchorVocab::load_tsv(dir / "anchors.tsv");
  SkeletonSpec skeleton = SkeletonSpec::load(dir / "skeleton.json");

  LoadedCheckpoint out;
  out.info.step = manifest.at("step").get<std::size_t>();
  out.info.epoch = manifest.at("epoch").get<std::size_t>();
  out.model = std::make_unique<SignTranslator>(std::move(config), std::move(bpe),
                                               std::move(anchors), std::move(skeleton));
  ParameterSet& params = out.model->params();

  const auto& entries = manifest.at("parameters");
  if (entries.size() != params.size()) {
    throw FormatError(dir.string() + ": parameter count " + std::to_string(entries.size()) +
                      " does not match the model (" + std::to_string(params.size()) + ")");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.names()[i];
    if (entries[i].at("name").get<std::string>() != name ||
        entries[i].at("shape").get<Shape>() != params.tensors()[i].shape()) {
      throw FormatError(dir.string() + ": parameter " + std::to_string(i) +
                        " does not match model parameter " + name);
    }
    Tensor t = params.tensors()[i];
    std::vector<double> values = read_f32(dir / "params" / (name + ".f32"), t.numel());
    std::copy(values.begin(), values.end(), t.mutable_data().begin());
  }
  if (manifest.contains("optimizer")) {
    out.optimizer = AdamWState::zeros_like(params);
    out.optimizer.step = manifest["optimizer"].at("step").get<std::size_t>();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string& name = params.names()[i];
      const std::size_t n = params.tensors()[i].numel();
      out.optimizer.m[i] = read_f32(dir / "optim" / (name + ".m.f32"), n);
      out.optimizer.v[i] = read_f32(dir / "optim" / (name + ".v.f32"), n);
    }
  }
  return out;
}

}  // namespace slt
