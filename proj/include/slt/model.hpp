#pragma once

// The complete translator: backbone, encoder-decoder, optional concept miner,
// tokenizer and anchor vocabulary, plus checkpoint I/O.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "slt/anchors.hpp"
#include "slt/bpe.hpp"
#include "slt/ccm.hpp"
#include "slt/config.hpp"
#include "slt/nn.hpp"
#include "slt/optim.hpp"
#include "slt/posenet.hpp"
#include "slt/seq2sign.hpp"

namespace slt {

class SignTranslator {
 public:
  // `anchor_init` may be omitted when the vocabulary is empty or the values
  // will be overwritten from a checkpoint.
  SignTranslator(TrainConfig config, BpeModel bpe, AnchorVocab anchors, SkeletonSpec skeleton,
                 const std::optional<EmbeddingInit>& anchor_init = std::nullopt);

  const TrainConfig& config() const { return config_; }
  const BpeModel& bpe() const { return bpe_; }
  const AnchorVocab& anchors() const { return anchors_; }
  const SkeletonSpec& skeleton() const { return skeleton_; }
  const PoseNet& backbone() const { return backbone_; }
  const Seq2Sign& seq2sign() const { return seq2sign_; }
  // Null when the anchor vocabulary is empty.
  const ConceptMiner* concept_miner() const { return miner_ ? &*miner_ : nullptr; }

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  // Backbone then encoder. With `train_backbone` false the backbone runs
  // without recording a graph.
  EncodedFeatures encode(const PoseSequence& pose, const ForwardContext& ctx,
                         bool train_backbone) const;

  // BOS + BPE ids + EOS, truncated to the decoder's position capacity with
  // EOS kept last.
  std::vector<std::size_t> target_ids(const std::string& text) const;

  // Beam search over the decoder; no concept-mining computation.
  GenerationResult generate(const PoseSequence& pose, std::size_t beam_size) const;
  GenerationResult generate_greedy(const PoseSequence& pose) const;
  std::string translate(const PoseSequence& pose, std::size_t beam_size) const;
  std::string detokenize(const std::vector<std::size_t>& ids) const;

 private:
  TrainConfig config_;
  BpeModel bpe_;
  AnchorVocab anchors_;
  SkeletonSpec skeleton_;
  PoseNet backbone_;
  Seq2Sign seq2sign_;
  std::optional<ConceptMiner> miner_;
  ParameterSet params_;

  BeamOptions beam_options(std::size_t beam_size) const;
  NextTokenScorer scorer(const EncodedFeatures& enc) const;
};

struct CheckpointInfo {
  std::size_t step = 0;
  std::size_t epoch = 0;  // completed epochs
};

// Directory layout: manifest.json (format, step, epoch, config, parameter
// names and shapes), params/<name>.f32 and optim/<name>.{m,v}.f32 as raw
// little-endian float32, plus bpe.json, anchors.tsv and skeleton.json. The
// directory is written next to `dir` and renamed into place.
void save_checkpoint(const std::filesystem::path& dir, const SignTranslator& model,
                     const AdamWState* optimizer, const CheckpointInfo& info);

struct LoadedCheckpoint {
  std::unique_ptr<SignTranslator> model;
  AdamWState optimizer;  // empty buffers when the checkpoint has none
  CheckpointInfo info;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace slt
