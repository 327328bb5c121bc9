#pragma once

// Synthetic sign corpus: each concept is a fixed keypoint motion on one hand or
// the face, a sample chains several concepts, and its translation lists the
// concepts' template words in order.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "slt/dataset.hpp"
#include "slt/posenet.hpp"

namespace slt {

struct SyntheticSpec {
  std::size_t concepts = 8;
  std::size_t min_length = 3;  // concepts per sample
  std::size_t max_length = 8;
  std::size_t frames_per_concept = 8;
  double noise = 0.01;  // std of Gaussian jitter on x, y (shoulder units)
  std::size_t words_per_concept = 1;

  void validate() const;
};

// Template words of each concept, drawn from a fixed list of common nouns
// and verbs.
std::vector<std::vector<std::string>> concept_words(const SyntheticSpec& spec);

// frames_per_concept frames of concept k's motion, noise-free.
PoseSequence concept_motif(const SyntheticSpec& spec, std::size_t concept_id);

struct SyntheticSample {
  std::string id;
  std::vector<std::size_t> concepts;
  PoseSequence pose;
  std::string text;
};

std::vector<SyntheticSample> generate_samples(const SyntheticSpec& spec, std::size_t count,
                                              std::uint64_t seed);

// Writes poses/<id>.pseq (or .jsonl), translations.tsv and manifest.json under
// `out_dir` and returns the manifest.
DatasetManifest generate_synthetic(const SyntheticSpec& spec, std::size_t count,
                                   std::uint64_t seed, const std::filesystem::path& out_dir,
                                   PoseFormat format = PoseFormat::Packed,
                                   const std::string& split = "train");

}  // namespace slt
