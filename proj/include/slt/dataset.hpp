#pragma once

// Pose files, translation tables, dataset manifests and the frame cap.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "slt/posenet.hpp"

namespace slt {

enum class PoseFormat { Jsonl, Packed };

// JSONL: one frame per line as a 76x3 nested array. Packed: "PSEQ", u32
// version (1), u32 frame count, then frames x 76 x 3 little-endian float32.
// The format is detected from the first bytes. Errors name `sample_id`.
PoseSequence load_pose(const std::filesystem::path& path, const std::string& sample_id = "");
void save_pose(const PoseSequence& seq, const std::filesystem::path& path, PoseFormat format);

// Indices round(i * T / cap) for i < cap when T > cap; otherwise 0..T-1.
std::vector<std::size_t> subsample_indices(std::size_t frames, std::size_t cap);
PoseSequence apply_frame_cap(const PoseSequence& seq, std::size_t cap);

// sample_id<TAB>text per line.
std::map<std::string, std::string> read_translations(const std::filesystem::path& path);
void write_translations(const std::vector<std::pair<std::string, std::string>>& rows,
                        const std::filesystem::path& path);

struct ManifestEntry {
  std::string id;
  std::filesystem::path pose;  // resolved against the manifest directory
  std::string text;
};

struct DatasetManifest {
  std::string split = "train";
  std::vector<ManifestEntry> samples;

  // JSON {split, samples: [{id, pose, text}]}. An optional top-level
  // "translations" TSV supplies text for entries without one. Duplicate ids
  // are rejected.
  static DatasetManifest load(const std::filesystem::path& path);
  // Pose paths are written relative to the manifest directory when possible.
  void save(const std::filesystem::path& path) const;
  void validate() const;

  std::vector<std::string> texts() const;
};

struct Sample {
  std::string id;
  PoseSequence pose;
  std::string text;
};

// Loads every pose in manifest order and applies the frame cap. Errors carry
// the failing sample id.
std::vector<Sample> load_dataset(const DatasetManifest& manifest, std::size_t frame_cap);

}  // namespace slt
