#include "slt/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "slt/errors.hpp"
#include "slt/rng.hpp"
#include "slt/text.hpp"

namespace slt {

namespace {

constexpr const char* kWords[] = {
    "snow",  "rain",   "house", "dog",   "walk",   "eat",    "city",  "friend",
    "book",  "water",  "tree",  "school", "work",  "run",    "car",   "teacher",
    "sun",   "family", "food",  "play",  "storm",  "street", "drink", "sleep",
    "money", "phone",  "read",  "cook",  "winter", "child",  "bird",  "door",
};
constexpr std::size_t kNumWords = sizeof(kWords) / sizeof(kWords[0]);

// Neutral upright pose in shoulder-width units: body joints first, the face
// contour around the nose and each hand fanned out from its wrist.
std::vector<double> rest_pose() {
  std::vector<double> xy(kNumKeypoints * 2, 0.0);
  auto set = [&](std::size_t j, double x, double y) {
    xy[2 * j] = x;
    xy[2 * j + 1] = y;
  };
  set(0, 0.0, -1.2);   // nose
  set(1, 0.0, -0.6);   // neck
  set(2, -0.5, -0.6);  // right shoulder
  set(3, -0.7, 0.0);   // right elbow
  set(4, -0.4, 0.4);   // right wrist
  set(5, 0.5, -0.6);   // left shoulder
  set(6, 0.7, 0.0);    // left elbow
  set(7, 0.4, 0.4);    // left wrist
  set(8, 0.0, 0.8);    // mid hip
  for (std::size_t i = 0; i < 25; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / 25.0;
    set(9 + i, 0.3 * std::cos(a), -1.2 + 0.35 * std::sin(a));
  }
  for (int side = 0; side < 2; ++side) {
    const std::size_t wrist = side == 0 ? 34 : 55;
    const double wx = side == 0 ? 0.4 : -0.4;
    const double dir = side == 0 ? 1.0 : -1.0;
    set(wrist, wx, 0.45);
    for (std::size_t f = 0; f < 5; ++f) {
      const double a = (static_cast<double>(f) - 2.0) * 0.35;
      for (std::size_t k = 0; k < 4; ++k) {
        const double r = 0.05 * static_cast<double>(k + 1);
        set(wrist + 1 + 4 * f + k, wx + dir * r * std::sin(a), 0.45 - r * std::cos(a));
      }
    }
  }
  return xy;
}

struct RegionSpan {
  std::size_t first, count;
};
constexpr RegionSpan kMotifRegions[] = {{34, 21}, {55, 21}, {9, 25}};

}  // namespace

void SyntheticSpec::validate() const {
  if (concepts < 4) throw ParameterError("synthetic vocabulary needs at least 4 concepts");
  if (min_length == 0 || min_length > max_length) {
    throw ParameterError("synthetic length range must satisfy 1 <= min <= max");
  }
  if (frames_per_concept == 0) throw ParameterError("frames_per_concept must be positive");
  if (!(noise >= 0.0)) throw ParameterError("noise must be non-negative");
  if (words_per_concept == 0 || concepts * words_per_concept > kNumWords) {
    throw ParameterError("at most " + std::to_string(kNumWords) +
                         " template words are available");
  }
}

std::vector<std::vector<std::string>> concept_words(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<std::vector<std::string>> out(spec.concepts);
  for (std::size_t k = 0; k < spec.concepts; ++k) {
    for (std::size_t w = 0; w < spec.words_per_concept; ++w) {
      out[k].emplace_back(kWords[k * spec.words_per_concept + w]);
    }
  }
  return out;
}

PoseSequence concept_motif(const SyntheticSpec& spec, std::size_t concept_id) {
  spec.validate();
  if (concept_id >= spec.concepts) throw IndexError("concept id out of range");
  static const std::vector<double> rest = rest_pose();
  const RegionSpan region = kMotifRegions[concept_id % 3];
  const double freq = 1.0 + static_cast<double>(concept_id / 3);
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(concept_id) /
                       static_cast<double>(spec.concepts);
  const double amp = 0.3;
  PoseSequence seq;
  seq.num_frames = spec.frames_per_concept;
  seq.frames.assign(seq.num_frames * kNumKeypoints * kPoseChannels, 1.0);
  for (std::size_t t = 0; t < seq.num_frames; ++t) {
    const double tau = 2.0 * std::numbers::pi * freq * static_cast<double>(t) /
                       static_cast<double>(spec.frames_per_concept);
    for (std::size_t v = 0; v < kNumKeypoints; ++v) {
      double dx = 0.0, dy = 0.0;
      if (v >= region.first && v < region.first + region.count) {
        const double j = 0.3 * static_cast<double>(v - region.first);
        dx = amp * std::sin(tau + phase + j);
        dy = amp * std::cos(tau + phase + j);
      }
      double* p = seq.frames.data() + (t * kNumKeypoints + v) * kPoseChannels;
      p[0] = rest[2 * v] + dx;
      p[1] = rest[2 * v + 1] + dy;
    }
  }
  return seq;
}

std::vector<SyntheticSample> generate_samples(const SyntheticSpec& spec, std::size_t count,
                                              std::uint64_t seed) {
  spec.validate();
  const auto words = concept_words(spec);
  std::vector<PoseSequence> motifs;
  for (std::size_t k = 0; k < spec.concepts; ++k) motifs.push_back(concept_motif(spec, k));

  Rng rng = derive_rng(seed, {hash_str("synthetic")});
  std::uniform_int_distribution<std::size_t> length(spec.min_length, spec.max_length);
  std::uniform_int_distribution<std::size_t> pick(0, spec.concepts - 1);
  std::normal_distribution<double> jitter(0.0, spec.noise);
  const std::size_t width = std::to_string(count).size();
  std::vector<SyntheticSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    SyntheticSample s;
    std::string num = std::to_string(i);
    s.id = "syn" + std::string(width - num.size(), '0') + num;
    const std::size_t n = length(rng);
    std::vector<std::string> text;
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t k = pick(rng);
      s.concepts.push_back(k);
      s.pose.frames.insert(s.pose.frames.end(), motifs[k].frames.begin(), motifs[k].frames.end());
      text.insert(text.end(), words[k].begin(), words[k].end());
    }
    s.pose.num_frames = n * spec.frames_per_concept;
    s.pose.sample_id = s.id;
    if (spec.noise > 0.0) {
      for (std::size_t j = 0; j < s.pose.frames.size(); ++j) {
        if (j % kPoseChannels != 2) s.pose.frames[j] += jitter(rng);
      }
    }
    s.text = join(text, " ");
    out.push_back(std::move(s));
  }
  return out;
}

DatasetManifest generate_synthetic(const SyntheticSpec& spec, std::size_t count,
                                   std::uint64_t seed, const std::filesystem::path& out_dir,
                                   PoseFormat format, const std::string& split) {
  const auto samples = generate_samples(spec, count, seed);
  std::filesystem::create_directories(out_dir / "poses");
  DatasetManifest manifest;
  manifest.split = split;
  std::vector<std::pair<std::string, std::string>> rows;
  const char* ext = format == PoseFormat::Packed ? ".pseq" : ".jsonl";
  for (const SyntheticSample& s : samples) {
    const auto pose_path = out_dir / "poses" / (s.id + ext);
    save_pose(s.pose, pose_path, format);
    manifest.samples.push_back({s.id, pose_path, s.text});
    rows.emplace_back(s.id, s.text);
  }
  write_translations(rows, out_dir / "translations.tsv");
  manifest.save(out_dir / "manifest.json");
  return manifest;
}

}  // namespace slt
