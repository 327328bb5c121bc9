#include "slt/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "slt/errors.hpp"

namespace slt {

namespace {

constexpr char kMagic[4] = {'P', 'S', 'E', 'Q'};
constexpr std::uint32_t kPackedVersion = 1;
constexpr std::size_t kFrameValues = kNumKeypoints * kPoseChannels;

std::string where(const std::string& sample_id, const std::filesystem::path& path) {
  return sample_id.empty() ? path.string() : "sample '" + sample_id + "' (" + path.string() + ")";
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
         std::uint32_t(b[3]) << 24;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {char(v & 0xff), char(v >> 8 & 0xff), char(v >> 16 & 0xff), char(v >> 24)};
  out.write(b, 4);
}

PoseSequence load_packed(std::istream& in, const std::string& loc) {
  in.seekg(4);
  const std::uint32_t version = read_u32(in);
  const std::uint32_t frames = read_u32(in);
  if (!in) throw LoadError(loc + ": truncated header");
  if (version != kPackedVersion) {
    throw LoadError(loc + ": unsupported packed pose version " + std::to_string(version));
  }
  PoseSequence seq;
  seq.num_frames = frames;
  seq.frames.resize(std::size_t{frames} * kFrameValues);
  std::vector<unsigned char> buf(seq.frames.size() * 4);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
    throw LoadError(loc + ": expected " + std::to_string(frames) + " frames, file is truncated");
  }
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const std::uint32_t bits = std::uint32_t(buf[4 * i]) | std::uint32_t(buf[4 * i + 1]) << 8 |
                               std::uint32_t(buf[4 * i + 2]) << 16 |
                               std::uint32_t(buf[4 * i + 3]) << 24;
    seq.frames[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return seq;
}

PoseSequence load_jsonl(std::istream& in, const std::string& loc) {
  PoseSequence seq;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json frame;
    try {
      frame = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw LoadError(loc + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!frame.is_array() || frame.size() != kNumKeypoints) {
      throw LoadError(loc + " line " + std::to_string(line_no) + ": expected 76 keypoints");
    }
    for (const auto& kp : frame) {
      if (!kp.is_array() || kp.size() != kPoseChannels) {
        throw LoadError(loc + " line " + std::to_string(line_no) +
                        ": keypoint must be [x, y, confidence]");
      }
      for (const auto& v : kp) {
        if (!v.is_number()) {
          throw LoadError(loc + " line " + std::to_string(line_no) + ": non-numeric value");
        }
        seq.frames.push_back(v.get<double>());
      }
    }
    ++seq.num_frames;
  }
  return seq;
}

}  // namespace

PoseSequence load_pose(const std::filesystem::path& path, const std::string& sample_id) {
  const std::string loc = where(sample_id, path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(loc + ": cannot open pose file");
  char head[4] = {};
  in.read(head, 4);
  const bool packed = in.gcount() == 4 && std::memcmp(head, kMagic, 4) == 0;
  in.clear();
  in.seekg(0);
  PoseSequence seq = packed ? load_packed(in, loc) : load_jsonl(in, loc);
  seq.sample_id = sample_id.empty() ? path.stem().string() : sample_id;
  try {
    seq.validate();
  } catch (const std::exception& e) {
    throw LoadError(loc + ": " + e.what());
  }
  return seq;
}

void save_pose(const PoseSequence& seq, const std::filesystem::path& path, PoseFormat format) {
  seq.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write pose file " + path.string());
  if (format == PoseFormat::Packed) {
    out.write(kMagic, 4);
    write_u32(out, kPackedVersion);
    write_u32(out, static_cast<std::uint32_t>(seq.num_frames));
    for (double v : seq.frames) write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    return;
  }
  for (std::size_t t = 0; t < seq.num_frames; ++t) {
    nlohmann::json frame = nlohmann::json::array();
    for (std::size_t v = 0; v < kNumKeypoints; ++v) {
      frame.push_back({seq.at(t, v, 0), seq.at(t, v, 1), seq.at(t, v, 2)});
    }
    out << frame.dump() << '\n';
  }
}

std::vector<std::size_t> subsample_indices(std::size_t frames, std::size_t cap) {
  if (cap == 0) throw ParameterError("frame cap must be positive");
  std::vector<std::size_t> idx;
  if (frames <= cap) {
    for (std::size_t i = 0; i < frames; ++i) idx.push_back(i);
    return idx;
  }
  const double step = static_cast<double>(frames) / static_cast<double>(cap);
  for (std::size_t i = 0; i < cap; ++i) {
    idx.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(i) * step)));
  }
  return idx;
}

PoseSequence apply_frame_cap(const PoseSequence& seq, std::size_t cap) {
  if (seq.num_frames <= cap) return seq;
  PoseSequence out;
  out.sample_id = seq.sample_id;
  for (std::size_t t : subsample_indices(seq.num_frames, cap)) {
    const auto first = seq.frames.begin() + static_cast<long>(t * kFrameValues);
    out.frames.insert(out.frames.end(), first, first + static_cast<long>(kFrameValues));
  }
  out.num_frames = cap;
  return out;
}

std::map<std::string, std::string> read_translations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open translations " + path.string());
  std::map<std::string, std::string> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected sample_id<TAB>text");
    }
    if (!rows.emplace(line.substr(0, tab), line.substr(tab + 1)).second) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": duplicate id '" +
                        line.substr(0, tab) + "'");
    }
  }
  return rows;
}

void write_translations(const std::vector<std::pair<std::string, std::string>>& rows,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path.string());
  for (const auto& [id, text] : rows) out << id << '\t' << text << '\n';
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open manifest " + path.string());
  const std::filesystem::path dir = path.parent_path();
  DatasetManifest m;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    m.split = j.value("split", "train");
    std::map<std::string, std::string> texts;
    if (j.contains("translations")) {
      texts = read_translations(dir / j["translations"].get<std::string>());
    }
    for (const auto& s : j.at("samples")) {
      ManifestEntry e;
      e.id = s.at("id").get<std::string>();
      e.pose = dir / s.at("pose").get<std::string>();
      if (s.contains("text")) {
        e.text = s["text"].get<std::string>();
      } else if (auto it = texts.find(e.id); it != texts.end()) {
        e.text = it->second;
      } else {
        throw LoadError("manifest " + path.string() + ": sample '" + e.id + "' has no text");
      }
      m.samples.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  validate();
  const std::filesystem::path dir = path.parent_path();
  nlohmann::json j;
  j["split"] = split;
  j["samples"] = nlohmann::json::array();
  for (const ManifestEntry& e : samples) {
    std::filesystem::path rel = e.pose;
    if (!dir.empty() && e.pose.is_relative() == dir.is_relative()) {
      rel = e.pose.lexically_relative(dir);
      if (rel.empty()) rel = e.pose;
    }
    j["samples"].push_back({{"id", e.id}, {"pose", rel.generic_string()}, {"text", e.text}});
  }
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write manifest " + path.string());
  out << j.dump(1) << '\n';
}

void DatasetManifest::validate() const {
  std::set<std::string> seen;
  for (const ManifestEntry& e : samples) {
    if (e.id.empty()) throw FormatError("manifest sample with empty id");
    if (!seen.insert(e.id).second) throw FormatError("duplicate sample id '" + e.id + "'");
  }
}

std::vector<std::string> DatasetManifest::texts() const {
  std::vector<std::string> out;
  for (const ManifestEntry& e : samples) out.push_back(e.text);
  return out;
}

std::vector<Sample> load_dataset(const DatasetManifest& manifest, std::size_t frame_cap) {
  manifest.validate();
  std::vector<Sample> out;
  out.reserve(manifest.samples.size());
  for (const ManifestEntry& e : manifest.samples) {
    if (!std::filesystem::exists(e.pose)) {
      throw LoadError("sample '" + e.id + "': pose file " + e.pose.string() + " not found");
    }
    out.push_back({e.id, apply_frame_cap(load_pose(e.pose, e.id), frame_cap), e.text});
  }
  return out;
}

}  // namespace slt
