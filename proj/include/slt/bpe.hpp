#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace slt {

// Fixed special token ids shared by every model.
inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kBosId = 1;
inline constexpr std::size_t kEosId = 2;
inline constexpr std::size_t kUnkId = 3;
inline constexpr std::size_t kNumSpecials = 4;

inline constexpr std::string_view kEndOfWord = "</w>";

// Byte-pair-encoding subword model over UTF-8 code points.
//
// Words are whitespace-delimited; the last symbol of every word carries the
// "</w>" suffix so decoding can restore spaces. The base vocabulary holds both
// the plain and the word-final form of every training character, so any
// known character encodes in any position.
class BpeModel {
 public:
  using Merge = std::pair<std::string, std::string>;

  // Repeatedly merges the most frequent adjacent pair (ties: lexicographically
  // smallest pair) until the vocabulary reaches target_vocab_size or no pair
  // occurs at least twice.
  static BpeModel train(const std::vector<std::string>& corpus, std::size_t target_vocab_size);

  std::vector<std::size_t> encode(std::string_view text, bool add_specials) const;
  std::string decode(std::span<const std::size_t> ids) const;

  std::size_t vocab_size() const { return id_to_token_.size(); }
  const std::vector<Merge>& merges() const { return merges_; }
  const std::string& token(std::size_t id) const;
  // Number of symbols before any merge (plain and word-final characters).
  std::size_t base_symbol_count() const { return base_symbols_; }

  nlohmann::json to_json() const;
  static BpeModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static BpeModel load(const std::filesystem::path& path);

 private:
  std::vector<std::string> segment_word(std::string_view word) const;
  void add_token(const std::string& tok);

  std::vector<Merge> merges_;
  std::map<Merge, std::size_t> merge_rank_;
  std::map<std::string, std::size_t> vocab_;
  std::vector<std::string> id_to_token_;
  std::size_t base_symbols_ = 0;
};

}  // namespace slt
