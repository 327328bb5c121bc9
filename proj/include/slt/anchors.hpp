#pragma once

// Conceptual-anchor mining: word tokenization, part-of-speech tagging,
// frequency filtering and embedding initialization for the anchor table.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace slt {

struct TaggedSentence {
  std::vector<std::string> tokens;  // lowercased
  std::vector<std::string> tags;    // Penn tags, same length as tokens
  std::size_t sample_id = 0;
};

// Case-preserving word tokenization: punctuation becomes separate tokens and
// contractions split at the apostrophe ("it's" -> "it", "'s").
std::vector<std::string> split_tokens(std::string_view text);
// split_tokens, lowercased.
std::vector<std::string> tokenize(std::string_view text);

// Word -> most frequent Penn tag.
class Lexicon {
 public:
  // Common English function and content words.
  static const Lexicon& builtin();
  // TSV "word<TAB>tag" per line.
  static Lexicon load(const std::filesystem::path& path);

  void add(std::string word, std::string tag);
  std::optional<std::string> lookup(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

// Lexicon lookup (case-insensitive), then suffix heuristics: -ing -> VBG,
// -ed -> VBD, -s over a known noun stem -> NNS, capitalized -> NNP, else NN.
// Punctuation and numbers get their Penn tags.
std::vector<std::string> pos_tag(std::span<const std::string> tokens, const Lexicon& lexicon);

std::vector<TaggedSentence> tag_corpus(const std::vector<std::string>& sentences,
                                       const Lexicon& lexicon);
// Pre-tagged TSV: token<TAB>tag per line, blank line between sentences.
std::vector<TaggedSentence> read_pretagged(std::istream& in);

enum class WordTypePreset { V, N, VN, VNA };
WordTypePreset parse_word_type_preset(std::string_view name);
std::string preset_name(WordTypePreset preset);
std::set<std::string> preset_tags(WordTypePreset preset);

struct AnchorVocab {
  std::vector<std::string> words;  // index = anchor id
  std::vector<std::size_t> counts;
  std::vector<std::size_t> doc_counts;
  std::set<std::string> tagset_used;

  std::size_t size() const { return words.size(); }
  std::optional<std::size_t> index_of(std::string_view word) const;

  // TSV word<TAB>count<TAB>doc_count.
  void save_tsv(const std::filesystem::path& path) const;
  static AnchorVocab load_tsv(const std::filesystem::path& path);
};

// Keeps a word iff some occurrence is tagged in `tagset`, its total token
// count is > min_count, and it appears in fewer than
// max_doc_fraction * corpus.size() samples. Ordered by descending count, ties
// alphabetical.
AnchorVocab select_anchors(const std::vector<TaggedSentence>& corpus,
                           const std::set<std::string>& tagset, std::size_t min_count = 10,
                           double max_doc_fraction = 0.9);

struct EmbeddingInit {
  std::size_t dim = 0;
  std::vector<double> matrix;  // words x dim, row-major
  std::vector<bool> oov_mask;  // true when the word had no pretrained vector
};

// Reads a GloVe-format text file ("word v1 ... vd"). Rows for vocabulary words
// are copied verbatim; misses are uniform in [-0.1, 0.1] from `seed`. With no
// path every row is random at width default_dim.
EmbeddingInit load_pretrained_embeddings(const std::optional<std::filesystem::path>& path,
                                         const AnchorVocab& vocab, std::size_t default_dim,
                                         std::uint64_t seed);

}  // namespace slt
