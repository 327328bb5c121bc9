#include "slt/anchors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include "slt/errors.hpp"
#include "slt/rng.hpp"
#include "slt/text.hpp"

namespace slt {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

bool is_punct_tag_char(char c) { return c == '.' || c == '!' || c == '?'; }

bool all_digits(std::string_view s) {
  bool digit = false;
  for (char c : s) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit = true;
    } else if (c != '.' && c != ',') {
      return false;
    }
  }
  return digit;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_noun_tag(std::string_view tag) { return tag == "NN" || tag == "NNS"; }

std::string trim_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (is_word_byte(c)) {
      std::size_t j = i;
      while (j < n && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
      out.emplace_back(text.substr(i, j - i));
      i = j;
      // Clitic: apostrophe followed by letters stays attached to its suffix.
      if (i + 1 < n && text[i] == '\'' && std::isalpha(static_cast<unsigned char>(text[i + 1]))) {
        std::size_t k = i + 1;
        while (k < n && is_word_byte(static_cast<unsigned char>(text[k]))) ++k;
        out.emplace_back(text.substr(i, k - i));
        i = k;
      }
      continue;
    }
    std::size_t j = i + 1;
    while (j < n && text[j] == text[i]) ++j;
    out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens = split_tokens(text);
  for (std::string& t : tokens) t = to_lower_ascii(t);
  return tokens;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open lexicon " + path.string());
  Lexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected word<TAB>tag");
    }
    lex.add(line.substr(0, tab), line.substr(tab + 1));
  }
  return lex;
}

void Lexicon::add(std::string word, std::string tag) {
  entries_[to_lower_ascii(word)] = std::move(tag);
}

std::optional<std::string> Lexicon::lookup(std::string_view word) const {
  auto it = entries_.find(to_lower_ascii(std::string(word)));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> pos_tag(std::span<const std::string> tokens, const Lexicon& lexicon) {
  std::vector<std::string> tags;
  tags.reserve(tokens.size());
  for (const std::string& tok : tokens) {
    if (auto hit = lexicon.lookup(tok)) {
      tags.push_back(*hit);
      continue;
    }
    const auto first = static_cast<unsigned char>(tok.empty() ? ' ' : tok[0]);
    if (!is_word_byte(first) && first != '\'') {
      if (is_punct_tag_char(tok[0])) {
        tags.emplace_back(".");
      } else if (tok[0] == ',') {
        tags.emplace_back(",");
      } else if (tok[0] == ';' || tok[0] == ':' || tok[0] == '-') {
        tags.emplace_back(":");
      } else {
        tags.emplace_back("SYM");
      }
      continue;
    }
    if (all_digits(tok)) {
      tags.emplace_back("CD");
      continue;
    }
    const std::string lower = to_lower_ascii(tok);
    if (lower.size() > 4 && ends_with(lower, "ing")) {
      tags.emplace_back("VBG");
    } else if (lower.size() > 3 && ends_with(lower, "ed")) {
      tags.emplace_back("VBD");
    } else if (lower.size() > 2 && ends_with(lower, "s") &&
               [&] {
                 auto stem = lexicon.lookup(lower.substr(0, lower.size() - 1));
                 if (!stem && ends_with(lower, "es")) {
                   stem = lexicon.lookup(lower.substr(0, lower.size() - 2));
                 }
                 return stem && is_noun_tag(*stem);
               }()) {
      tags.emplace_back("NNS");
    } else if (std::isupper(first)) {
      tags.emplace_back("NNP");
    } else {
      tags.emplace_back("NN");
    }
  }
  return tags;
}

std::vector<TaggedSentence> tag_corpus(const std::vector<std::string>& sentences,
                                       const Lexicon& lexicon) {
  std::vector<TaggedSentence> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    // Tagging sees the original case so capitalization can signal NNP.
    std::vector<std::string> raw = split_tokens(sentences[i]);
    TaggedSentence s;
    s.tags = pos_tag(raw, lexicon);
    for (std::string& t : raw) s.tokens.push_back(to_lower_ascii(t));
    s.sample_id = i;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TaggedSentence> read_pretagged(std::istream& in) {
  std::vector<TaggedSentence> out;
  TaggedSentence cur;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (cur.tokens.empty()) return;
    cur.sample_id = out.size();
    out.push_back(std::move(cur));
    cur = TaggedSentence{};
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim_cr(line);
    if (line.empty()) {
      flush();
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw FormatError("pretagged line " + std::to_string(line_no) + ": expected token<TAB>tag");
    }
    cur.tokens.push_back(to_lower_ascii(line.substr(0, tab)));
    cur.tags.push_back(line.substr(tab + 1));
  }
  flush();
  return out;
}

WordTypePreset parse_word_type_preset(std::string_view name) {
  const std::string upper = [&] {
    std::string s(name);
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
  }();
  if (upper == "V") return WordTypePreset::V;
  if (upper == "N") return WordTypePreset::N;
  if (upper == "VN") return WordTypePreset::VN;
  if (upper == "VNA") return WordTypePreset::VNA;
  throw ParameterError("unknown word type preset '" + std::string(name) +
                       "' (expected V, N, VN or VNA)");
}

std::string preset_name(WordTypePreset preset) {
  switch (preset) {
    case WordTypePreset::V: return "V";
    case WordTypePreset::N: return "N";
    case WordTypePreset::VN: return "VN";
    case WordTypePreset::VNA: return "VNA";
  }
  return "?";
}

std::set<std::string> preset_tags(WordTypePreset preset) {
  const std::set<std::string> verbs{"VB", "VBD", "VBG", "VBN", "VBP", "VBZ"};
  const std::set<std::string> nouns{"NN", "NNP", "NNS"};
  std::set<std::string> out;
  if (preset != WordTypePreset::N) out.insert(verbs.begin(), verbs.end());
  if (preset != WordTypePreset::V) out.insert(nouns.begin(), nouns.end());
  if (preset == WordTypePreset::VNA) {
    out.insert({"JJ", "JJR", "JJS", "RB", "RBR", "RBS"});
  }
  return out;
}

std::optional<std::size_t> AnchorVocab::index_of(std::string_view word) const {
  auto it = std::find(words.begin(), words.end(), word);
  if (it == words.end()) return std::nullopt;
  return static_cast<std::size_t>(it - words.begin());
}

void AnchorVocab::save_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path.string());
  for (std::size_t i = 0; i < words.size(); ++i) {
    out << words[i] << '\t' << counts[i] << '\t' << doc_counts[i] << '\n';
  }
}

AnchorVocab AnchorVocab::load_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open anchor vocab " + path.string());
  AnchorVocab v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim_cr(line);
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string word, count, docs;
    if (!std::getline(fields, word, '\t') || !std::getline(fields, count, '\t') ||
        !std::getline(fields, docs, '\t')) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected word<TAB>count<TAB>doc_count");
    }
    try {
      v.words.push_back(word);
      v.counts.push_back(std::stoull(count));
      v.doc_counts.push_back(std::stoull(docs));
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad count");
    }
  }
  return v;
}

AnchorVocab select_anchors(const std::vector<TaggedSentence>& corpus,
                           const std::set<std::string>& tagset, std::size_t min_count,
                           double max_doc_fraction) {
  struct Stats {
    std::size_t count = 0;
    std::size_t docs = 0;
    std::size_t last_doc = SIZE_MAX;
    bool tagged = false;
  };
  AnchorVocab vocab;
  vocab.tagset_used = tagset;
  if (corpus.empty() || tagset.empty()) return vocab;

  std::map<std::string, Stats, std::less<>> stats;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const TaggedSentence& s = corpus[d];
    if (s.tokens.size() != s.tags.size()) {
      throw ShapeError("sentence " + std::to_string(d) + " has " +
                       std::to_string(s.tokens.size()) + " tokens but " +
                       std::to_string(s.tags.size()) + " tags");
    }
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      Stats& st = stats[s.tokens[i]];
      ++st.count;
      if (st.last_doc != d) {
        ++st.docs;
        st.last_doc = d;
      }
      if (tagset.count(s.tags[i])) st.tagged = true;
    }
  }

  const double doc_limit = max_doc_fraction * static_cast<double>(corpus.size());
  std::vector<std::pair<std::string, const Stats*>> kept;
  for (const auto& [word, st] : stats) {
    if (st.tagged && st.count > min_count && static_cast<double>(st.docs) < doc_limit) {
      kept.emplace_back(word, &st);
    }
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second->count > b.second->count;
  });
  for (const auto& [word, st] : kept) {
    vocab.words.push_back(word);
    vocab.counts.push_back(st->count);
    vocab.doc_counts.push_back(st->docs);
  }
  return vocab;
}

EmbeddingInit load_pretrained_embeddings(const std::optional<std::filesystem::path>& path,
                                         const AnchorVocab& vocab, std::size_t default_dim,
                                         std::uint64_t seed) {
  std::map<std::string, std::vector<double>, std::less<>> found;
  std::size_t dim = default_dim;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw LoadError("cannot open embeddings " + path->string());
    std::map<std::string_view, std::size_t, std::less<>> wanted;
    for (std::size_t i = 0; i < vocab.words.size(); ++i) wanted.emplace(vocab.words[i], i);
    std::size_t width = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      line = trim_cr(line);
      std::vector<std::string> fields = split_whitespace(line);
      if (fields.empty()) continue;
      const std::size_t w = fields.size() - 1;
      if (w == 0) {
        throw FormatError(path->string() + ":" + std::to_string(line_no) + ": no vector values");
      }
      if (width == 0) {
        width = w;
      } else if (w != width) {
        throw FormatError(path->string() + ":" + std::to_string(line_no) + ": vector width " +
                          std::to_string(w) + " differs from " + std::to_string(width));
      }
      if (!wanted.count(fields[0]) || found.count(fields[0])) continue;
      std::vector<double> row(w);
      for (std::size_t k = 0; k < w; ++k) {
        try {
          std::size_t used = 0;
          row[k] = std::stod(fields[k + 1], &used);
          if (used != fields[k + 1].size()) throw std::invalid_argument("trailing");
        } catch (const std::logic_error&) {
          throw FormatError(path->string() + ":" + std::to_string(line_no) +
                            ": bad number '" + fields[k + 1] + "'");
        }
      }
      found.emplace(fields[0], std::move(row));
    }
    if (width == 0) throw FormatError(path->string() + ": no vectors");
    dim = width;
  }
  if (dim == 0) throw ParameterError("embedding width must be positive");

  EmbeddingInit init;
  init.dim = dim;
  init.matrix.assign(vocab.words.size() * dim, 0.0);
  init.oov_mask.assign(vocab.words.size(), true);
  Rng rng = derive_rng(seed, {hash_str("anchor_embedding")});
  for (std::size_t i = 0; i < vocab.words.size(); ++i) {
    double* row = init.matrix.data() + i * dim;
    auto it = found.find(vocab.words[i]);
    if (it != found.end()) {
      std::copy(it->second.begin(), it->second.end(), row);
      init.oov_mask[i] = false;
    } else {
      for (std::size_t k = 0; k < dim; ++k) row[k] = uniform(rng, -0.1, 0.1);
    }
  }
  return init;
}

}  // namespace slt
