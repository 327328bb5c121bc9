#include "slt/bpe.hpp"

#include <fstream>
#include <limits>
#include <set>

#include "slt/errors.hpp"
#include "slt/text.hpp"

namespace slt {

namespace {

const char* const kSpecialNames[kNumSpecials] = {"<pad>", "<s>", "</s>", "<unk>"};

std::vector<std::string> initial_symbols(std::string_view word) {
  std::vector<std::string> syms = utf8_chars(word);
  if (!syms.empty()) syms.back() += kEndOfWord;
  return syms;
}

bool ends_with_eow(const std::string& tok) {
  return tok.size() >= kEndOfWord.size() &&
         tok.compare(tok.size() - kEndOfWord.size(), kEndOfWord.size(), kEndOfWord) == 0;
}

}  // namespace

void BpeModel::add_token(const std::string& tok) {
  if (vocab_.emplace(tok, id_to_token_.size()).second) id_to_token_.push_back(tok);
}

BpeModel BpeModel::train(const std::vector<std::string>& corpus, std::size_t target_vocab_size) {
  std::map<std::string, std::size_t> word_freq;
  for (const std::string& line : corpus)
    for (const std::string& w : split_whitespace(line)) ++word_freq[w];
  if (word_freq.empty()) throw ParameterError("bpe: cannot train on an empty corpus");

  std::set<std::string> chars;
  for (const auto& [w, _] : word_freq)
    for (const std::string& c : utf8_chars(w)) chars.insert(c);

  BpeModel model;
  for (const char* s : kSpecialNames) model.add_token(s);
  std::set<std::string> base;
  for (const std::string& c : chars) {
    base.insert(c);
    base.insert(c + std::string(kEndOfWord));
  }
  for (const std::string& s : base) model.add_token(s);
  model.base_symbols_ = base.size();
  if (target_vocab_size < model.vocab_size()) {
    throw ParameterError("bpe: target vocabulary " + std::to_string(target_vocab_size) +
                         " is smaller than the " + std::to_string(model.vocab_size()) +
                         " base symbols and specials");
  }

  std::vector<std::pair<std::vector<std::string>, std::size_t>> words;
  for (const auto& [w, f] : word_freq) words.emplace_back(initial_symbols(w), f);

  while (model.vocab_size() < target_vocab_size) {
    std::map<Merge, std::size_t> pair_counts;
    for (const auto& [syms, f] : words)
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) pair_counts[{syms[i], syms[i + 1]}] += f;
    // std::map iterates in lexicographic order, so the first maximum wins ties.
    const Merge* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [pair, count] : pair_counts) {
      if (count > best_count) {
        best = &pair;
        best_count = count;
      }
    }
    if (best == nullptr || best_count < 2) break;
    const Merge merge = *best;
    const std::string joined = merge.first + merge.second;
    for (auto& [syms, f] : words) {
      std::vector<std::string> next;
      next.reserve(syms.size());
      for (std::size_t i = 0; i < syms.size(); ++i) {
        if (i + 1 < syms.size() && syms[i] == merge.first && syms[i + 1] == merge.second) {
          next.push_back(joined);
          ++i;
        } else {
          next.push_back(syms[i]);
        }
      }
      syms = std::move(next);
    }
    model.merge_rank_.emplace(merge, model.merges_.size());
    model.merges_.push_back(merge);
    model.add_token(joined);
  }
  return model;
}

std::vector<std::string> BpeModel::segment_word(std::string_view word) const {
  std::vector<std::string> syms = initial_symbols(word);
  while (syms.size() > 1) {
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    std::size_t best_at = 0;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      auto it = merge_rank_.find({syms[i], syms[i + 1]});
      if (it != merge_rank_.end() && it->second < best_rank) {
        best_rank = it->second;
        best_at = i;
      }
    }
    if (best_rank == std::numeric_limits<std::size_t>::max()) break;
    const Merge& m = merges_[best_rank];
    std::vector<std::string> next;
    next.reserve(syms.size());
    for (std::size_t i = 0; i < syms.size(); ++i) {
      if (i >= best_at && i + 1 < syms.size() && syms[i] == m.first && syms[i + 1] == m.second) {
        next.push_back(m.first + m.second);
        ++i;
      } else {
        next.push_back(syms[i]);
      }
    }
    syms = std::move(next);
  }
  return syms;
}

std::vector<std::size_t> BpeModel::encode(std::string_view text, bool add_specials) const {
  std::vector<std::size_t> ids;
  if (add_specials) ids.push_back(kBosId);
  for (const std::string& w : split_whitespace(text)) {
    for (const std::string& s : segment_word(w)) {
      auto it = vocab_.find(s);
      ids.push_back(it == vocab_.end() ? kUnkId : it->second);
    }
  }
  if (add_specials) ids.push_back(kEosId);
  return ids;
}

const std::string& BpeModel::token(std::size_t id) const {
  if (id >= id_to_token_.size()) {
    throw IndexError("bpe: token id " + std::to_string(id) + " out of range for vocabulary of " +
                     std::to_string(id_to_token_.size()));
  }
  return id_to_token_[id];
}

std::string BpeModel::decode(std::span<const std::size_t> ids) const {
  std::string out;
  for (std::size_t id : ids) {
    const std::string& tok = token(id);
    if (id < kNumSpecials) continue;
    if (ends_with_eow(tok)) {
      out.append(tok, 0, tok.size() - kEndOfWord.size());
      out += ' ';
    } else {
      out += tok;
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

nlohmann::json BpeModel::to_json() const {
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& [a, b] : merges_) merges.push_back({a, b});
  nlohmann::json vocab = nlohmann::json::object();
  for (const auto& [tok, id] : vocab_) vocab[tok] = id;
  return {{"merges", merges}, {"vocab", vocab}, {"base_symbols", base_symbols_}};
}

BpeModel BpeModel::from_json(const nlohmann::json& j) {
  BpeModel model;
  try {
    const auto& vocab = j.at("vocab");
    model.id_to_token_.assign(vocab.size(), {});
    for (auto it = vocab.begin(); it != vocab.end(); ++it) {
      const std::size_t id = it.value().get<std::size_t>();
      if (id >= vocab.size() || !model.id_to_token_[id].empty()) {
        throw FormatError("bpe: vocabulary ids must be a permutation of 0..V-1");
      }
      model.id_to_token_[id] = it.key();
      model.vocab_[it.key()] = id;
    }
    for (const auto& m : j.at("merges")) {
      Merge merge{m.at(0).get<std::string>(), m.at(1).get<std::string>()};
      model.merge_rank_.emplace(merge, model.merges_.size());
      model.merges_.push_back(std::move(merge));
    }
    model.base_symbols_ = j.value("base_symbols", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bpe: malformed model: ") + e.what());
  }
  for (std::size_t i = 0; i < kNumSpecials; ++i) {
    if (model.id_to_token_.size() <= i || model.id_to_token_[i] != kSpecialNames[i]) {
      throw FormatError("bpe: special token ids must be <pad>=0 <s>=1 </s>=2 <unk>=3");
    }
  }
  return model;
}

void BpeModel::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw LoadError("bpe: cannot write " + path.string());
  os << to_json().dump(1) << '\n';
}

BpeModel BpeModel::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw LoadError("bpe: cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bpe: " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace slt
