#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "slt/anchors.hpp"
#include "slt/errors.hpp"

namespace fs = std::filesystem;
using namespace slt;

namespace {

const fs::path kData = SLT_TEST_DATA_DIR;

std::vector<TaggedSentence> load_fixture_corpus() {
  std::ifstream in(kData / "anchor_corpus.tsv");
  return read_pretagged(in);
}

TaggedSentence sentence(std::vector<std::string> tokens, std::vector<std::string> tags,
                        std::size_t id = 0) {
  return TaggedSentence{std::move(tokens), std::move(tags), id};
}

fs::path write_temp(const std::string& name, const std::string& body) {
  fs::path p = fs::temp_directory_path() / ("slt_anchors_" + name);
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST(Tokenize, Examples) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("Snow falls."), (std::vector<std::string>{"snow", "falls", "."}));
  EXPECT_EQ(tokenize("it's cold"), (std::vector<std::string>{"it", "'s", "cold"}));
  EXPECT_EQ(tokenize("We don't know, really?!"),
            (std::vector<std::string>{"we", "don", "'t", "know", ",", "really", "?", "!"}));
  EXPECT_EQ(tokenize("wait..."), (std::vector<std::string>{"wait", "..."}));
  EXPECT_EQ(split_tokens("Paris"), std::vector<std::string>{"Paris"});
}

TEST(PosTag, LexiconAndSuffixRules) {
  Lexicon lex;
  lex.add("snow", "NN");
  lex.add("dog", "NN");
  const std::vector<std::string> toks{"snow", "blorping", "jumped", "dogs", "Berlin", "zorp",
                                      ".", ",", "42"};
  EXPECT_EQ(pos_tag(toks, lex), (std::vector<std::string>{"NN", "VBG", "VBD", "NNS", "NNP", "NN",
                                                          ".", ",", "CD"}));
  EXPECT_EQ(pos_tag(std::vector<std::string>{"Snow"}, lex), std::vector<std::string>{"NN"});
}

TEST(PosTag, BuiltinCoversCommonWords) {
  const Lexicon& lex = Lexicon::builtin();
  EXPECT_GT(lex.size(), 300u);
  EXPECT_EQ(lex.lookup("the"), "DT");
  EXPECT_EQ(lex.lookup("SNOW"), "NN");
  auto tagged = tag_corpus({"Snow falls in Berlin."}, lex);
  ASSERT_EQ(tagged.size(), 1u);
  EXPECT_EQ(tagged[0].tokens, (std::vector<std::string>{"snow", "falls", "in", "berlin", "."}));
  EXPECT_EQ(tagged[0].tags, (std::vector<std::string>{"NN", "VBZ", "IN", "NNP", "."}));
}

TEST(PosTag, LexiconFile) {
  auto p = write_temp("lex.tsv", "# comment\nblorf\tVB\n\nzing\tNN\r\n");
  Lexicon lex = Lexicon::load(p);
  EXPECT_EQ(lex.size(), 2u);
  EXPECT_EQ(lex.lookup("zing"), "NN");
  auto bad = write_temp("lex_bad.tsv", "blorf VB\n");
  EXPECT_THROW(Lexicon::load(bad), FormatError);
  EXPECT_THROW(Lexicon::load("/nonexistent/lexicon.tsv"), LoadError);
}

TEST(Pretagged, ReadsSentences) {
  std::istringstream in("Snow\tNN\nfalls\tVBZ\n\n\nrain\tNN\n");
  auto corpus = read_pretagged(in);
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(corpus[0].tokens, (std::vector<std::string>{"snow", "falls"}));
  EXPECT_EQ(corpus[1].sample_id, 1u);
  std::istringstream bad("snow NN\n");
  EXPECT_THROW(read_pretagged(bad), FormatError);
}

TEST(Presets, TagSets) {
  EXPECT_EQ(preset_tags(WordTypePreset::V).size(), 6u);
  EXPECT_EQ(preset_tags(WordTypePreset::N), (std::set<std::string>{"NN", "NNP", "NNS"}));
  EXPECT_EQ(preset_tags(WordTypePreset::VN).size(), 9u);
  EXPECT_EQ(preset_tags(WordTypePreset::VNA).size(), 15u);
  EXPECT_EQ(parse_word_type_preset("vna"), WordTypePreset::VNA);
  EXPECT_EQ(preset_name(WordTypePreset::VN), "VN");
  EXPECT_THROW(parse_word_type_preset("X"), ParameterError);
}

TEST(SelectAnchors, CountOfExactlyTenIsExcluded) {
  std::vector<TaggedSentence> corpus;
  for (std::size_t i = 0; i < 20; ++i) {
    std::vector<std::string> toks{"filler" + std::to_string(i)};
    std::vector<std::string> tags{"NN"};
    if (i < 10) {
      toks.push_back("ten");
      tags.push_back("NN");
    }
    if (i < 11) {
      toks.push_back("eleven");
      tags.push_back("NN");
    }
    corpus.push_back(sentence(toks, tags, i));
  }
  AnchorVocab v = select_anchors(corpus, preset_tags(WordTypePreset::N));
  EXPECT_EQ(v.words, std::vector<std::string>{"eleven"});
  EXPECT_EQ(v.counts, std::vector<std::size_t>{11});
  EXPECT_EQ(v.doc_counts, std::vector<std::size_t>{11});
}

TEST(SelectAnchors, DocumentFractionAndTagFilter) {
  std::vector<TaggedSentence> corpus;
  for (std::size_t i = 0; i < 20; ++i) {
    std::vector<std::string> toks{"the", "word"}, tags{"DT", "NN"};
    if (i < 17) {
      toks.push_back("common");
      tags.push_back("NN");
    }
    if (i < 18) {
      toks.push_back("frequent");
      tags.push_back("NN");
    }
    corpus.push_back(sentence(toks, tags, i));
  }
  // 0.9 * 20 = 18: 17 docs kept, 18 docs dropped.
  AnchorVocab v = select_anchors(corpus, preset_tags(WordTypePreset::N));
  EXPECT_EQ(v.words, std::vector<std::string>{"common"});
  AnchorVocab v_all = select_anchors(corpus, preset_tags(WordTypePreset::N), 10, 1.01);
  EXPECT_EQ(v_all.words, (std::vector<std::string>{"word", "frequent", "common"}));
}

TEST(SelectAnchors, EmptyInputs) {
  EXPECT_EQ(select_anchors({}, preset_tags(WordTypePreset::VN)).size(), 0u);
  auto corpus = load_fixture_corpus();
  AnchorVocab v = select_anchors(corpus, {});
  EXPECT_EQ(v.size(), 0u);
}

TEST(SelectAnchors, MatchesBruteForceOracle) {
  auto corpus = load_fixture_corpus();
  ASSERT_EQ(corpus.size(), 100u);
  nlohmann::json expected;
  std::ifstream(kData / "anchor_expected.json") >> expected;
  for (auto preset : {WordTypePreset::V, WordTypePreset::N, WordTypePreset::VN,
                      WordTypePreset::VNA}) {
    SCOPED_TRACE(preset_name(preset));
    AnchorVocab v = select_anchors(corpus, preset_tags(preset));
    const auto& exp = expected.at(preset_name(preset));
    ASSERT_EQ(v.size(), exp.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_EQ(v.words[i], exp[i][0].get<std::string>());
      EXPECT_EQ(v.counts[i], exp[i][1].get<std::size_t>());
      EXPECT_EQ(v.doc_counts[i], exp[i][2].get<std::size_t>());
    }
  }
}

TEST(SelectAnchors, PermutationInvariant) {
  auto corpus = load_fixture_corpus();
  AnchorVocab base = select_anchors(corpus, preset_tags(WordTypePreset::VNA));
  std::mt19937 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(corpus.begin(), corpus.end(), rng);
    AnchorVocab v = select_anchors(corpus, preset_tags(WordTypePreset::VNA));
    EXPECT_EQ(v.words, base.words);
    EXPECT_EQ(v.counts, base.counts);
    EXPECT_EQ(v.doc_counts, base.doc_counts);
  }
}

TEST(SelectAnchors, PresetProperties) {
  auto corpus = load_fixture_corpus();
  auto vset = [&](WordTypePreset p) {
    AnchorVocab v = select_anchors(corpus, preset_tags(p));
    return std::set<std::string>(v.words.begin(), v.words.end());
  };
  auto v = vset(WordTypePreset::V), n = vset(WordTypePreset::N), vn = vset(WordTypePreset::VN);
  std::set<std::string> uni = v;
  uni.insert(n.begin(), n.end());
  EXPECT_EQ(uni, vn);

  const auto tags = preset_tags(WordTypePreset::VN);
  for (const std::string& w : vn) {
    std::size_t count = 0;
    bool tagged = false;
    for (const auto& s : corpus) {
      for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        if (s.tokens[i] != w) continue;
        ++count;
        tagged |= tags.count(s.tags[i]) > 0;
      }
    }
    EXPECT_TRUE(tagged) << w;
    EXPECT_GT(count, 10u) << w;
  }
}

TEST(AnchorVocab, TsvRoundTrip) {
  auto corpus = load_fixture_corpus();
  AnchorVocab v = select_anchors(corpus, preset_tags(WordTypePreset::VN));
  auto p = fs::temp_directory_path() / "slt_anchors_vocab.tsv";
  v.save_tsv(p);
  AnchorVocab back = AnchorVocab::load_tsv(p);
  EXPECT_EQ(back.words, v.words);
  EXPECT_EQ(back.counts, v.counts);
  EXPECT_EQ(back.doc_counts, v.doc_counts);
  EXPECT_EQ(back.index_of(v.words[1]), 1u);
  EXPECT_FALSE(back.index_of("nope").has_value());
}

TEST(Embeddings, DirectCopy) {
  AnchorVocab v;
  v.words = {"a"};
  auto p = write_temp("glove_a.txt", "a 1.0 2.0\n");
  EmbeddingInit e = load_pretrained_embeddings(p, v, 300, 1);
  EXPECT_EQ(e.dim, 2u);
  EXPECT_EQ(e.matrix, (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(e.oov_mask, std::vector<bool>{false});
}

TEST(Embeddings, OovWithinBounds) {
  AnchorVocab v;
  v.words = {"zzz"};
  auto p = write_temp("glove_a2.txt", "a 1.0 2.0\n");
  EmbeddingInit e = load_pretrained_embeddings(p, v, 300, 1);
  ASSERT_EQ(e.matrix.size(), 2u);
  for (double x : e.matrix) {
    EXPECT_GE(x, -0.1);
    EXPECT_LE(x, 0.1);
  }
  EXPECT_EQ(e.oov_mask, std::vector<bool>{true});
  EmbeddingInit again = load_pretrained_embeddings(p, v, 300, 1);
  EXPECT_EQ(again.matrix, e.matrix);
}

TEST(Embeddings, TenWordFixtureIsBitwiseEqual) {
  const std::vector<std::string> lines{
      "snow 0.1 -0.25 3.5e-3", "rain 1 2 3", "storm -0.000001 0.333333333333 7",
      "city 1e-8 -1e8 0",      "house 0.5 0.25 0.125", "dog 9.87654321 -1.2345 0.1",
      "walk 2.5 -2.5 0.3",     "falls 0.7 0.11 -0.9", "eat 1.1 2.2 3.3",
      "tree -0.1 -0.2 -0.3"};
  std::string body;
  AnchorVocab v;
  for (const auto& l : lines) {
    body += l + "\n";
    v.words.push_back(l.substr(0, l.find(' ')));
  }
  std::reverse(v.words.begin(), v.words.end());
  auto p = write_temp("glove10.txt", body);
  EmbeddingInit e = load_pretrained_embeddings(p, v, 300, 3);
  ASSERT_EQ(e.dim, 3u);
  for (const auto& l : lines) {
    std::istringstream in(l);
    std::string word;
    in >> word;
    const std::size_t row = *v.index_of(word);
    EXPECT_FALSE(e.oov_mask[row]);
    for (std::size_t k = 0; k < 3; ++k) {
      std::string field;
      in >> field;
      const double expected = std::strtod(field.c_str(), nullptr);
      EXPECT_EQ(std::memcmp(&e.matrix[row * 3 + k], &expected, sizeof(double)), 0) << word;
    }
  }
}

TEST(Embeddings, WidthMismatchNamesLine) {
  AnchorVocab v;
  v.words = {"a"};
  auto p = write_temp("glove_bad.txt", "a 1 2\nb 1 2\nc 1 2 3\n");
  try {
    load_pretrained_embeddings(p, v, 300, 1);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Embeddings, NoPathIsAllRandom) {
  AnchorVocab v;
  v.words = {"a", "b", "c"};
  EmbeddingInit e = load_pretrained_embeddings(std::nullopt, v, 16, 5);
  EXPECT_EQ(e.dim, 16u);
  EXPECT_EQ(e.matrix.size(), 48u);
  EXPECT_EQ(e.oov_mask, (std::vector<bool>{true, true, true}));
  EXPECT_TRUE(std::all_of(e.matrix.begin(), e.matrix.end(),
                          [](double x) { return x >= -0.1 && x <= 0.1; }));
}
