#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "slt/errors.hpp"
#include "metrics_golden.hpp"
#include "slt/metrics.hpp"

using namespace slt;
using namespace slt::testing;

TEST(MetricsTest, GoldenPairsMatchOracle) {
  for (const auto& g : kGolden) {
    const auto b = bleu({g.hyp}, {g.ref});
    for (std::size_t n = 0; n < 4; ++n) EXPECT_NEAR(b[n], g.bleu[n], 1e-6) << g.hyp << " n=" << n + 1;
    EXPECT_NEAR(rouge_l_f1({g.hyp}, {g.ref}), g.rouge, 1e-6) << g.hyp;
  }
}

TEST(MetricsTest, GoldenCorpusMatchesOracle) {
  std::vector<std::string> hyps, refs;
  for (const auto& g : kGolden) {
    hyps.emplace_back(g.hyp);
    refs.emplace_back(g.ref);
  }
  const EvalReport r = score_corpus(hyps, refs);
  EXPECT_NEAR(r.bleu1, kCorpusBleu[0], 1e-6);
  EXPECT_NEAR(r.bleu2, kCorpusBleu[1], 1e-6);
  EXPECT_NEAR(r.bleu3, kCorpusBleu[2], 1e-6);
  EXPECT_NEAR(r.bleu4, kCorpusBleu[3], 1e-6);
  EXPECT_NEAR(r.rouge_l, kCorpusRouge, 1e-6);
  EXPECT_EQ(r.sentences, 20u);
}

TEST(MetricsTest, IdenticalAndDisjoint) {
  std::vector<std::string> refs = {"the quick brown fox jumps", "over the lazy dog again"};
  EXPECT_DOUBLE_EQ(bleu(refs, refs)[3], 1.0);
  EXPECT_DOUBLE_EQ(rouge_l_f1(refs, refs), 1.0);
  const auto b = bleu({"aa bb cc dd"}, {"ee ff gg hh"});
  for (double v : b) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(rouge_l_f1({"aa bb"}, {"cc dd"}), 0.0);
}

TEST(MetricsTest, HandComputedCases) {
  // LCS("the cat sat", "the cat on the mat") = 2 -> P=2/3, R=2/5, F1=0.5
  EXPECT_NEAR(rouge_l_f1({"the cat sat"}, {"the cat on the mat"}), 0.5, 1e-12);
  // One clipped unigram match out of four; hypothesis longer than reference so
  // the brevity penalty is 1.
  EXPECT_NEAR(bleu({"the the the the"}, {"the cat"})[0], 0.25, 1e-12);
  // Shorter hypothesis: BP = exp(1 - 6/3)
  EXPECT_NEAR(bleu({"snow falls today"}, {"snow falls today in the north"})[0], std::exp(-1.0),
              1e-12);
}

TEST(MetricsTest, ErrorsAndOrderInvariance) {
  EXPECT_THROW(bleu({}, {}), ParameterError);
  EXPECT_THROW(rouge_l_f1({}, {}), ParameterError);
  EXPECT_THROW(bleu({"a"}, {}), ParameterError);
  std::vector<std::string> hyps, refs;
  for (const auto& g : kGolden) {
    hyps.emplace_back(g.hyp);
    refs.emplace_back(g.ref);
  }
  std::vector<std::size_t> perm(hyps.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::rotate(perm.begin(), perm.begin() + 7, perm.end());
  std::vector<std::string> h2, r2;
  for (std::size_t i : perm) {
    h2.push_back(hyps[i]);
    r2.push_back(refs[i]);
  }
  const EvalReport a = score_corpus(hyps, refs), b = score_corpus(h2, r2);
  EXPECT_NEAR(a.bleu4, b.bleu4, 1e-12);
  EXPECT_NEAR(a.rouge_l, b.rouge_l, 1e-12);
  for (double v : {a.bleu1, a.bleu2, a.bleu3, a.bleu4, a.rouge_l}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}
