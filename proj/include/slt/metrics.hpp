#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace slt {

// Corpus-level translation quality scores, all in [0, 1].
struct EvalReport {
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  double bleu3 = 0.0;
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  std::size_t sentences = 0;

  nlohmann::json to_json() const;
};

// Lowercased whitespace tokenization used by every metric.
std::vector<std::string> metric_tokens(std::string_view text);

// Corpus BLEU-1..max_n with clipped n-gram counts and brevity penalty
// exp(min(0, 1 - r/c)). Element k holds BLEU-(k+1). Throws ParameterError on
// an empty corpus or mismatched list lengths.
std::vector<double> bleu(const std::vector<std::string>& hypotheses,
                         const std::vector<std::string>& references, std::size_t max_n = 4);

// Length of the longest common token subsequence.
std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Mean over pairs of the LCS-based F1.
double rouge_l_f1(const std::vector<std::string>& hypotheses,
                  const std::vector<std::string>& references);

EvalReport score_corpus(const std::vector<std::string>& hypotheses,
                        const std::vector<std::string>& references);

}  // namespace slt
