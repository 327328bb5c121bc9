#include "slt/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "slt/errors.hpp"

namespace slt {

namespace {

void check_corpus(const std::vector<std::string>& hyps, const std::vector<std::string>& refs) {
  if (hyps.empty()) throw ParameterError("metrics: empty corpus");
  if (hyps.size() != refs.size()) {
    throw ParameterError("metrics: " + std::to_string(hyps.size()) + " hypotheses vs " +
                         std::to_string(refs.size()) + " references");
  }
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const std::vector<std::string>& toks, std::size_t n) {
  NgramCounts counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++counts[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)];
  }
  return counts;
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  return {{"bleu1", bleu1}, {"bleu2", bleu2},     {"bleu3", bleu3},
          {"bleu4", bleu4}, {"rouge_l", rouge_l}, {"sentences", sentences}};
}

std::vector<std::string> metric_tokens(std::string_view text) {
  std::string lowered(text);
  for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::istringstream is(lowered);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

std::vector<double> bleu(const std::vector<std::string>& hypotheses,
                         const std::vector<std::string>& references, std::size_t max_n) {
  check_corpus(hypotheses, references);
  if (max_n == 0) throw ParameterError("bleu: max_n must be positive");
  std::vector<std::size_t> matched(max_n, 0), total(max_n, 0);
  std::size_t hyp_len = 0, ref_len = 0;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto h = metric_tokens(hypotheses[s]);
    const auto r = metric_tokens(references[s]);
    hyp_len += h.size();
    ref_len += r.size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      const NgramCounts hc = count_ngrams(h, n);
      const NgramCounts rc = count_ngrams(r, n);
      for (const auto& [gram, c] : hc) {
        auto it = rc.find(gram);
        matched[n - 1] += std::min(c, it == rc.end() ? std::size_t{0} : it->second);
        total[n - 1] += c;
      }
    }
  }
  std::vector<double> scores(max_n, 0.0);
  if (hyp_len == 0) return scores;
  const double bp =
      std::exp(std::min(0.0, 1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len)));
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (matched[n - 1] == 0) {
      // Every higher order is zero too.
      break;
    }
    log_sum += std::log(static_cast<double>(matched[n - 1]) / static_cast<double>(total[n - 1]));
    scores[n - 1] = bp * std::exp(log_sum / static_cast<double>(n));
  }
  return scores;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_f1(const std::vector<std::string>& hypotheses,
                  const std::vector<std::string>& references) {
  check_corpus(hypotheses, references);
  double total = 0.0;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto h = metric_tokens(hypotheses[s]);
    const auto r = metric_tokens(references[s]);
    const double lcs = static_cast<double>(lcs_length(h, r));
    if (lcs == 0.0) continue;
    const double p = lcs / static_cast<double>(h.size());
    const double rec = lcs / static_cast<double>(r.size());
    total += 2.0 * p * rec / (p + rec);
  }
  return total / static_cast<double>(hypotheses.size());
}

EvalReport score_corpus(const std::vector<std::string>& hypotheses,
                        const std::vector<std::string>& references) {
  const auto b = bleu(hypotheses, references, 4);
  EvalReport report;
  report.bleu1 = b[0];
  report.bleu2 = b[1];
  report.bleu3 = b[2];
  report.bleu4 = b[3];
  report.rouge_l = rouge_l_f1(hypotheses, references);
  report.sentences = hypotheses.size();
  return report;
}

}  // namespace slt
