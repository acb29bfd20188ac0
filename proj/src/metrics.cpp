#include "lcnmt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lcnmt/error.hpp"

namespace lcnmt {
namespace {

template <typename Token>
using Sentence = std::vector<Token>;

template <typename Token>
NGramStats stats_of(const Sentence<Token>& hyp, const Sentence<Token>& ref) {
  NGramStats s;
  s.hyp_len = hyp.size();
  s.ref_len = ref.size();
  for (std::size_t n = 1; n <= 4; ++n) {
    if (ref.size() >= n) {
      std::map<Sentence<Token>, std::size_t> ref_counts;
      for (std::size_t i = 0; i + n <= ref.size(); ++i)
        ++ref_counts[Sentence<Token>(ref.begin() + i, ref.begin() + i + n)];
      std::map<Sentence<Token>, std::size_t> hyp_counts;
      for (std::size_t i = 0; i + n <= hyp.size(); ++i)
        ++hyp_counts[Sentence<Token>(hyp.begin() + i, hyp.begin() + i + n)];
      for (const auto& [gram, count] : hyp_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end())
          s.matches[n - 1] += std::min(count, it->second);
      }
    }
    if (hyp.size() >= n) s.totals[n - 1] = hyp.size() - n + 1;
  }
  return s;
}

// Number of times the n-gram starting at hyp[from] of length n occurs in
// tokens, and the first position it occurs at.
template <typename Token>
std::pair<std::size_t, std::size_t> ngram_occurrences(const Sentence<Token>& tokens,
                                                      const Sentence<Token>& gram) {
  std::size_t count = 0, first = 0;
  if (gram.size() > tokens.size()) return {0, 0};
  for (std::size_t i = 0; i + gram.size() <= tokens.size(); ++i) {
    if (std::equal(gram.begin(), gram.end(), tokens.begin() + i)) {
      if (count == 0) first = i;
      ++count;
    }
  }
  return {count, first};
}

template <typename Token>
std::size_t count_of(const Sentence<Token>& tokens, const Token& w) {
  return std::size_t(std::count(tokens.begin(), tokens.end(), w));
}

// Reference rank-alignment: direct correspondence for words unique in both
// sentences, then growing context windows (left before right at each size)
// that are unique in both; words that never disambiguate are dropped.
template <typename Token>
std::vector<std::size_t> rank_alignment(const Sentence<Token>& hyp,
                                        const Sentence<Token>& ref) {
  std::vector<std::size_t> worder;
  const std::size_t hyp_len = hyp.size();
  for (std::size_t i = 0; i < hyp_len; ++i) {
    const Token& w = hyp[i];
    std::size_t in_ref = count_of(ref, w);
    if (in_ref == 0) continue;
    if (in_ref == 1 && count_of(hyp, w) == 1) {
      worder.push_back(
          std::size_t(std::find(ref.begin(), ref.end(), w) - ref.begin()));
      continue;
    }
    const std::size_t max_window = std::max(i, hyp_len - i + 1);
    for (std::size_t window = 1; window < max_window; ++window) {
      bool matched = false;
      if (window <= i) {
        Sentence<Token> gram(hyp.begin() + (i - window), hyp.begin() + i + 1);
        auto [rc, rpos] = ngram_occurrences(ref, gram);
        if (rc == 1 && ngram_occurrences(hyp, gram).first == 1) {
          worder.push_back(rpos + window);
          matched = true;
        }
      }
      if (!matched && window + i + 1 <= hyp_len) {
        Sentence<Token> gram(hyp.begin() + i, hyp.begin() + i + window + 1);
        auto [rc, rpos] = ngram_occurrences(ref, gram);
        if (rc == 1 && ngram_occurrences(hyp, gram).first == 1) {
          worder.push_back(rpos);
          matched = true;
        }
      }
      if (matched) break;
    }
  }
  return worder;
}

template <typename Token>
real ribes_one(const Sentence<Token>& hyp, const Sentence<Token>& ref) {
  if (hyp.empty()) return 0.0;
  std::vector<std::size_t> worder = rank_alignment(hyp, ref);
  if (worder.size() < 2) return 0.0;
  std::size_t concordant = 0, pairs = 0;
  for (std::size_t i = 0; i < worder.size(); ++i)
    for (std::size_t j = i + 1; j < worder.size(); ++j) {
      ++pairs;
      if (worder[i] < worder[j]) ++concordant;
    }
  real nkt = real(concordant) / real(pairs);
  real precision = real(worder.size()) / real(hyp.size());
  real bp = std::min(real(1), std::exp(1.0 - real(ref.size()) / real(hyp.size())));
  return nkt * std::pow(precision, kRibesAlpha) * std::pow(bp, kRibesBeta);
}

template <typename Token>
void check_corpus(const std::vector<Sentence<Token>>& hyps,
                  const std::vector<Sentence<Token>>& refs, const char* what) {
  if (hyps.size() != refs.size())
    throw ContractError(std::string(what) + ": " + std::to_string(hyps.size()) +
                        " hypotheses vs " + std::to_string(refs.size()) +
                        " references");
  if (hyps.empty()) throw ContractError(std::string(what) + ": empty corpus");
}

template <typename Token>
real bleu_impl(const std::vector<Sentence<Token>>& hyps,
               const std::vector<Sentence<Token>>& refs) {
  check_corpus(hyps, refs, "bleu_corpus");
  NGramStats agg;
  for (std::size_t i = 0; i < hyps.size(); ++i) agg += stats_of(hyps[i], refs[i]);
  return bleu_from_stats(agg);
}

template <typename Token>
real ribes_impl(const std::vector<Sentence<Token>>& hyps,
                const std::vector<Sentence<Token>>& refs) {
  check_corpus(hyps, refs, "ribes_corpus");
  real sum = 0.0;
  for (std::size_t i = 0; i < hyps.size(); ++i) sum += ribes_one(hyps[i], refs[i]);
  return sum / real(hyps.size());
}

}  // namespace

NGramStats& NGramStats::operator+=(const NGramStats& other) {
  for (std::size_t n = 0; n < 4; ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  hyp_len += other.hyp_len;
  ref_len += other.ref_len;
  return *this;
}

NGramStats ngram_stats(const std::vector<std::string>& hyp,
                       const std::vector<std::string>& ref) {
  return stats_of(hyp, ref);
}
NGramStats ngram_stats(const std::vector<std::uint32_t>& hyp,
                       const std::vector<std::uint32_t>& ref) {
  return stats_of(hyp, ref);
}

real bleu_brevity_penalty(std::size_t hyp_len, std::size_t ref_len) {
  if (hyp_len == 0) return 0.0;
  if (hyp_len >= ref_len) return 1.0;
  return std::exp(1.0 - real(ref_len) / real(hyp_len));
}

real bleu_from_stats(const NGramStats& agg) {
  real log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (agg.matches[n] == 0 || agg.totals[n] == 0) return 0.0;
    log_sum += std::log(real(agg.matches[n]) / real(agg.totals[n]));
  }
  return bleu_brevity_penalty(agg.hyp_len, agg.ref_len) * std::exp(log_sum / 4.0);
}

real bleu_corpus(const std::vector<std::vector<std::string>>& hyps,
                 const std::vector<std::vector<std::string>>& refs) {
  return bleu_impl(hyps, refs);
}
real bleu_corpus(const std::vector<std::vector<std::uint32_t>>& hyps,
                 const std::vector<std::vector<std::uint32_t>>& refs) {
  return bleu_impl(hyps, refs);
}

real ribes_sentence(const std::vector<std::string>& hyp,
                    const std::vector<std::string>& ref) {
  return ribes_one(hyp, ref);
}
real ribes_sentence(const std::vector<std::uint32_t>& hyp,
                    const std::vector<std::uint32_t>& ref) {
  return ribes_one(hyp, ref);
}

real ribes_corpus(const std::vector<std::vector<std::string>>& hyps,
                  const std::vector<std::vector<std::string>>& refs) {
  return ribes_impl(hyps, refs);
}
real ribes_corpus(const std::vector<std::vector<std::uint32_t>>& hyps,
                  const std::vector<std::vector<std::uint32_t>>& refs) {
  return ribes_impl(hyps, refs);
}

ScoreReport score_report(const std::vector<std::vector<std::string>>& hyps,
                         const std::vector<std::vector<std::string>>& refs) {
  return {bleu_corpus(hyps, refs), ribes_corpus(hyps, refs), hyps.size()};
}
ScoreReport score_report(const std::vector<std::vector<std::uint32_t>>& hyps,
                         const std::vector<std::vector<std::uint32_t>>& refs) {
  return {bleu_corpus(hyps, refs), ribes_corpus(hyps, refs), hyps.size()};
}

}  // namespace lcnmt
