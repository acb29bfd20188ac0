#ifndef LCNMT_METRICS_HPP
#define LCNMT_METRICS_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lcnmt/tensor.hpp"

namespace lcnmt {

// Translation-quality metrics over pre-tokenized sentences. Everything is
// single-reference. Both word sentences and raw token-id sentences are
// accepted; scores live in [0,1] (the CLI scales by 100 for display).

inline constexpr real kRibesAlpha = 0.25;  // unigram precision exponent
inline constexpr real kRibesBeta = 0.10;   // brevity penalty exponent

// Clipped n-gram counts of one sentence pair, or a corpus once summed.
struct NGramStats {
  std::array<std::size_t, 4> matches{};  // clipped matches per order 1..4
  std::array<std::size_t, 4> totals{};   // hypothesis n-gram counts per order
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;

  NGramStats& operator+=(const NGramStats& other);
};

NGramStats ngram_stats(const std::vector<std::string>& hyp,
                       const std::vector<std::string>& ref);
NGramStats ngram_stats(const std::vector<std::uint32_t>& hyp,
                       const std::vector<std::uint32_t>& ref);

real bleu_brevity_penalty(std::size_t hyp_len, std::size_t ref_len);

// Corpus BLEU from aggregated stats: BP * exp(mean log p_n), zero as soon
// as any aggregate precision is zero.
real bleu_from_stats(const NGramStats& aggregate);

real bleu_corpus(const std::vector<std::vector<std::string>>& hyps,
                 const std::vector<std::vector<std::string>>& refs);
real bleu_corpus(const std::vector<std::vector<std::uint32_t>>& hyps,
                 const std::vector<std::vector<std::uint32_t>>& refs);

// Rank-correlation score of one sentence pair: words align where unique,
// context n-grams disambiguate repeats, and the concordant fraction of
// rank pairs is damped by precision and brevity. Fewer than two aligned
// words score 0.
real ribes_sentence(const std::vector<std::string>& hyp,
                    const std::vector<std::string>& ref);
real ribes_sentence(const std::vector<std::uint32_t>& hyp,
                    const std::vector<std::uint32_t>& ref);

real ribes_corpus(const std::vector<std::vector<std::string>>& hyps,
                  const std::vector<std::vector<std::string>>& refs);
real ribes_corpus(const std::vector<std::vector<std::uint32_t>>& hyps,
                  const std::vector<std::vector<std::uint32_t>>& refs);

struct ScoreReport {
  real bleu = 0.0;
  real ribes = 0.0;
  std::size_t sentences = 0;
};

ScoreReport score_report(const std::vector<std::vector<std::string>>& hyps,
                         const std::vector<std::vector<std::string>>& refs);
ScoreReport score_report(const std::vector<std::vector<std::uint32_t>>& hyps,
                         const std::vector<std::vector<std::uint32_t>>& refs);

}  // namespace lcnmt

#endif
