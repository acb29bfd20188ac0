#ifndef LCNMT_DECODING_HPP
#define LCNMT_DECODING_HPP

#include <cstddef>
#include <vector>

#include "lcnmt/model.hpp"

namespace lcnmt {

inline constexpr std::size_t kExhaustiveCap = 1000000;

// One finished translation. Tokens carry the content only; the closing EOS
// is stripped, though its log-probability is part of log_prob.
struct BeamResult {
  std::vector<TokenId> tokens;
  real log_prob = 0.0;
  real score = 0.0;  // ranking key; log_prob, length-normalized on request
};

// Argmax decoding, ties resolved toward the lowest token id. Stops at EOS
// or after max_len content tokens, whichever comes first.
std::vector<TokenId> greedy_decode(ModelParameters& params, const ModelConfig& config,
                                   const ContextualExample& example,
                                   std::size_t max_len);

// Standard beam search over accumulated log-probabilities. Hypotheses that
// emit EOS retire to the result pool; a hypothesis reaching max_len content
// tokens may only emit EOS, so the search always terminates with at least
// one finished result. Results come back in descending score order; with
// length_norm the score is log_prob divided by the token count including
// EOS, otherwise the raw sum.
std::vector<BeamResult> beam_search(ModelParameters& params, const ModelConfig& config,
                                    const ContextualExample& example,
                                    std::size_t beam_width, std::size_t max_len,
                                    bool length_norm = true);

// Scores every candidate ending in EOS with at most max_len content tokens
// and returns the best (raw log-probability, no length normalization).
// Intended as a small-scale oracle; refuses with CapError when the
// candidate count exceeds cap.
BeamResult exhaustive_decode(ModelParameters& params, const ModelConfig& config,
                             const ContextualExample& example, std::size_t max_len,
                             std::size_t cap = kExhaustiveCap);

}  // namespace lcnmt

#endif
