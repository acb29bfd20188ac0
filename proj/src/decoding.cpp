#include "lcnmt/decoding.hpp"

#include <algorithm>
#include <string>

#include "lcnmt/error.hpp"

namespace lcnmt {
namespace {

// Working item of the searches; states live on the search-local tape.
struct Hypothesis {
  std::vector<TokenId> tokens;
  real log_prob = 0.0;
  DecoderState state;
  bool finished = false;
};

struct Candidate {
  std::size_t parent;
  TokenId token;
  real score;
};

// Deterministic expansion order: better score first, then older beam slot,
// then lower token id.
bool candidate_before(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.parent != b.parent) return a.parent < b.parent;
  return a.token < b.token;
}

bool result_before(const BeamResult& a, const BeamResult& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

TokenId argmax_lowest(const Tensor& log_probs) {
  std::size_t best = 0;
  for (std::size_t v = 1; v < log_probs.numel(); ++v)
    if (log_probs.at(v) > log_probs.at(best)) best = v;
  return TokenId(best);
}

}  // namespace

std::vector<TokenId> greedy_decode(ModelParameters& params, const ModelConfig& config,
                                   const ContextualExample& example,
                                   std::size_t max_len) {
  if (max_len == 0) throw ContractError("greedy_decode: max_len must be positive");

  Tape tape;
  EncodedSource enc = encode(tape, params, config, example);
  DecoderState state;
  state.z = enc.z0;

  std::vector<TokenId> out;
  TokenId y_prev = BOS;
  for (std::size_t step = 0; step < max_len; ++step) {
    DecoderStepResult r = decoder_step(tape, params, config, state, enc, y_prev);
    TokenId best = argmax_lowest(tape.value(r.log_probs));
    if (best == EOS) break;
    out.push_back(best);
    state = r.state;
    y_prev = best;
  }
  return out;
}

std::vector<BeamResult> beam_search(ModelParameters& params, const ModelConfig& config,
                                    const ContextualExample& example,
                                    std::size_t beam_width, std::size_t max_len,
                                    bool length_norm) {
  if (beam_width == 0) throw ContractError("beam_search: beam width must be positive");
  if (max_len == 0) throw ContractError("beam_search: max_len must be positive");

  Tape tape;
  EncodedSource enc = encode(tape, params, config, example);

  std::vector<Hypothesis> active(1);
  active[0].state.z = enc.z0;

  std::vector<BeamResult> pool;
  while (!active.empty()) {
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < active.size(); ++i) {
      Hypothesis& hyp = active[i];
      TokenId y_prev = hyp.tokens.empty() ? TokenId(BOS) : hyp.tokens.back();
      DecoderStepResult r = decoder_step(tape, params, config, hyp.state, enc, y_prev);
      hyp.state = r.state;
      const Tensor& lp = tape.value(r.log_probs);
      if (hyp.tokens.size() == max_len) {
        // Length budget exhausted; the only legal continuation is to stop.
        candidates.push_back({i, TokenId(EOS), hyp.log_prob + lp.at(EOS)});
      } else {
        for (std::size_t v = 0; v < lp.numel(); ++v)
          candidates.push_back({i, TokenId(v), hyp.log_prob + lp.at(v)});
      }
    }
    std::sort(candidates.begin(), candidates.end(), candidate_before);
    if (candidates.size() > beam_width) candidates.resize(beam_width);

    std::vector<Hypothesis> next;
    for (const Candidate& c : candidates) {
      const Hypothesis& parent = active[c.parent];
      if (c.token == EOS) {
        BeamResult done;
        done.tokens = parent.tokens;
        done.log_prob = c.score;
        pool.push_back(std::move(done));
      } else {
        Hypothesis h;
        h.tokens = parent.tokens;
        h.tokens.push_back(c.token);
        h.log_prob = c.score;
        h.state = parent.state;
        next.push_back(std::move(h));
      }
    }
    active = std::move(next);
  }

  for (BeamResult& r : pool)
    r.score = length_norm ? r.log_prob / real(r.tokens.size() + 1) : r.log_prob;
  std::sort(pool.begin(), pool.end(), result_before);
  return pool;
}

BeamResult exhaustive_decode(ModelParameters& params, const ModelConfig& config,
                             const ContextualExample& example, std::size_t max_len,
                             std::size_t cap) {
  if (max_len == 0) throw ContractError("exhaustive_decode: max_len must be positive");

  std::vector<TokenId> alphabet;
  for (std::size_t v = 0; v < config.tgt_vocab; ++v)
    if (v != EOS) alphabet.push_back(TokenId(v));

  // Candidate count: sum over lengths of |alphabet|^L, guarded against
  // overflow before it can happen.
  const std::size_t branch = alphabet.size();
  std::size_t total = 0, term = 1;
  for (std::size_t len = 0; len <= max_len; ++len) {
    if (term > cap - total)
      throw CapError("exhaustive_decode: candidate count exceeds cap of " +
                     std::to_string(cap) + " sequences");
    total += term;
    if (len < max_len) {
      if (branch != 0 && term > cap / branch)
        throw CapError("exhaustive_decode: candidate count exceeds cap of " +
                       std::to_string(cap) + " sequences");
      term *= branch;
    }
  }

  BeamResult best;
  bool have_best = false;
  ContextualExample probe = example;
  for (std::size_t len = 0; len <= max_len; ++len) {
    std::vector<std::size_t> digits(len, 0);
    while (true) {
      probe.target.clear();
      for (std::size_t d : digits) probe.target.push_back(alphabet[d]);
      probe.target.push_back(TokenId(EOS));
      real lp = sequence_log_prob_value(params, config, probe);
      std::vector<TokenId> content(probe.target.begin(), probe.target.end() - 1);
      if (!have_best || lp > best.log_prob ||
          (lp == best.log_prob && content < best.tokens)) {
        best.tokens = std::move(content);
        best.log_prob = lp;
        best.score = lp;
        have_best = true;
      }
      // Odometer step through the fixed-length block, last digit fastest.
      bool wrapped = (len == 0);
      std::size_t pos = len;
      while (pos > 0) {
        --pos;
        if (++digits[pos] < branch) break;
        digits[pos] = 0;
        if (pos == 0) wrapped = true;
      }
      if (wrapped) break;
    }
    if (branch == 0) break;  // only the empty candidate exists
  }
  return best;
}

}  // namespace lcnmt
