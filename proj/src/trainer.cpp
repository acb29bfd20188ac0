#include "lcnmt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "lcnmt/decoding.hpp"
#include "lcnmt/error.hpp"
#include "lcnmt/metrics.hpp"

namespace lcnmt {
namespace {

// Stable float rendering for the log schema.
std::string fmt(real v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::vector<ContextualExample> batch_examples(const Batch& batch) {
  std::vector<ContextualExample> out;
  out.reserve(batch.size);
  for (std::size_t i = 0; i < batch.size; ++i)
    out.push_back({batch.ctx_row(i), batch.src_row(i), batch.tgt_row(i)});
  return out;
}

}  // namespace

void TrainingConfig::validate() const {
  if (batch_size == 0) throw ContractError("training: batch size must be positive");
  if (!(clip_norm > 0.0)) throw ContractError("training: clip norm must be positive");
  if (max_epochs == 0) throw ContractError("training: max epochs must be positive");
  if (val_interval == 0)
    throw ContractError("training: validation interval must be positive");
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ContractError("training: subsample fraction must lie in (0, 1]");
  if (max_decode_len == 0)
    throw ContractError("training: validation decode length must be positive");
}

AdadeltaState AdadeltaState::init(ModelParameters& params, real rho, real eps) {
  AdadeltaState state;
  state.rho = rho;
  state.eps = eps;
  params.for_each([&state](const std::string& name, Tensor& t) {
    state.names.push_back(name);
    state.acc_grad.push_back(Tensor::zeros(t.shape));
    state.acc_update.push_back(Tensor::zeros(t.shape));
  });
  return state;
}

void zero_gradients(ModelParameters& params) {
  params.for_each([](const std::string&, Tensor& t) {
    t.ensure_grad();
    t.zero_grad();
  });
}

real clip_gradients(ModelParameters& params, real max_norm) {
  if (!(max_norm > 0.0)) throw ContractError("clip_gradients: max_norm must be positive");
  real sum_sq = 0.0;
  params.for_each([&sum_sq](const std::string&, Tensor& t) {
    for (real g : t.grad) sum_sq += g * g;
  });
  real norm = std::sqrt(sum_sq);
  if (norm <= max_norm) return 1.0;
  real scale = max_norm / norm;
  params.for_each([scale](const std::string&, Tensor& t) {
    for (real& g : t.grad) g *= scale;
  });
  return scale;
}

void adadelta_update(ModelParameters& params, AdadeltaState& state) {
  std::size_t index = 0;
  params.for_each([&](const std::string& name, Tensor& t) {
    if (index >= state.names.size() || state.names[index] != name)
      throw ContractError("adadelta_update: optimizer state does not match '" +
                          name + "'");
    t.ensure_grad();
    Tensor& eg = state.acc_grad[index];
    Tensor& ed = state.acc_update[index];
    for (std::size_t i = 0; i < t.numel(); ++i) {
      real g = t.grad[i];
      if (!std::isfinite(g))
        throw NumericError("adadelta_update: non-finite gradient in " + name);
      eg.at(i) = state.rho * eg.at(i) + (1.0 - state.rho) * g * g;
      real delta = -std::sqrt(ed.at(i) + state.eps) / std::sqrt(eg.at(i) + state.eps) * g;
      ed.at(i) = state.rho * ed.at(i) + (1.0 - state.rho) * delta * delta;
      t.at(i) += delta;
    }
    ++index;
  });
}

real training_step(ModelParameters& params, const ModelConfig& config,
                   const std::vector<ContextualExample>& batch, real clip_norm,
                   AdadeltaState& state, Rng* dropout_rng) {
  if (batch.empty()) throw ContractError("training_step: empty batch");

  Dropout drop;
  if (dropout_rng != nullptr && config.dropout_rate > 0.0) {
    drop.rate = config.dropout_rate;
    drop.training = true;
    drop.rng = dropout_rng;
  }

  zero_gradients(params);
  Tape tape;
  std::vector<Var> log_probs;
  std::size_t token_count = 0;
  for (const ContextualExample& ex : batch) {
    log_probs.push_back(sequence_log_prob(tape, params, config, ex, drop));
    token_count += ex.target.size();
  }
  Var loss = tape.scale(tape.add_n(log_probs), -1.0 / real(token_count));
  real loss_value = tape.value(loss).at(0);
  tape.backward(loss);

  clip_gradients(params, clip_norm);
  adadelta_update(params, state);
  return loss_value;
}

real validation_bleu(ModelParameters& params, const ModelConfig& config,
                     const std::vector<ContextualExample>& val,
                     std::size_t max_decode_len) {
  if (val.empty()) throw ContractError("validation_bleu: empty validation set");
  std::vector<std::vector<TokenId>> hyps, refs;
  hyps.reserve(val.size());
  refs.reserve(val.size());
  for (const ContextualExample& ex : val) {
    hyps.push_back(greedy_decode(params, config, ex, max_decode_len));
    if (ex.target.empty() || ex.target.back() != EOS)
      throw ContractError("validation_bleu: reference target must end with EOS");
    refs.emplace_back(ex.target.begin(), ex.target.end() - 1);
  }
  return bleu_corpus(hyps, refs);
}

TrainOutcome train(ModelParameters& params, const ModelConfig& config,
                   const std::vector<ContextualExample>& corpus,
                   const std::vector<ContextualExample>& val,
                   const TrainingConfig& tc, std::ostream* log) {
  tc.validate();
  config.validate();
  if (corpus.empty()) throw ContractError("train: empty training corpus");
  if (val.empty()) throw ContractError("train: empty validation set");

  AdadeltaState state = AdadeltaState::init(params);
  Rng dropout_rng(tc.seed ^ 0x9e3779b97f4a7c15ULL);
  EarlyStopState stop;

  TrainOutcome outcome;
  outcome.best_params = params;
  outcome.stop_reason = "max-epochs";

  std::size_t step = 0;
  bool done = false;
  for (std::size_t epoch = 1; epoch <= tc.max_epochs && !done; ++epoch) {
    std::vector<Batch> batches =
        make_batches(corpus, tc.batch_size, true, tc.seed + epoch);
    for (std::size_t b = 0; b < batches.size() && !done; ++b) {
      ++step;
      real loss;
      try {
        loss = training_step(params, config, batch_examples(batches[b]),
                             tc.clip_norm, state, &dropout_rng);
      } catch (const NumericError& e) {
        throw NumericError("train: aborting at step " + std::to_string(step) +
                           " (epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b) + "): " + e.what());
      }
      if (!std::isfinite(loss))
        throw NumericError("train: non-finite loss at step " + std::to_string(step) +
                           " (epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b) + ")");
      if (log)
        *log << "step " << step << " epoch " << epoch << " loss " << fmt(loss)
             << "\n";

      if (step % tc.val_interval == 0) {
        real bleu = validation_bleu(params, config, val, tc.max_decode_len);
        if (!stop.has_best || bleu > stop.best_bleu) {
          stop.has_best = true;
          stop.best_bleu = bleu;
          stop.best_step = step;
          stop.since_improvement = 0;
          outcome.best_params = params;
        } else {
          ++stop.since_improvement;
        }
        if (log)
          *log << "step " << step << " val_bleu " << fmt(bleu) << " best "
               << fmt(stop.best_bleu) << " since_improve "
               << stop.since_improvement << "\n";
        if (stop.since_improvement > tc.patience) {
          outcome.stop_reason = "patience";
          done = true;
        }
      }
    }
  }

  outcome.best_bleu = stop.has_best ? stop.best_bleu : 0.0;
  outcome.best_step = stop.best_step;
  outcome.steps = step;
  if (!stop.has_best) outcome.best_params = params;  // never validated
  if (log)
    *log << "done reason " << outcome.stop_reason << " steps " << outcome.steps
         << " best_step " << outcome.best_step << " best_bleu "
         << fmt(outcome.best_bleu) << "\n";
  return outcome;
}

std::size_t subsample_count(std::size_t corpus_size, real fraction) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ContractError("subsample: fraction must lie in (0, 1]");
  return std::size_t(std::ceil(fraction * real(corpus_size)));
}

std::vector<ContextualExample> subsample_corpus(
    const std::vector<ContextualExample>& corpus, real fraction,
    std::uint64_t seed) {
  std::size_t keep = subsample_count(corpus.size(), fraction);
  if (keep >= corpus.size()) return corpus;

  std::vector<std::size_t> indices(corpus.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  Rng rng(seed);
  rng.shuffle(indices);
  indices.resize(keep);
  std::sort(indices.begin(), indices.end());

  std::vector<ContextualExample> out;
  out.reserve(keep);
  for (std::size_t i : indices) out.push_back(corpus[i]);
  return out;
}

}  // namespace lcnmt
