#ifndef LCNMT_TRAINER_HPP
#define LCNMT_TRAINER_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lcnmt/model.hpp"

namespace lcnmt {

// Adadelta optimization over teacher-forced log-likelihood, with gradient
// clipping, greedy-decoding BLEU early stopping, and the corpus
// subsampling used for training-size ablations.

struct TrainingConfig {
  std::size_t batch_size = 32;
  real clip_norm = 1.0;
  std::size_t max_epochs = 20;
  std::size_t patience = 5;        // non-improving validations tolerated
  std::size_t val_interval = 100;  // steps between validations
  real fraction = 1.0;             // subsample share of the training corpus
  std::uint64_t seed = 1;
  std::size_t max_decode_len = 50;  // greedy budget during validation

  void validate() const;
};

// Per-parameter accumulators of squared gradients and squared updates, in
// canonical parameter order.
struct AdadeltaState {
  real rho = 0.95;
  real eps = 1e-6;
  std::vector<std::string> names;
  std::vector<Tensor> acc_grad;
  std::vector<Tensor> acc_update;

  static AdadeltaState init(ModelParameters& params, real rho = 0.95,
                            real eps = 1e-6);
};

struct EarlyStopState {
  bool has_best = false;
  real best_bleu = 0.0;
  std::size_t best_step = 0;
  std::size_t since_improvement = 0;
};

void zero_gradients(ModelParameters& params);

// Scales all gradients so the global L2 norm is at most max_norm; returns
// the factor applied (1 when already within bounds).
real clip_gradients(ModelParameters& params, real max_norm);

// One Adadelta application to every parameter from its .grad slot.
// Gradients are left untouched; callers zero them before the next batch.
void adadelta_update(ModelParameters& params, AdadeltaState& state);

// Forward/backward over one batch of examples plus clip and update.
// Returns the batch loss (negative log-likelihood per target token).
// dropout_rng may be null to disable dropout regardless of config.
real training_step(ModelParameters& params, const ModelConfig& config,
                   const std::vector<ContextualExample>& batch, real clip_norm,
                   AdadeltaState& state, Rng* dropout_rng);

// Greedy-decodes every source and scores the id sequences against the
// target sides with corpus BLEU.
real validation_bleu(ModelParameters& params, const ModelConfig& config,
                     const std::vector<ContextualExample>& val,
                     std::size_t max_decode_len);

struct TrainOutcome {
  ModelParameters best_params;  // snapshot at the best validation BLEU
  real best_bleu = 0.0;
  std::size_t best_step = 0;
  std::size_t steps = 0;
  std::string stop_reason;  // "patience" or "max-epochs"
};

// Minibatch loop with seeded shuffling, periodic validation, and early
// stopping. The live params keep their final values; the returned
// snapshot is the best-validation state. The log stream, when given,
// receives one line per step and per validation in a stable schema with
// no timestamps, so identical runs produce identical bytes.
TrainOutcome train(ModelParameters& params, const ModelConfig& config,
                   const std::vector<ContextualExample>& corpus,
                   const std::vector<ContextualExample>& val,
                   const TrainingConfig& tc, std::ostream* log = nullptr);

std::size_t subsample_count(std::size_t corpus_size, real fraction);

// Deterministic-given-seed subset of ceil(fraction * N) examples in
// original corpus order. Examples carry their own context sentence, so
// linkage survives subsampling unchanged.
std::vector<ContextualExample> subsample_corpus(
    const std::vector<ContextualExample>& corpus, real fraction,
    std::uint64_t seed);

}  // namespace lcnmt

#endif
