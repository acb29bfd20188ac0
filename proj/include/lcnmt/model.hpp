#ifndef LCNMT_MODEL_HPP
#define LCNMT_MODEL_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lcnmt/data.hpp"
#include "lcnmt/layers.hpp"
#include "lcnmt/tape.hpp"

namespace lcnmt {

enum class ModelMode { Nmt, LcNmt };

std::string mode_name(ModelMode mode);
ModelMode mode_from_name(const std::string& name);

struct ModelConfig {
  ModelMode mode = ModelMode::Nmt;
  std::size_t word_dim = 620;    // paper-scale defaults; desk runs shrink these
  std::size_t enc_hidden = 1000;
  std::size_t dec_hidden = 1000;
  std::size_t ctx_hidden = 1000;  // per direction, LC-NMT only
  std::size_t attn_hidden = 1000;
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;
  real dropout_rate = 0.2;

  bool is_lc() const { return mode == ModelMode::LcNmt; }
  std::size_t annotation_dim() const { return 2 * enc_hidden; }
  std::size_t ctx_annotation_dim() const { return 2 * ctx_hidden; }
  std::size_t decoder_input_dim() const {
    return word_dim + annotation_dim() + (is_lc() ? ctx_annotation_dim() : 0);
  }
  void validate() const;
};

// Every learned tensor of one model. The LC-NMT mode adds the context
// encoder pair and the context attention; everything else is shared
// structure.
struct ModelParameters {
  EmbeddingTable src_emb, tgt_emb;
  GruParams enc_fwd, enc_bwd;
  GruParams ctx_fwd, ctx_bwd;  // LC-NMT only
  GruParams dec;
  AttentionParams att;
  AttentionParams catt;  // LC-NMT only
  Tensor init_W, init_b;  // mean annotation -> z_0
  OutputProjection out;
  bool lc = false;

  static ModelParameters init(const ModelConfig& config, Rng& rng);
  static ModelParameters zeros(const ModelConfig& config);

  // Canonical enumeration order; checkpoints and the optimizer follow it.
  void for_each(const ParamVisitor& visit);
  std::size_t value_count();
  bool all_finite();
};

// Per-example encoder output, alive on one tape.
struct EncodedSource {
  Var annotations;      // [T_src, 2*enc_hidden]
  Var ctx_annotations;  // [T_ctx, 2*ctx_hidden], LC-NMT only
  std::vector<char> src_mask, ctx_mask;
  Var z0;
};

struct DecoderState {
  Var z;
  Var s;  // last source vector (invalid before the first step)
  Var c;  // last context vector, LC-NMT only
  TokenId prev_token = BOS;
};

struct DecoderStepResult {
  DecoderState state;
  Var log_probs;     // [tgt_vocab]
  Var att_weights;   // [T_src]
  Var catt_weights;  // [T_ctx], LC-NMT only
};

EncodedSource encode(Tape& tape, ModelParameters& params, const ModelConfig& config,
                     const ContextualExample& example, const Dropout& drop = {});

// One decoder transition: main attention (producing the source vector),
// then in LC-NMT mode the context attention conditioned on it, then the
// recurrent update and the output distribution.
DecoderStepResult decoder_step(Tape& tape, ModelParameters& params,
                               const ModelConfig& config, const DecoderState& state,
                               const EncodedSource& enc, TokenId y_prev,
                               const Dropout& drop = {});

// Teacher-forced sum of per-token log-probabilities. The target must end
// with EOS.
Var sequence_log_prob(Tape& tape, ModelParameters& params, const ModelConfig& config,
                      const ContextualExample& example, const Dropout& drop = {});

// Convenience wrapper building a private tape; no gradients.
real sequence_log_prob_value(ModelParameters& params, const ModelConfig& config,
                             const ContextualExample& example);

}  // namespace lcnmt

#endif
