#include "lcnmt/model.hpp"

#include "lcnmt/error.hpp"

namespace lcnmt {

std::string mode_name(ModelMode mode) {
  return mode == ModelMode::Nmt ? "nmt" : "lc-nmt";
}

ModelMode mode_from_name(const std::string& name) {
  if (name == "nmt") return ModelMode::Nmt;
  if (name == "lc-nmt") return ModelMode::LcNmt;
  throw ContractError("unknown model mode '" + name + "' (expected nmt or lc-nmt)");
}

void ModelConfig::validate() const {
  if (word_dim == 0 || enc_hidden == 0 || dec_hidden == 0 || attn_hidden == 0)
    throw ContractError("model dimensions must be positive");
  if (is_lc() && ctx_hidden == 0)
    throw ContractError("lc-nmt requires a positive context encoder width");
  // BOS and EOS must be addressable on both sides; synthetic probing models
  // may stay below the full reserved range, data-built vocabularies never do.
  if (src_vocab <= EOS || tgt_vocab <= EOS)
    throw ContractError("vocabulary sizes must cover begin and end sentinels");
  if (is_lc() && src_vocab <= EMPTY_CTX)
    throw ContractError("lc-nmt source vocabulary must cover the empty-context token");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ContractError("dropout rate must lie in [0, 1)");
}

ModelParameters ModelParameters::init(const ModelConfig& config, Rng& rng) {
  config.validate();
  ModelParameters p;
  p.lc = config.is_lc();
  p.src_emb = EmbeddingTable::init(config.src_vocab, config.word_dim, rng);
  p.tgt_emb = EmbeddingTable::init(config.tgt_vocab, config.word_dim, rng);
  p.enc_fwd = GruParams::init(config.enc_hidden, config.word_dim, rng);
  p.enc_bwd = GruParams::init(config.enc_hidden, config.word_dim, rng);
  if (p.lc) {
    p.ctx_fwd = GruParams::init(config.ctx_hidden, config.word_dim, rng);
    p.ctx_bwd = GruParams::init(config.ctx_hidden, config.word_dim, rng);
  }
  p.dec = GruParams::init(config.dec_hidden, config.decoder_input_dim(), rng);
  p.att = AttentionParams::init(config.attn_hidden, config.word_dim, config.dec_hidden,
                                config.annotation_dim(), 0, rng);
  if (p.lc)
    p.catt = AttentionParams::init(config.attn_hidden, config.word_dim,
                                   config.dec_hidden, config.ctx_annotation_dim(),
                                   config.annotation_dim(), rng);
  p.init_W = Tensor::gaussian({config.dec_hidden, config.annotation_dim()}, 0.01, rng);
  p.init_b = Tensor::zeros({config.dec_hidden});
  p.out = OutputProjection::init(config.tgt_vocab, config.dec_hidden, rng);
  return p;
}

ModelParameters ModelParameters::zeros(const ModelConfig& config) {
  config.validate();
  ModelParameters p;
  p.lc = config.is_lc();
  p.src_emb = EmbeddingTable::zeros(config.src_vocab, config.word_dim);
  p.tgt_emb = EmbeddingTable::zeros(config.tgt_vocab, config.word_dim);
  p.enc_fwd = GruParams::zeros(config.enc_hidden, config.word_dim);
  p.enc_bwd = GruParams::zeros(config.enc_hidden, config.word_dim);
  if (p.lc) {
    p.ctx_fwd = GruParams::zeros(config.ctx_hidden, config.word_dim);
    p.ctx_bwd = GruParams::zeros(config.ctx_hidden, config.word_dim);
  }
  p.dec = GruParams::zeros(config.dec_hidden, config.decoder_input_dim());
  p.att = AttentionParams::zeros(config.attn_hidden, config.word_dim, config.dec_hidden,
                                 config.annotation_dim(), 0);
  if (p.lc)
    p.catt = AttentionParams::zeros(config.attn_hidden, config.word_dim,
                                    config.dec_hidden, config.ctx_annotation_dim(),
                                    config.annotation_dim());
  p.init_W = Tensor::zeros({config.dec_hidden, config.annotation_dim()});
  p.init_b = Tensor::zeros({config.dec_hidden});
  p.out = OutputProjection::zeros(config.tgt_vocab, config.dec_hidden);
  return p;
}

void ModelParameters::for_each(const ParamVisitor& visit) {
  src_emb.for_each("src_emb", visit);
  tgt_emb.for_each("tgt_emb", visit);
  enc_fwd.for_each("enc_fwd", visit);
  enc_bwd.for_each("enc_bwd", visit);
  if (lc) {
    ctx_fwd.for_each("ctx_fwd", visit);
    ctx_bwd.for_each("ctx_bwd", visit);
  }
  dec.for_each("dec", visit);
  att.for_each("att", visit);
  if (lc) catt.for_each("catt", visit);
  visit("init.W", init_W);
  visit("init.b", init_b);
  out.for_each("out", visit);
}

std::size_t ModelParameters::value_count() {
  std::size_t n = 0;
  for_each([&](const std::string&, Tensor& t) { n += t.numel(); });
  return n;
}

bool ModelParameters::all_finite() {
  bool ok = true;
  for_each([&](const std::string&, Tensor& t) { ok = ok && t.all_finite(); });
  return ok;
}

EncodedSource encode(Tape& tape, ModelParameters& params, const ModelConfig& config,
                     const ContextualExample& example, const Dropout& drop) {
  if (example.source.empty()) throw ContractError("encode: empty source sentence");
  EncodedSource enc;
  enc.annotations =
      bidir_encode(tape, params.enc_fwd, params.enc_bwd, params.src_emb,
                   example.source, drop);
  enc.src_mask.assign(example.source.size(), 1);
  if (config.is_lc()) {
    if (example.context.empty())
      throw ContractError("encode: lc-nmt requires a context sentence "
                          "(the empty-context singleton at document start)");
    enc.ctx_annotations =
        bidir_encode(tape, params.ctx_fwd, params.ctx_bwd, params.src_emb,
                     example.context, drop);
    enc.ctx_mask.assign(example.context.size(), 1);
  }
  Var mean = tape.mean_rows(enc.annotations);
  enc.z0 = tape.tanh_(
      tape.affine(mean, tape.param(params.init_W), tape.param(params.init_b)));
  return enc;
}

DecoderStepResult decoder_step(Tape& tape, ModelParameters& params,
                               const ModelConfig& config, const DecoderState& state,
                               const EncodedSource& enc, TokenId y_prev,
                               const Dropout& drop) {
  if (y_prev >= config.tgt_vocab)
    throw VocabError("decoder_step: token " + std::to_string(y_prev) +
                     " outside target vocabulary of size " +
                     std::to_string(config.tgt_vocab));

  Var ye = embed(tape, params.tgt_emb, y_prev);
  if (drop.active()) ye = dropout_apply(tape, ye, drop);

  AttendResult main =
      attend(tape, params.att, ye, state.z, enc.annotations, enc.src_mask);

  DecoderStepResult res;
  res.att_weights = main.weights;

  std::vector<Var> pieces = {ye, main.context};
  if (config.is_lc()) {
    AttendResult ctx = attend(tape, params.catt, ye, state.z, enc.ctx_annotations,
                              enc.ctx_mask, main.context);
    res.catt_weights = ctx.weights;
    res.state.c = ctx.context;
    pieces.push_back(ctx.context);
  }

  Var x = tape.concat(pieces);
  Var z_new = gru_step(tape, params.dec, state.z, x);

  Var z_out = drop.active() ? dropout_apply(tape, z_new, drop) : z_new;
  res.log_probs = output_distribution(tape, params.out, z_out);

  res.state.z = z_new;
  res.state.s = main.context;
  res.state.prev_token = y_prev;
  return res;
}

Var sequence_log_prob(Tape& tape, ModelParameters& params, const ModelConfig& config,
                      const ContextualExample& example, const Dropout& drop) {
  if (example.target.empty())
    throw ContractError("sequence_log_prob: empty target sentence");
  if (example.target.back() != EOS)
    throw ContractError("sequence_log_prob: target must end with EOS");

  EncodedSource enc = encode(tape, params, config, example, drop);
  DecoderState state;
  state.z = enc.z0;

  std::vector<Var> terms;
  terms.reserve(example.target.size());
  TokenId y_prev = BOS;
  for (TokenId y : example.target) {
    DecoderStepResult step = decoder_step(tape, params, config, state, enc, y_prev, drop);
    if (y >= config.tgt_vocab)
      throw VocabError("sequence_log_prob: target token " + std::to_string(y) +
                       " outside vocabulary");
    terms.push_back(tape.pick(step.log_probs, y));
    state = step.state;
    y_prev = y;
  }
  return tape.add_n(terms);
}

real sequence_log_prob_value(ModelParameters& params, const ModelConfig& config,
                             const ContextualExample& example) {
  Tape tape;
  Var lp = sequence_log_prob(tape, params, config, example);
  return tape.value(lp).at(0);
}

}  // namespace lcnmt
