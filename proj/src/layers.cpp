#include "lcnmt/layers.hpp"

#include "lcnmt/error.hpp"

namespace lcnmt {

EmbeddingTable EmbeddingTable::zeros(std::size_t vocab, std::size_t dim) {
  return {Tensor::zeros({vocab, dim})};
}

EmbeddingTable EmbeddingTable::init(std::size_t vocab, std::size_t dim, Rng& rng) {
  return {Tensor::gaussian({vocab, dim}, 0.01, rng)};
}

void EmbeddingTable::for_each(const std::string& prefix, const ParamVisitor& visit) {
  visit(prefix, matrix);
}

GruParams GruParams::zeros(std::size_t hidden, std::size_t input) {
  GruParams p;
  p.Wz = Tensor::zeros({hidden, input});
  p.Uz = Tensor::zeros({hidden, hidden});
  p.bz = Tensor::zeros({hidden});
  p.Wr = Tensor::zeros({hidden, input});
  p.Ur = Tensor::zeros({hidden, hidden});
  p.br = Tensor::zeros({hidden});
  p.Wh = Tensor::zeros({hidden, input});
  p.Uh = Tensor::zeros({hidden, hidden});
  p.bh = Tensor::zeros({hidden});
  return p;
}

GruParams GruParams::init(std::size_t hidden, std::size_t input, Rng& rng) {
  GruParams p;
  p.Wz = Tensor::gaussian({hidden, input}, 0.01, rng);
  p.Uz = Tensor::orthogonal(hidden, rng);
  p.bz = Tensor::zeros({hidden});
  p.Wr = Tensor::gaussian({hidden, input}, 0.01, rng);
  p.Ur = Tensor::orthogonal(hidden, rng);
  p.br = Tensor::zeros({hidden});
  p.Wh = Tensor::gaussian({hidden, input}, 0.01, rng);
  p.Uh = Tensor::orthogonal(hidden, rng);
  p.bh = Tensor::zeros({hidden});
  return p;
}

void GruParams::for_each(const std::string& prefix, const ParamVisitor& visit) {
  visit(prefix + ".Wz", Wz);
  visit(prefix + ".Uz", Uz);
  visit(prefix + ".bz", bz);
  visit(prefix + ".Wr", Wr);
  visit(prefix + ".Ur", Ur);
  visit(prefix + ".br", br);
  visit(prefix + ".Wh", Wh);
  visit(prefix + ".Uh", Uh);
  visit(prefix + ".bh", bh);
}

AttentionParams AttentionParams::zeros(std::size_t a, std::size_t emb,
                                       std::size_t dec, std::size_t k,
                                       std::size_t extra_dim) {
  if (a == 0) throw ContractError("attention hidden width must be positive");
  AttentionParams p;
  p.Wy = Tensor::zeros({a, emb});
  p.Wz = Tensor::zeros({a, dec});
  p.Wh = Tensor::zeros({a, k});
  p.b1 = Tensor::zeros({a});
  p.v = Tensor::zeros({1, a});
  p.b2 = Tensor::zeros({1});
  if (extra_dim > 0) p.Ws = Tensor::zeros({a, extra_dim});
  return p;
}

AttentionParams AttentionParams::init(std::size_t a, std::size_t emb,
                                      std::size_t dec, std::size_t k,
                                      std::size_t extra_dim, Rng& rng) {
  if (a == 0) throw ContractError("attention hidden width must be positive");
  AttentionParams p;
  p.Wy = Tensor::gaussian({a, emb}, 0.01, rng);
  p.Wz = Tensor::gaussian({a, dec}, 0.01, rng);
  p.Wh = Tensor::gaussian({a, k}, 0.01, rng);
  p.b1 = Tensor::zeros({a});
  p.v = Tensor::gaussian({1, a}, 0.01, rng);
  p.b2 = Tensor::zeros({1});
  if (extra_dim > 0) p.Ws = Tensor::gaussian({a, extra_dim}, 0.01, rng);
  return p;
}

void AttentionParams::for_each(const std::string& prefix, const ParamVisitor& visit) {
  visit(prefix + ".Wy", Wy);
  visit(prefix + ".Wz", Wz);
  visit(prefix + ".Wh", Wh);
  visit(prefix + ".b1", b1);
  visit(prefix + ".v", v);
  visit(prefix + ".b2", b2);
  if (has_extra()) visit(prefix + ".Ws", Ws);
}

OutputProjection OutputProjection::zeros(std::size_t vocab, std::size_t dec) {
  return {Tensor::zeros({vocab, dec}), Tensor::zeros({vocab})};
}

OutputProjection OutputProjection::init(std::size_t vocab, std::size_t dec, Rng& rng) {
  return {Tensor::gaussian({vocab, dec}, 0.01, rng), Tensor::zeros({vocab})};
}

void OutputProjection::for_each(const std::string& prefix, const ParamVisitor& visit) {
  visit(prefix + ".W", W);
  visit(prefix + ".b", b);
}

Var embed(Tape& tape, EmbeddingTable& emb, TokenId id) {
  if (id >= emb.vocab_size())
    throw VocabError("embedding lookup: id " + std::to_string(id) +
                     " outside vocabulary of size " + std::to_string(emb.vocab_size()));
  return tape.row(tape.param(emb.matrix), id);
}

Var gru_step(Tape& tape, GruParams& p, Var h_prev, Var x) {
  Var z = tape.sigmoid_(tape.affine2(x, tape.param(p.Wz), h_prev, tape.param(p.Uz),
                                     tape.param(p.bz)));
  Var r = tape.sigmoid_(tape.affine2(x, tape.param(p.Wr), h_prev, tape.param(p.Ur),
                                     tape.param(p.br)));
  Var gated = tape.mul(r, h_prev);
  Var cand = tape.tanh_(tape.affine2(x, tape.param(p.Wh), gated, tape.param(p.Uh),
                                     tape.param(p.bh)));
  return tape.convex_mix(z, h_prev, cand);
}

Var bidir_encode(Tape& tape, GruParams& fwd, GruParams& bwd, EmbeddingTable& emb,
                 const std::vector<TokenId>& tokens, const Dropout& drop) {
  const std::size_t T = tokens.size();
  if (T == 0) throw ContractError("bidir_encode: empty token sequence");

  std::vector<Var> xs(T);
  for (std::size_t t = 0; t < T; ++t) {
    xs[t] = embed(tape, emb, tokens[t]);
    if (drop.active()) xs[t] = dropout_apply(tape, xs[t], drop);
  }

  const std::size_t d = fwd.hidden_dim();
  std::vector<Var> fstates(T), bstates(T);
  Var h = tape.input(Tensor::zeros({d}));
  for (std::size_t t = 0; t < T; ++t) {
    h = gru_step(tape, fwd, h, xs[t]);
    fstates[t] = h;
  }
  h = tape.input(Tensor::zeros({bwd.hidden_dim()}));
  for (std::size_t t = T; t-- > 0;) {
    h = gru_step(tape, bwd, h, xs[t]);
    bstates[t] = h;
  }

  std::vector<Var> rows(T);
  for (std::size_t t = 0; t < T; ++t)
    rows[t] = tape.concat({fstates[t], bstates[t]});
  return tape.concat_rows(rows);
}

AttendResult attend(Tape& tape, AttentionParams& p, Var y_prev_emb, Var z_prev,
                    Var annotations, const std::vector<char>& mask, Var extra) {
  if (p.has_extra() != extra.valid())
    throw ContractError(p.has_extra()
                            ? "attend: params expect an extra input but none was given"
                            : "attend: extra input given to a plain attention");

  Var q = tape.affine2(y_prev_emb, tape.param(p.Wy), z_prev, tape.param(p.Wz),
                       tape.param(p.b1));
  if (p.has_extra())
    q = tape.add(q, tape.matvec(tape.param(p.Ws), extra));

  Var hidden = tape.tanh_(tape.row_affine(annotations, tape.param(p.Wh), q));
  Var scores = tape.row_affine(hidden, tape.param(p.v), tape.param(p.b2));
  const std::size_t T = tape.value(annotations).rows();
  scores = tape.reshape(scores, {T});

  AttendResult out;
  out.weights = tape.softmax_masked(scores, mask);
  out.context = tape.tmatvec(annotations, out.weights);
  return out;
}

Var output_distribution(Tape& tape, OutputProjection& p, Var z) {
  return tape.log_softmax(tape.affine(z, tape.param(p.W), tape.param(p.b)));
}

Var dropout_apply(Tape& tape, Var x, real rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0)
    throw ContractError("dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return x;
  const Tensor& v = tape.value(x);
  Tensor mask = Tensor::zeros(v.shape);
  const real keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < mask.numel(); ++i)
    mask.at(i) = rng.uniform() >= rate ? keep_scale : 0.0;
  return tape.mul_const(x, std::move(mask));
}

Var dropout_apply(Tape& tape, Var x, const Dropout& drop) {
  if (!drop.active()) return x;
  if (drop.rng == nullptr)
    throw ContractError("dropout in training mode needs a random stream");
  return dropout_apply(tape, x, drop.rate, *drop.rng, true);
}

}  // namespace lcnmt
