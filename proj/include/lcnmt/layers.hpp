#ifndef LCNMT_LAYERS_HPP
#define LCNMT_LAYERS_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lcnmt/rng.hpp"
#include "lcnmt/tape.hpp"
#include "lcnmt/tensor.hpp"

namespace lcnmt {

using TokenId = std::uint32_t;

// Visitor used to enumerate a block's tensors in canonical order (the
// order checkpoints serialize them in).
using ParamVisitor = std::function<void(const std::string&, Tensor&)>;

struct EmbeddingTable {
  Tensor matrix;  // [vocab, dim]

  std::size_t vocab_size() const { return matrix.rows(); }
  std::size_t dim() const { return matrix.cols(); }

  static EmbeddingTable zeros(std::size_t vocab, std::size_t dim);
  static EmbeddingTable init(std::size_t vocab, std::size_t dim, Rng& rng);
  void for_each(const std::string& prefix, const ParamVisitor& visit);
};

// Gated recurrent unit: update gate z, reset gate r, candidate state.
struct GruParams {
  Tensor Wz, Uz, bz;
  Tensor Wr, Ur, br;
  Tensor Wh, Uh, bh;

  std::size_t hidden_dim() const { return bz.numel(); }
  std::size_t input_dim() const { return Wz.cols(); }

  static GruParams zeros(std::size_t hidden, std::size_t input);
  // Input-to-hidden weights gaussian(0.01), recurrent weights orthogonal,
  // biases zero.
  static GruParams init(std::size_t hidden, std::size_t input, Rng& rng);
  void for_each(const std::string& prefix, const ParamVisitor& visit);
};

// Single-hidden-layer scorer producing one attention score per annotation
// row. The context variant additionally conditions on the current source
// vector (extra input Ws); plain attention has no Ws.
struct AttentionParams {
  Tensor Wy;  // [a, emb]   previous target embedding
  Tensor Wz;  // [a, dec]   previous decoder state
  Tensor Wh;  // [a, k]     annotation row
  Tensor b1;  // [a]
  Tensor v;   // [1, a]     hidden -> score
  Tensor b2;  // [1]
  Tensor Ws;  // [a, ks]    context variant only; empty otherwise

  bool has_extra() const { return Ws.numel() > 0; }
  std::size_t hidden_width() const { return b1.numel(); }

  static AttentionParams zeros(std::size_t a, std::size_t emb, std::size_t dec,
                               std::size_t k, std::size_t extra_dim = 0);
  static AttentionParams init(std::size_t a, std::size_t emb, std::size_t dec,
                              std::size_t k, std::size_t extra_dim, Rng& rng);
  void for_each(const std::string& prefix, const ParamVisitor& visit);
};

struct OutputProjection {
  Tensor W;  // [V, dec]
  Tensor b;  // [V]

  std::size_t vocab_size() const { return b.numel(); }

  static OutputProjection zeros(std::size_t vocab, std::size_t dec);
  static OutputProjection init(std::size_t vocab, std::size_t dec, Rng& rng);
  void for_each(const std::string& prefix, const ParamVisitor& visit);
};

// Inverted-dropout configuration threaded through forward passes. With
// training false (or rate 0) every call is the identity.
struct Dropout {
  real rate = 0.0;
  bool training = false;
  Rng* rng = nullptr;

  bool active() const { return training && rate > 0.0; }
};

// Row lookup with gradient flow into the looked-up row.
Var embed(Tape& tape, EmbeddingTable& emb, TokenId id);

// One GRU transition: h_new = (1-z) (.) h_prev + z (.) candidate.
Var gru_step(Tape& tape, GruParams& p, Var h_prev, Var x);

// Bidirectional encoding of a token sequence: row t is the concatenation
// of the forward state after tokens 1..t and the backward state after
// tokens T..t. Dropout, when active, applies to the shared embeddings.
Var bidir_encode(Tape& tape, GruParams& fwd, GruParams& bwd, EmbeddingTable& emb,
                 const std::vector<TokenId>& tokens, const Dropout& drop = {});

struct AttendResult {
  Var weights;  // [T], a distribution over unmasked rows
  Var context;  // [k], the weighted sum of annotation rows
};

// Scores every annotation row with the tanh feedforward and returns the
// normalized weights plus the weighted sum. `extra` must be a valid Var
// exactly when the params carry the extra input.
AttendResult attend(Tape& tape, AttentionParams& p, Var y_prev_emb, Var z_prev,
                    Var annotations, const std::vector<char>& mask,
                    Var extra = Var{});

// Log-probabilities over the vocabulary for one decoder state.
Var output_distribution(Tape& tape, OutputProjection& p, Var z);

// Inverted dropout: zero with probability rate, scale survivors by
// 1/(1-rate). Identity outside training.
Var dropout_apply(Tape& tape, Var x, real rate, Rng& rng, bool training);
Var dropout_apply(Tape& tape, Var x, const Dropout& drop);

}  // namespace lcnmt

#endif
