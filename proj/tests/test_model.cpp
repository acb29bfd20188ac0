#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lcnmt/error.hpp"
#include "lcnmt/model.hpp"
#include "model_oracle.hpp"
#include "testutil.hpp"

using namespace lcnmt;

namespace {

ModelConfig tiny_config(ModelMode mode, std::size_t src_v = 9, std::size_t tgt_v = 9) {
  ModelConfig cfg;
  cfg.mode = mode;
  cfg.word_dim = 4;
  cfg.enc_hidden = 5;
  cfg.dec_hidden = 6;
  cfg.ctx_hidden = 3;
  cfg.attn_hidden = 4;
  cfg.src_vocab = src_v;
  cfg.tgt_vocab = tgt_v;
  return cfg;
}

ContextualExample tiny_example() {
  ContextualExample ex;
  ex.context = {7, 8, EOS};
  ex.source = {6, 7, 8, EOS};
  ex.target = {6, 8, 7, EOS};
  return ex;
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig cfg = tiny_config(ModelMode::Nmt);
  CHECK_NOTHROW(cfg.validate());
  cfg.word_dim = 0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = tiny_config(ModelMode::LcNmt);
  cfg.ctx_hidden = 0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = tiny_config(ModelMode::Nmt);
  cfg.src_vocab = 3;  // sentinels fit even if the reserved range does not
  CHECK_NOTHROW(cfg.validate());
  cfg.src_vocab = 2;  // end-of-sentence would be out of range
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = tiny_config(ModelMode::LcNmt);
  cfg.src_vocab = 5;  // the empty-context token would be out of range
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  CHECK(mode_from_name("nmt") == ModelMode::Nmt);
  CHECK(mode_from_name("lc-nmt") == ModelMode::LcNmt);
  CHECK_THROWS_AS(mode_from_name("rnnsearch"), ContractError);
}

TEST_CASE("encode shapes and mode contract") {
  Rng rng(1);
  ModelConfig cfg = tiny_config(ModelMode::Nmt);
  ModelParameters p = ModelParameters::init(cfg, rng);

  Tape t;
  ContextualExample ex = tiny_example();
  EncodedSource enc = encode(t, p, cfg, ex);
  CHECK(t.value(enc.annotations).rows() == 4);
  CHECK(t.value(enc.annotations).cols() == 2 * cfg.enc_hidden);
  CHECK_FALSE(enc.ctx_annotations.valid());  // plain mode has no context encoder
  CHECK(t.value(enc.z0).numel() == cfg.dec_hidden);

  ContextualExample one;
  one.source = {6, EOS};
  one.source.resize(1);  // single token
  one.target = {EOS};
  Tape t2;
  EncodedSource enc1 = encode(t2, p, cfg, one);
  CHECK(t2.value(enc1.annotations).rows() == 1);
  CHECK(t2.value(enc1.annotations).cols() == 2 * cfg.enc_hidden);

  ContextualExample empty;
  empty.target = {EOS};
  Tape t3;
  CHECK_THROWS_AS(encode(t3, p, cfg, empty), ContractError);

  ModelConfig lc = tiny_config(ModelMode::LcNmt);
  ModelParameters plc = ModelParameters::init(lc, rng);
  ContextualExample noctx = tiny_example();
  noctx.context.clear();
  Tape t4;
  CHECK_THROWS_AS(encode(t4, plc, lc, noctx), ContractError);
}

TEST_CASE("context annotations carry 2000 components at full width") {
  // per-direction context width 1000, word vectors 620
  ModelConfig cfg;
  cfg.mode = ModelMode::LcNmt;
  cfg.word_dim = 620;
  cfg.enc_hidden = 8;
  cfg.dec_hidden = 4;
  cfg.ctx_hidden = 1000;
  cfg.attn_hidden = 4;
  cfg.src_vocab = 9;
  cfg.tgt_vocab = 9;
  CHECK(cfg.ctx_annotation_dim() == 2000);

  ModelParameters p = ModelParameters::zeros(cfg);
  Tape t;
  ContextualExample ex = tiny_example();
  EncodedSource enc = encode(t, p, cfg, ex);
  CHECK(t.value(enc.ctx_annotations).rows() == 3);
  CHECK(t.value(enc.ctx_annotations).cols() == 2000);

  // and the context vector reaching the decoder has the same width
  DecoderState st;
  st.z = enc.z0;
  DecoderStepResult step = decoder_step(t, p, cfg, st, enc, BOS);
  CHECK(t.value(step.state.c).numel() == 2000);

  ModelConfig paper;
  paper.mode = ModelMode::LcNmt;
  paper.src_vocab = paper.tgt_vocab = 9;
  CHECK(paper.word_dim == 620);
  CHECK(paper.enc_hidden == 1000);
  CHECK(paper.dec_hidden == 1000);
  CHECK(paper.ctx_annotation_dim() == 2000);
  CHECK(paper.decoder_input_dim() == 620 + 2000 + 2000);
}

TEST_CASE("three-step unroll matches the hand oracle") {
  for (ModelMode mode : {ModelMode::Nmt, ModelMode::LcNmt}) {
    CAPTURE(mode_name(mode));
    Rng rng(42);
    ModelConfig cfg = tiny_config(mode);
    ModelParameters p = ModelParameters::init(cfg, rng);
    ContextualExample ex = tiny_example();
    REQUIRE(ex.target.size() == 4);

    std::vector<test::Vec> expect = test::oracle_forward(p, cfg, ex);

    Tape t;
    EncodedSource enc = encode(t, p, cfg, ex);
    DecoderState st;
    st.z = enc.z0;
    TokenId y_prev = BOS;
    for (std::size_t step_i = 0; step_i < ex.target.size(); ++step_i) {
      DecoderStepResult step = decoder_step(t, p, cfg, st, enc, y_prev);
      for (std::size_t v = 0; v < cfg.tgt_vocab; ++v)
        CHECK(t.value(step.log_probs).at(v) ==
              doctest::Approx(expect[step_i][v]).epsilon(1e-12));
      st = step.state;
      y_prev = ex.target[step_i];
    }
  }
}

TEST_CASE("attention weights sum to one at every step") {
  Rng rng(7);
  ModelConfig cfg = tiny_config(ModelMode::LcNmt);
  ModelParameters p = ModelParameters::init(cfg, rng);
  ContextualExample ex = tiny_example();

  Tape t;
  EncodedSource enc = encode(t, p, cfg, ex);
  DecoderState st;
  st.z = enc.z0;
  TokenId y_prev = BOS;
  for (TokenId y : ex.target) {
    DecoderStepResult step = decoder_step(t, p, cfg, st, enc, y_prev);
    real sum = 0.0;
    for (std::size_t i = 0; i < ex.source.size(); ++i)
      sum += t.value(step.att_weights).at(i);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    real csum = 0.0;
    for (std::size_t i = 0; i < ex.context.size(); ++i)
      csum += t.value(step.catt_weights).at(i);
    CHECK(csum == doctest::Approx(1.0).epsilon(1e-9));
    st = step.state;
    y_prev = y;
  }
}

TEST_CASE("decoder_step rejects out-of-vocab input") {
  Rng rng(9);
  ModelConfig cfg = tiny_config(ModelMode::Nmt);
  ModelParameters p = ModelParameters::init(cfg, rng);
  Tape t;
  ContextualExample ex = tiny_example();
  EncodedSource enc = encode(t, p, cfg, ex);
  DecoderState st;
  st.z = enc.z0;
  CHECK_THROWS_AS(decoder_step(t, p, cfg, st, enc, TokenId(cfg.tgt_vocab)), VocabError);
}

TEST_CASE("sequence_log_prob on the zero model is -L log V") {
  ModelConfig cfg = tiny_config(ModelMode::Nmt);
  ModelParameters p = ModelParameters::zeros(cfg);
  ContextualExample ex = tiny_example();
  const real lp = sequence_log_prob_value(p, cfg, ex);
  CHECK(lp == doctest::Approx(-real(ex.target.size()) * std::log(real(cfg.tgt_vocab)))
                  .epsilon(1e-12));
}

TEST_CASE("sequence_log_prob is non-positive and matches step-by-step scoring") {
  for (ModelMode mode : {ModelMode::Nmt, ModelMode::LcNmt}) {
    Rng rng(17);
    ModelConfig cfg = tiny_config(mode);
    ModelParameters p = ModelParameters::init(cfg, rng);
    ContextualExample ex = tiny_example();

    const real total = sequence_log_prob_value(p, cfg, ex);
    CHECK(total <= 0.0);

    Tape t;
    EncodedSource enc = encode(t, p, cfg, ex);
    DecoderState st;
    st.z = enc.z0;
    TokenId y_prev = BOS;
    real by_steps = 0.0;
    for (TokenId y : ex.target) {
      DecoderStepResult step = decoder_step(t, p, cfg, st, enc, y_prev);
      by_steps += t.value(step.log_probs).at(y);
      st = step.state;
      y_prev = y;
    }
    CHECK(total == doctest::Approx(by_steps).epsilon(1e-12));
    CHECK(total == doctest::Approx(test::oracle_sequence_log_prob(p, cfg, ex)).epsilon(1e-11));
  }
}

TEST_CASE("sequence_log_prob contract errors") {
  Rng rng(3);
  ModelConfig cfg = tiny_config(ModelMode::Nmt);
  ModelParameters p = ModelParameters::init(cfg, rng);
  ContextualExample ex = tiny_example();
  ex.target.clear();
  Tape t;
  CHECK_THROWS_AS(sequence_log_prob(t, p, cfg, ex), ContractError);
  ex.target = {6, 7};  // no EOS
  Tape t2;
  CHECK_THROWS_AS(sequence_log_prob(t2, p, cfg, ex), ContractError);
}

TEST_CASE("zeroed context pathway reduces lc-nmt to nmt") {
  Rng rng(23);
  auto pair = test::make_reduction_pair(4, 5, 6, 3, 4, 9, 9, rng);
  Rng data_rng(24);
  for (int trial = 0; trial < 3; ++trial) {
    ContextualExample ex;
    const auto pick_len = [&] { return data_rng.uniform_int(1, 4); };
    for (std::int64_t i = 0, n = pick_len(); i < n; ++i)
      ex.context.push_back(TokenId(data_rng.uniform_int(6, 8)));
    ex.context.push_back(EOS);
    for (std::int64_t i = 0, n = pick_len(); i < n; ++i)
      ex.source.push_back(TokenId(data_rng.uniform_int(6, 8)));
    ex.source.push_back(EOS);
    for (std::int64_t i = 0, n = pick_len(); i < n; ++i)
      ex.target.push_back(TokenId(data_rng.uniform_int(6, 8)));
    ex.target.push_back(EOS);

    Tape tn, tl;
    EncodedSource en = encode(tn, pair.nmt, pair.nmt_cfg, ex);
    EncodedSource el = encode(tl, pair.lc, pair.lc_cfg, ex);
    DecoderState sn, sl;
    sn.z = en.z0;
    sl.z = el.z0;
    TokenId y_prev = BOS;
    for (TokenId y : ex.target) {
      DecoderStepResult stepn = decoder_step(tn, pair.nmt, pair.nmt_cfg, sn, en, y_prev);
      DecoderStepResult stepl = decoder_step(tl, pair.lc, pair.lc_cfg, sl, el, y_prev);
      for (std::size_t v = 0; v < pair.nmt_cfg.tgt_vocab; ++v)
        CHECK(tn.value(stepn.log_probs).at(v) ==
              doctest::Approx(tl.value(stepl.log_probs).at(v)).epsilon(1e-12));
      sn = stepn.state;
      sl = stepl.state;
      y_prev = y;
    }
  }
}

TEST_CASE("trained-model score is permutation sensitive") {
  Rng rng(29);
  ModelConfig cfg = tiny_config(ModelMode::Nmt);
  ModelParameters p = ModelParameters::init(cfg, rng);
  // inflate weights so the distribution is far from uniform
  p.out.W = test::random_tensor({cfg.tgt_vocab, cfg.dec_hidden}, 77, 2.0);

  ContextualExample ex = tiny_example();
  ContextualExample shuffled = ex;
  std::swap(shuffled.target[0], shuffled.target[2]);
  CHECK(sequence_log_prob_value(p, cfg, ex) !=
        sequence_log_prob_value(p, cfg, shuffled));
}

TEST_CASE("encode is deterministic") {
  Rng rng(31);
  ModelConfig cfg = tiny_config(ModelMode::LcNmt);
  ModelParameters p = ModelParameters::init(cfg, rng);
  ContextualExample ex = tiny_example();
  Tape t1, t2;
  EncodedSource e1 = encode(t1, p, cfg, ex);
  EncodedSource e2 = encode(t2, p, cfg, ex);
  for (std::size_t i = 0; i < t1.value(e1.annotations).numel(); ++i)
    CHECK(t1.value(e1.annotations).at(i) == t2.value(e2.annotations).at(i));
  for (std::size_t i = 0; i < t1.value(e1.z0).numel(); ++i)
    CHECK(t1.value(e1.z0).at(i) == t2.value(e2.z0).at(i));
}

TEST_CASE("full-model gradients match finite differences at tiny dims") {
  for (ModelMode mode : {ModelMode::Nmt, ModelMode::LcNmt}) {
    CAPTURE(mode_name(mode));
    Rng rng(101);
    ModelConfig cfg;
    cfg.mode = mode;
    cfg.word_dim = 3;
    cfg.enc_hidden = 3;
    cfg.dec_hidden = 4;
    cfg.ctx_hidden = 2;
    cfg.attn_hidden = 3;
    cfg.src_vocab = 8;
    cfg.tgt_vocab = 8;
    ModelParameters p = ModelParameters::init(cfg, rng);

    ContextualExample ex;
    ex.context = {6, EOS};
    ex.source = {7, 6, EOS};
    ex.target = {6, 7, EOS};

    auto loss = [&](bool with_grad) {
      Tape t;
      Var lp = sequence_log_prob(t, p, cfg, ex);
      Var nll = t.scale(lp, -1.0);
      real v = t.value(nll).at(0);
      if (with_grad) t.backward(nll);
      return v;
    };
    std::vector<NamedParam> params;
    p.for_each([&](const std::string& n, Tensor& pt) { params.push_back({n, &pt}); });
    auto rep = finite_difference_check(loss, params, 1e-5, 1e-4);
    INFO(rep.summary(1e-4));
    CHECK(rep.ok(1e-4));
  }
}

TEST_CASE("parameter enumeration differs between modes by the context groups") {
  ModelConfig nmt = tiny_config(ModelMode::Nmt);
  ModelConfig lc = tiny_config(ModelMode::LcNmt);
  auto names_of = [](ModelParameters& p) {
    std::vector<std::string> names;
    p.for_each([&](const std::string& n, Tensor&) { names.push_back(n); });
    return names;
  };
  ModelParameters pn = ModelParameters::zeros(nmt);
  ModelParameters pl = ModelParameters::zeros(lc);
  auto n_names = names_of(pn);
  auto l_names = names_of(pl);

  std::vector<std::string> extra;
  for (const auto& name : l_names)
    if (std::find(n_names.begin(), n_names.end(), name) == n_names.end())
      extra.push_back(name);
  for (const auto& name : n_names)
    CHECK(std::find(l_names.begin(), l_names.end(), name) != l_names.end());
  for (const auto& name : extra) {
    const bool ctx_group = name.rfind("ctx_fwd.", 0) == 0 ||
                           name.rfind("ctx_bwd.", 0) == 0 || name.rfind("catt.", 0) == 0;
    CHECK(ctx_group);
  }
  CHECK(extra.size() == 9 + 9 + 7);  // two GRU blocks + context attention with Ws
}
