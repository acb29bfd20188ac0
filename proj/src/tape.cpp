#include "lcnmt/tape.hpp"

#include <cmath>
#include <utility>

#include "lcnmt/error.hpp"

namespace lcnmt {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ContractError(msg);
}

}  // namespace

int Tape::check(Var v) const {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw ContractError("tape: invalid var handle");
  }
  return v.id;
}

Var Tape::push(Tensor value, std::function<void()> back) {
  Node node;
  node.value = std::move(value);
  node.back = std::move(back);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::g(int id) {
  Node& node = nodes_[id];
  if (!node.live) {
    node.gbuf = Tensor::zeros(node.value.shape);
    node.live = true;
  }
  return node.gbuf;
}

Var Tape::input(Tensor value) {
  return push(std::move(value), nullptr);
}

Var Tape::param(Tensor& external) {
  auto it = watched_.find(&external);
  if (it != watched_.end()) return Var{it->second};
  Var v = push(external, nullptr);
  nodes_[v.id].bound = &external;
  watched_[&external] = v.id;
  return v;
}

const Tensor& Tape::value(Var v) const { return nodes_[check(v)].value; }

Tensor Tape::grad(Var v) const {
  const Node& node = nodes_[check(v)];
  if (node.live) return node.gbuf;
  return Tensor::zeros(node.value.shape);
}

Var Tape::affine(Var xv, Var Wv, Var bv) {
  const int x = check(xv), W = check(Wv), b = check(bv);
  const Tensor& xt = val(x);
  const Tensor& Wt = val(W);
  const Tensor& bt = val(b);
  require(Wt.rank() == 2 && xt.rank() == 1 && Wt.cols() == xt.numel(),
          "affine: W shape " + shape_str(Wt.shape) + " does not match x shape " +
              shape_str(xt.shape));
  require(bt.rank() == 1 && bt.numel() == Wt.rows(),
          "affine: b shape " + shape_str(bt.shape) + " does not match W shape " +
              shape_str(Wt.shape));
  const std::size_t n = Wt.rows(), m = Wt.cols();
  Tensor out = Tensor::zeros({n});
  for (std::size_t i = 0; i < n; ++i) {
    real acc = bt.at(i);
    const real* wrow = &Wt.values[i * m];
    for (std::size_t j = 0; j < m; ++j) acc += wrow[j] * xt.at(j);
    out.at(i) = acc;
  }
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, x, W, b, y = y.id, n, m]() {
    const Tensor& go = nodes_[y].gbuf;
    const Tensor& xt = val(x);
    const Tensor& Wt = val(W);
    Tensor& gx = g(x);
    Tensor& gW = g(W);
    Tensor& gb = g(b);
    for (std::size_t i = 0; i < n; ++i) {
      const real gi = go.at(i);
      if (gi == 0.0) continue;
      gb.at(i) += gi;
      const real* wrow = &Wt.values[i * m];
      real* gwrow = &gW.values[i * m];
      for (std::size_t j = 0; j < m; ++j) {
        gwrow[j] += gi * xt.at(j);
        gx.at(j) += gi * wrow[j];
      }
    }
  };
  return y;
}

Var Tape::affine2(Var xv, Var Wv, Var hv, Var Uv, Var bv) {
  const int x = check(xv), W = check(Wv), h = check(hv), U = check(Uv), b = check(bv);
  const Tensor& xt = val(x);
  const Tensor& Wt = val(W);
  const Tensor& ht = val(h);
  const Tensor& Ut = val(U);
  const Tensor& bt = val(b);
  require(Wt.rank() == 2 && xt.rank() == 1 && Wt.cols() == xt.numel(),
          "affine2: W shape " + shape_str(Wt.shape) + " does not match x shape " +
              shape_str(xt.shape));
  require(Ut.rank() == 2 && ht.rank() == 1 && Ut.cols() == ht.numel(),
          "affine2: U shape " + shape_str(Ut.shape) + " does not match h shape " +
              shape_str(ht.shape));
  require(Wt.rows() == Ut.rows() && bt.numel() == Wt.rows(),
          "affine2: output dims disagree, W " + shape_str(Wt.shape) + " U " +
              shape_str(Ut.shape) + " b " + shape_str(bt.shape));
  const std::size_t n = Wt.rows(), m = Wt.cols(), d = Ut.cols();
  Tensor out = Tensor::zeros({n});
  for (std::size_t i = 0; i < n; ++i) {
    real acc = bt.at(i);
    const real* wrow = &Wt.values[i * m];
    for (std::size_t j = 0; j < m; ++j) acc += wrow[j] * xt.at(j);
    const real* urow = &Ut.values[i * d];
    for (std::size_t j = 0; j < d; ++j) acc += urow[j] * ht.at(j);
    out.at(i) = acc;
  }
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, x, W, h, U, b, y = y.id, n, m, d]() {
    const Tensor& go = nodes_[y].gbuf;
    const Tensor& xt = val(x);
    const Tensor& Wt = val(W);
    const Tensor& ht = val(h);
    const Tensor& Ut = val(U);
    Tensor& gx = g(x);
    Tensor& gW = g(W);
    Tensor& gh = g(h);
    Tensor& gU = g(U);
    Tensor& gb = g(b);
    for (std::size_t i = 0; i < n; ++i) {
      const real gi = go.at(i);
      if (gi == 0.0) continue;
      gb.at(i) += gi;
      const real* wrow = &Wt.values[i * m];
      real* gwrow = &gW.values[i * m];
      for (std::size_t j = 0; j < m; ++j) {
        gwrow[j] += gi * xt.at(j);
        gx.at(j) += gi * wrow[j];
      }
      const real* urow = &Ut.values[i * d];
      real* gurow = &gU.values[i * d];
      for (std::size_t j = 0; j < d; ++j) {
        gurow[j] += gi * ht.at(j);
        gh.at(j) += gi * urow[j];
      }
    }
  };
  return y;
}

Var Tape::row_affine(Var Hv, Var Wv, Var qv) {
  const int H = check(Hv), W = check(Wv), q = check(qv);
  const Tensor& Ht = val(H);
  const Tensor& Wt = val(W);
  const Tensor& qt = val(q);
  require(Ht.rank() == 2 && Wt.rank() == 2 && Wt.cols() == Ht.cols(),
          "row_affine: W shape " + shape_str(Wt.shape) + " does not match H shape " +
              shape_str(Ht.shape));
  require(qt.rank() == 1 && qt.numel() == Wt.rows(),
          "row_affine: q shape " + shape_str(qt.shape) + " does not match W shape " +
              shape_str(Wt.shape));
  const std::size_t T = Ht.rows(), k = Ht.cols(), a = Wt.rows();
  Tensor out = Tensor::zeros({T, a});
  for (std::size_t t = 0; t < T; ++t) {
    const real* hrow = &Ht.values[t * k];
    for (std::size_t i = 0; i < a; ++i) {
      real acc = qt.at(i);
      const real* wrow = &Wt.values[i * k];
      for (std::size_t j = 0; j < k; ++j) acc += wrow[j] * hrow[j];
      out.at(t, i) = acc;
    }
  }
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, H, W, q, y = y.id, T, k, a]() {
    const Tensor& go = nodes_[y].gbuf;
    const Tensor& Ht = val(H);
    const Tensor& Wt = val(W);
    Tensor& gH = g(H);
    Tensor& gW = g(W);
    Tensor& gq = g(q);
    for (std::size_t t = 0; t < T; ++t) {
      const real* hrow = &Ht.values[t * k];
      real* ghrow = &gH.values[t * k];
      for (std::size_t i = 0; i < a; ++i) {
        const real gi = go.at(t, i);
        if (gi == 0.0) continue;
        gq.at(i) += gi;
        const real* wrow = &Wt.values[i * k];
        real* gwrow = &gW.values[i * k];
        for (std::size_t j = 0; j < k; ++j) {
          gwrow[j] += gi * hrow[j];
          ghrow[j] += gi * wrow[j];
        }
      }
    }
  };
  return y;
}

Var Tape::matvec(Var Av, Var xv) {
  const int A = check(Av), x = check(xv);
  const Tensor& At = val(A);
  const Tensor& xt = val(x);
  require(At.rank() == 2 && xt.rank() == 1 && At.cols() == xt.numel(),
          "matvec: A shape " + shape_str(At.shape) + " does not match x shape " +
              shape_str(xt.shape));
  const std::size_t r = At.rows(), c = At.cols();
  Tensor out = Tensor::zeros({r});
  for (std::size_t i = 0; i < r; ++i) {
    real acc = 0.0;
    const real* arow = &At.values[i * c];
    for (std::size_t j = 0; j < c; ++j) acc += arow[j] * xt.at(j);
    out.at(i) = acc;
  }
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, A, x, y = y.id, r, c]() {
    const Tensor& go = nodes_[y].gbuf;
    const Tensor& At = val(A);
    const Tensor& xt = val(x);
    Tensor& gA = g(A);
    Tensor& gx = g(x);
    for (std::size_t i = 0; i < r; ++i) {
      const real gi = go.at(i);
      if (gi == 0.0) continue;
      const real* arow = &At.values[i * c];
      real* garow = &gA.values[i * c];
      for (std::size_t j = 0; j < c; ++j) {
        garow[j] += gi * xt.at(j);
        gx.at(j) += gi * arow[j];
      }
    }
  };
  return y;
}

Var Tape::tmatvec(Var Av, Var wv) {
  const int A = check(Av), w = check(wv);
  const Tensor& At = val(A);
  const Tensor& wt = val(w);
  require(At.rank() == 2 && wt.rank() == 1 && At.rows() == wt.numel(),
          "tmatvec: A shape " + shape_str(At.shape) + " does not match w shape " +
              shape_str(wt.shape));
  const std::size_t r = At.rows(), c = At.cols();
  Tensor out = Tensor::zeros({c});
  for (std::size_t i = 0; i < r; ++i) {
    const real wi = wt.at(i);
    if (wi == 0.0) continue;
    const real* arow = &At.values[i * c];
    for (std::size_t j = 0; j < c; ++j) out.at(j) += wi * arow[j];
  }
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, A, w, y = y.id, r, c]() {
    const Tensor& go = nodes_[y].gbuf;
    const Tensor& At = val(A);
    const Tensor& wt = val(w);
    Tensor& gA = g(A);
    Tensor& gw = g(w);
    for (std::size_t i = 0; i < r; ++i) {
      const real wi = wt.at(i);
      const real* arow = &At.values[i * c];
      real* garow = &gA.values[i * c];
      real acc = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        const real gj = go.at(j);
        garow[j] += wi * gj;
        acc += arow[j] * gj;
      }
      gw.at(i) += acc;
    }
  };
  return y;
}

Var Tape::add(Var av, Var bv) {
  const int a = check(av), b = check(bv);
  const Tensor& at = val(a);
  const Tensor& bt = val(b);
  require(at.shape == bt.shape, "add: shape " + shape_str(at.shape) +
                                    " does not match shape " + shape_str(bt.shape));
  Tensor out = at;
  out.grad.clear();
  for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) += bt.at(i);
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, a, b, y = y.id]() {
    const Tensor& go = nodes_[y].gbuf;
    Tensor& ga = g(a);
    Tensor& gb = g(b);
    for (std::size_t i = 0; i < go.numel(); ++i) {
      ga.at(i) += go.at(i);
      gb.at(i) += go.at(i);
    }
  };
  return y;
}

Var Tape::add_n(const std::vector<Var>& terms) {
  require(!terms.empty(), "add_n: no terms");
  std::vector<int> ids;
  ids.reserve(terms.size());
  for (Var t : terms) ids.push_back(check(t));
  const Tensor& first = val(ids[0]);
  for (int id : ids) {
    require(val(id).shape == first.shape,
            "add_n: shape " + shape_str(val(id).shape) + " does not match shape " +
                shape_str(first.shape));
  }
  Tensor out = Tensor::zeros(first.shape);
  for (int id : ids) {
    const Tensor& t = val(id);
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) += t.at(i);
  }
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, ids, y = y.id]() {
    const Tensor& go = nodes_[y].gbuf;
    for (int id : ids) {
      Tensor& gi = g(id);
      for (std::size_t i = 0; i < go.numel(); ++i) gi.at(i) += go.at(i);
    }
  };
  return y;
}

Var Tape::mul(Var av, Var bv) {
  const int a = check(av), b = check(bv);
  const Tensor& at = val(a);
  const Tensor& bt = val(b);
  require(at.shape == bt.shape, "mul: shape " + shape_str(at.shape) +
                                    " does not match shape " + shape_str(bt.shape));
  Tensor out = at;
  out.grad.clear();
  for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) *= bt.at(i);
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, a, b, y = y.id]() {
    const Tensor& go = nodes_[y].gbuf;
    const Tensor& at = val(a);
    const Tensor& bt = val(b);
    Tensor& ga = g(a);
    Tensor& gb = g(b);
    for (std::size_t i = 0; i < go.numel(); ++i) {
      ga.at(i) += go.at(i) * bt.at(i);
      gb.at(i) += go.at(i) * at.at(i);
    }
  };
  return y;
}

Var Tape::convex_mix(Var zv, Var av, Var bv) {
  const int z = check(zv), a = check(av), b = check(bv);
  const Tensor& zt = val(z);
  const Tensor& at = val(a);
  const Tensor& bt = val(b);
  require(zt.shape == at.shape && at.shape == bt.shape,
          "convex_mix: shapes " + shape_str(zt.shape) + " " + shape_str(at.shape) +
              " " + shape_str(bt.shape) + " disagree");
  Tensor out = Tensor::zeros(zt.shape);
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out.at(i) = (1.0 - zt.at(i)) * at.at(i) + zt.at(i) * bt.at(i);
  }
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, z, a, b, y = y.id]() {
    const Tensor& go = nodes_[y].gbuf;
    const Tensor& zt = val(z);
    const Tensor& at = val(a);
    const Tensor& bt = val(b);
    Tensor& gz = g(z);
    Tensor& ga = g(a);
    Tensor& gb = g(b);
    for (std::size_t i = 0; i < go.numel(); ++i) {
      gz.at(i) += go.at(i) * (bt.at(i) - at.at(i));
      ga.at(i) += go.at(i) * (1.0 - zt.at(i));
      gb.at(i) += go.at(i) * zt.at(i);
    }
  };
  return y;
}

Var Tape::scale(Var xv, real c) {
  const int x = check(xv);
  Tensor out = val(x);
  out.grad.clear();
  for (auto& v : out.values) v *= c;
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, x, c, y = y.id]() {
    const Tensor& go = nodes_[y].gbuf;
    Tensor& gx = g(x);
    for (std::size_t i = 0; i < go.numel(); ++i) gx.at(i) += c * go.at(i);
  };
  return y;
}

Var Tape::add_const(Var xv, real c) {
  const int x = check(xv);
  Tensor out = val(x);
  out.grad.clear();
  for (auto& v : out.values) v += c;
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, x, y = y.id]() {
    const Tensor& go = nodes_[y].gbuf;
    Tensor& gx = g(x);
    for (std::size_t i = 0; i < go.numel(); ++i) gx.at(i) += go.at(i);
  };
  return y;
}

Var Tape::mul_const(Var xv, Tensor mask) {
  const int x = check(xv);
  require(mask.shape == val(x).shape,
          "mul_const: mask shape " + shape_str(mask.shape) + " does not match x shape " +
              shape_str(val(x).shape));
  Tensor out = val(x);
  out.grad.clear();
  for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) *= mask.at(i);
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, x, mask = std::move(mask), y = y.id]() {
    const Tensor& go = nodes_[y].gbuf;
    Tensor& gx = g(x);
    for (std::size_t i = 0; i < go.numel(); ++i) gx.at(i) += go.at(i) * mask.at(i);
  };
  return y;
}

Var Tape::elementwise(Var xv, Act f) {
  const int x = check(xv);
  Tensor out = val(x);
  out.grad.clear();
  for (auto& v : out.values) v = act_apply(f, v);
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, x, f, y = y.id]() {
    const Tensor& go = nodes_[y].gbuf;
    const Tensor& yt = nodes_[y].value;
    const Tensor& xt = val(x);
    Tensor& gx = g(x);
    for (std::size_t i = 0; i < go.numel(); ++i) {
      real local = 0.0;
      switch (f) {
        case Act::Tanh:
          local = 1.0 - yt.at(i) * yt.at(i);
          break;
        case Act::Sigmoid:
          local = yt.at(i) * (1.0 - yt.at(i));
          break;
        case Act::Exp:
          local = yt.at(i);
          break;
        case Act::Log:
          local = 1.0 / xt.at(i);
          break;
      }
      gx.at(i) += go.at(i) * local;
    }
  };
  return y;
}

Var Tape::softmax_masked(Var sv, std::vector<char> mask) {
  const int s = check(sv);
  Tensor out = lcnmt::softmax_masked(val(s), mask);
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, s, mask = std::move(mask), y = y.id]() {
    const Tensor& go = nodes_[y].gbuf;
    const Tensor& p = nodes_[y].value;
    Tensor& gs = g(s);
    real inner = 0.0;
    for (std::size_t i = 0; i < go.numel(); ++i) {
      if (mask[i]) inner += go.at(i) * p.at(i);
    }
    for (std::size_t i = 0; i < go.numel(); ++i) {
      if (mask[i]) gs.at(i) += p.at(i) * (go.at(i) - inner);
    }
  };
  return y;
}

Var Tape::log_softmax(Var lv) {
  const int l = check(lv);
  const Tensor& lt = val(l);
  require(lt.rank() == 1 && lt.numel() > 0,
          "log_softmax: need a non-empty vector, got shape " + shape_str(lt.shape));
  real max_v = lt.at(0);
  for (std::size_t i = 1; i < lt.numel(); ++i) max_v = std::max(max_v, lt.at(i));
  real denom = 0.0;
  for (std::size_t i = 0; i < lt.numel(); ++i) denom += std::exp(lt.at(i) - max_v);
  const real log_denom = max_v + std::log(denom);
  Tensor out = Tensor::zeros(lt.shape);
  for (std::size_t i = 0; i < lt.numel(); ++i) out.at(i) = lt.at(i) - log_denom;
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, l, y = y.id]() {
    const Tensor& go = nodes_[y].gbuf;
    const Tensor& yt = nodes_[y].value;
    Tensor& gl = g(l);
    real gsum = 0.0;
    for (std::size_t i = 0; i < go.numel(); ++i) gsum += go.at(i);
    for (std::size_t i = 0; i < go.numel(); ++i) {
      gl.at(i) += go.at(i) - std::exp(yt.at(i)) * gsum;
    }
  };
  return y;
}

Var Tape::concat(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat: no parts");
  std::vector<int> ids;
  std::size_t total = 0;
  for (Var p : parts) {
    ids.push_back(check(p));
    require(val(ids.back()).rank() == 1,
            "concat: part shape " + shape_str(val(ids.back()).shape) + " is not a vector");
    total += val(ids.back()).numel();
  }
  Tensor out = Tensor::zeros({total});
  std::size_t at = 0;
  for (int id : ids) {
    const Tensor& t = val(id);
    for (std::size_t i = 0; i < t.numel(); ++i) out.at(at++) = t.at(i);
  }
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, ids, y = y.id]() {
    const Tensor& go = nodes_[y].gbuf;
    std::size_t at = 0;
    for (int id : ids) {
      Tensor& gi = g(id);
      for (std::size_t i = 0; i < gi.numel(); ++i) gi.at(i) += go.at(at++);
    }
  };
  return y;
}

Var Tape::concat_rows(const std::vector<Var>& rows) {
  require(!rows.empty(), "concat_rows: no rows");
  std::vector<int> ids;
  for (Var r : rows) ids.push_back(check(r));
  const std::size_t k = val(ids[0]).numel();
  for (int id : ids) {
    require(val(id).rank() == 1 && val(id).numel() == k,
            "concat_rows: row shape " + shape_str(val(id).shape) +
                " does not match first row shape " + shape_str(val(ids[0]).shape));
  }
  Tensor out = Tensor::zeros({ids.size(), k});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const Tensor& r = val(ids[t]);
    for (std::size_t j = 0; j < k; ++j) out.at(t, j) = r.at(j);
  }
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, ids, k, y = y.id]() {
    const Tensor& go = nodes_[y].gbuf;
    for (std::size_t t = 0; t < ids.size(); ++t) {
      Tensor& gr = g(ids[t]);
      for (std::size_t j = 0; j < k; ++j) gr.at(j) += go.at(t, j);
    }
  };
  return y;
}

Var Tape::row(Var Mv, std::size_t index) {
  const int M = check(Mv);
  const Tensor& Mt = val(M);
  require(Mt.rank() == 2, "row: shape " + shape_str(Mt.shape) + " is not a matrix");
  require(index < Mt.rows(), "row: index " + std::to_string(index) +
                                 " out of range for shape " + shape_str(Mt.shape));
  const std::size_t k = Mt.cols();
  Tensor out = Tensor::zeros({k});
  for (std::size_t j = 0; j < k; ++j) out.at(j) = Mt.at(index, j);
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, M, index, k, y = y.id]() {
    const Tensor& go = nodes_[y].gbuf;
    Tensor& gM = g(M);
    for (std::size_t j = 0; j < k; ++j) gM.values[index * k + j] += go.at(j);
  };
  return y;
}

Var Tape::mean_rows(Var Av) {
  const int A = check(Av);
  const Tensor& At = val(A);
  require(At.rank() == 2 && At.rows() > 0,
          "mean_rows: need a non-empty matrix, got shape " + shape_str(At.shape));
  const std::size_t T = At.rows(), k = At.cols();
  Tensor out = Tensor::zeros({k});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < k; ++j) out.at(j) += At.at(t, j);
  }
  for (std::size_t j = 0; j < k; ++j) out.at(j) /= static_cast<real>(T);
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, A, T, k, y = y.id]() {
    const Tensor& go = nodes_[y].gbuf;
    Tensor& gA = g(A);
    const real inv = 1.0 / static_cast<real>(T);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < k; ++j) gA.at(t, j) += go.at(j) * inv;
    }
  };
  return y;
}

Var Tape::pick(Var vv, std::size_t index) {
  const int v = check(vv);
  const Tensor& vt = val(v);
  require(vt.rank() == 1, "pick: shape " + shape_str(vt.shape) + " is not a vector");
  require(index < vt.numel(), "pick: index " + std::to_string(index) +
                                  " out of range for shape " + shape_str(vt.shape));
  Var y = push(Tensor::scalar(vt.at(index)), nullptr);
  nodes_[y.id].back = [this, v, index, y = y.id]() {
    g(v).at(index) += nodes_[y].gbuf.at(0);
  };
  return y;
}

Var Tape::sum(Var vv) {
  const int v = check(vv);
  const Tensor& vt = val(v);
  real acc = 0.0;
  for (real x : vt.values) acc += x;
  Var y = push(Tensor::scalar(acc), nullptr);
  nodes_[y.id].back = [this, v, y = y.id]() {
    const real go = nodes_[y].gbuf.at(0);
    Tensor& gv = g(v);
    for (std::size_t i = 0; i < gv.numel(); ++i) gv.at(i) += go;
  };
  return y;
}

Var Tape::reshape(Var xv, std::vector<std::size_t> shape) {
  const int x = check(xv);
  require(shape_numel(shape) == val(x).numel(),
          "reshape: shape " + shape_str(shape) + " does not hold shape " +
              shape_str(val(x).shape));
  Tensor out = val(x);
  out.grad.clear();
  out.shape = std::move(shape);
  Var y = push(std::move(out), nullptr);
  nodes_[y.id].back = [this, x, y = y.id]() {
    const Tensor& go = nodes_[y].gbuf;
    Tensor& gx = g(x);
    for (std::size_t i = 0; i < go.numel(); ++i) gx.at(i) += go.at(i);
  };
  return y;
}

void Tape::backward(Var output) {
  const int out = check(output);
  if (val(out).numel() != 1) {
    throw ContractError("backward: output shape " + shape_str(val(out).shape) +
                        " is not scalar");
  }
  if (backward_done_) {
    throw ContractError("backward: tape already swept; one pass per tape");
  }
  backward_done_ = true;
  g(out).at(0) = 1.0;
  for (int i = out; i >= 0; --i) {
    Node& node = nodes_[i];
    if (!node.live) continue;
    if (node.back) {
      node.back();
    } else if (node.bound) {
      node.bound->ensure_grad();
      for (std::size_t j = 0; j < node.gbuf.numel(); ++j) {
        node.bound->grad[j] += node.gbuf.at(j);
      }
    }
  }
}

void Tape::clear() {
  nodes_.clear();
  watched_.clear();
  backward_done_ = false;
}

}  // namespace lcnmt
