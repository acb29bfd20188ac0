#include "lcnmt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lcnmt/error.hpp"

namespace lcnmt {

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  Tensor t;
  t.values.assign(shape_numel(shape), 0.0);
  t.shape = std::move(shape);
  return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, real fill) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.values.begin(), t.values.end(), fill);
  return t;
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<real> values) {
  if (shape_numel(shape) != values.size()) {
    throw ContractError("tensor: shape " + shape_str(shape) + " does not hold " +
                        std::to_string(values.size()) + " values");
  }
  Tensor t;
  t.shape = std::move(shape);
  t.values = std::move(values);
  return t;
}

Tensor Tensor::vec(std::initializer_list<real> values) {
  Tensor t;
  t.shape = {values.size()};
  t.values.assign(values.begin(), values.end());
  return t;
}

Tensor Tensor::scalar(real value) {
  Tensor t;
  t.shape = {1};
  t.values.assign(1, value);
  return t;
}

Tensor Tensor::gaussian(std::vector<std::size_t> shape, real stddev, Rng& rng) {
  Tensor t = zeros(std::move(shape));
  for (auto& v : t.values) v = stddev * rng.gaussian();
  return t;
}

Tensor Tensor::orthogonal(std::size_t dim, Rng& rng) {
  // Modified Gram-Schmidt on gaussian columns, with one re-pass.
  Tensor m = gaussian({dim, dim}, 1.0, rng);
  for (std::size_t c = 0; c < dim; ++c) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < c; ++p) {
        real dot = 0.0;
        for (std::size_t r = 0; r < dim; ++r) dot += m.at(r, c) * m.at(r, p);
        for (std::size_t r = 0; r < dim; ++r) m.at(r, c) -= dot * m.at(r, p);
      }
    }
    real norm = 0.0;
    for (std::size_t r = 0; r < dim; ++r) norm += m.at(r, c) * m.at(r, c);
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      // Degenerate draw; replace the column and redo it.
      for (std::size_t r = 0; r < dim; ++r) m.at(r, c) = rng.gaussian();
      --c;
      continue;
    }
    for (std::size_t r = 0; r < dim; ++r) m.at(r, c) /= norm;
  }
  return m;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw ContractError("tensor: rows() on shape " + shape_str(shape));
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw ContractError("tensor: cols() on shape " + shape_str(shape));
  return shape[1];
}

real& Tensor::at(std::size_t i, std::size_t j) { return values[i * shape[1] + j]; }
real Tensor::at(std::size_t i, std::size_t j) const { return values[i * shape[1] + j]; }

void Tensor::ensure_grad() {
  if (grad.empty()) grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() {
  std::fill(grad.begin(), grad.end(), 0.0);
}

bool Tensor::all_finite() const {
  for (real v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::check_valid(const std::string& what) const {
  if (shape_numel(shape) != values.size()) {
    throw ContractError(what + ": shape " + shape_str(shape) + " does not match " +
                        std::to_string(values.size()) + " values");
  }
  if (!grad.empty() && grad.size() != values.size()) {
    throw ContractError(what + ": grad size " + std::to_string(grad.size()) +
                        " does not match values size " + std::to_string(values.size()));
  }
}

real act_apply(Act f, real x) {
  switch (f) {
    case Act::Tanh:
      return std::tanh(x);
    case Act::Sigmoid:
      return 1.0 / (1.0 + std::exp(-x));
    case Act::Exp:
      return std::exp(x);
    case Act::Log:
      if (x <= 0.0) {
        throw NumericError("log: non-positive input " + std::to_string(x));
      }
      return std::log(x);
  }
  throw ContractError("elementwise: unknown activation");
}

Tensor elementwise(const Tensor& x, Act f) {
  Tensor y = x;
  y.grad.clear();
  for (auto& v : y.values) v = act_apply(f, v);
  return y;
}

Tensor softmax_masked(const Tensor& scores, const std::vector<char>& mask) {
  if (mask.size() != scores.numel()) {
    throw ContractError("softmax_masked: mask length " + std::to_string(mask.size()) +
                        " does not match scores shape " + shape_str(scores.shape));
  }
  real max_score = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    if (!any || scores.at(i) > max_score) max_score = scores.at(i);
    any = true;
  }
  if (!any) throw ContractError("softmax_masked: empty support, all positions masked");

  Tensor out = Tensor::zeros(scores.shape);
  real denom = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    out.at(i) = std::exp(scores.at(i) - max_score);
    denom += out.at(i);
  }
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.at(i) /= denom;
  }
  return out;
}

}  // namespace lcnmt
