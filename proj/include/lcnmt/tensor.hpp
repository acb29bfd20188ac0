#ifndef LCNMT_TENSOR_HPP
#define LCNMT_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "lcnmt/rng.hpp"

namespace lcnmt {

using real = double;

enum class Act { Tanh, Sigmoid, Exp, Log };

// Dense row-major tensor with an optional gradient slot. All training
// math runs at 64-bit precision.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<real> values;
  std::vector<real> grad;  // empty, or values.size() elements

  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, real fill);
  static Tensor from(std::vector<std::size_t> shape, std::vector<real> values);
  static Tensor vec(std::initializer_list<real> values);
  static Tensor scalar(real value);
  static Tensor gaussian(std::vector<std::size_t> shape, real stddev, Rng& rng);
  // Random orthogonal square matrix (QR of a gaussian draw).
  static Tensor orthogonal(std::size_t dim, Rng& rng);

  std::size_t numel() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  real& at(std::size_t i) { return values[i]; }
  real at(std::size_t i) const { return values[i]; }
  real& at(std::size_t i, std::size_t j);
  real at(std::size_t i, std::size_t j) const;

  bool has_grad() const { return !grad.empty(); }
  void ensure_grad();  // allocate zeroed grad if absent
  void zero_grad();    // clear grad values (keeps allocation)
  bool all_finite() const;

  void check_valid(const std::string& what) const;  // shape/value invariants
};

std::string shape_str(const std::vector<std::size_t>& shape);
std::size_t shape_numel(const std::vector<std::size_t>& shape);

// Elementwise application of a named activation. Log requires strictly
// positive inputs.
Tensor elementwise(const Tensor& x, Act f);

// Probability distribution over unmasked positions; masked positions are
// exactly zero. Max-subtraction keeps exp in range. At least one position
// must be unmasked.
Tensor softmax_masked(const Tensor& scores, const std::vector<char>& mask);

real act_apply(Act f, real x);

}  // namespace lcnmt

#endif
