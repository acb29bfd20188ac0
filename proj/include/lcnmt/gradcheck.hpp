#ifndef LCNMT_GRADCHECK_HPP
#define LCNMT_GRADCHECK_HPP

#include <functional>
#include <string>
#include <vector>

#include "lcnmt/tensor.hpp"

namespace lcnmt {

struct NamedParam {
  std::string name;
  Tensor* tensor;
};

struct GradCheckEntry {
  std::string name;
  real max_rel_err = 0.0;
  std::size_t worst_index = 0;
  real analytic = 0.0;
  real numeric = 0.0;
  std::size_t checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  real max_rel_err = 0.0;

  std::vector<std::string> failures(real tol) const;
  bool ok(real tol) const { return failures(tol).empty(); }
  std::string summary(real tol) const;
};

// Compares tape gradients against central finite differences, element by
// element. `loss(with_grad)` must evaluate the loss at the parameters'
// current values; when with_grad is set it must also accumulate gradients
// into each parameter's grad slot. The loss must be deterministic
// (dropout off, fixed data).
//
// Error rule per element: diff = |numeric - analytic|; zero when diff is
// below 1e-9 absolute (finite-difference noise floor), otherwise
// diff / max(|numeric|, |analytic|).
GradCheckReport finite_difference_check(const std::function<real(bool)>& loss,
                                        const std::vector<NamedParam>& params,
                                        real step, real tol);

}  // namespace lcnmt

#endif
