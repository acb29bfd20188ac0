#include "lcnmt/gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "lcnmt/error.hpp"

namespace lcnmt {

std::vector<std::string> GradCheckReport::failures(real tol) const {
  std::vector<std::string> bad;
  for (const auto& e : entries) {
    if (e.max_rel_err > tol) bad.push_back(e.name);
  }
  return bad;
}

std::string GradCheckReport::summary(real tol) const {
  std::ostringstream os;
  os << "gradcheck: max relative error " << max_rel_err;
  const auto bad = failures(tol);
  if (bad.empty()) {
    os << ", all " << entries.size() << " parameters within " << tol;
  } else {
    os << ", " << bad.size() << " parameters over " << tol << ":";
    for (const auto& name : bad) os << " " << name;
  }
  return os.str();
}

namespace {

real checked_loss(const std::function<real(bool)>& loss, bool with_grad) {
  const real value = loss(with_grad);
  if (!std::isfinite(value)) {
    throw NumericError("finite_difference_check: non-finite loss " +
                       std::to_string(value));
  }
  return value;
}

}  // namespace

GradCheckReport finite_difference_check(const std::function<real(bool)>& loss,
                                        const std::vector<NamedParam>& params,
                                        real step, real /*tol*/) {
  for (const auto& p : params) {
    p.tensor->ensure_grad();
    p.tensor->zero_grad();
  }
  checked_loss(loss, true);

  std::vector<std::vector<real>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.tensor->grad);

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& t = *params[pi].tensor;
    GradCheckEntry entry;
    entry.name = params[pi].name;
    entry.checked = t.numel();
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const real saved = t.values[i];
      t.values[i] = saved + step;
      const real plus = checked_loss(loss, false);
      t.values[i] = saved - step;
      const real minus = checked_loss(loss, false);
      t.values[i] = saved;

      const real numeric = (plus - minus) / (2.0 * step);
      const real an = analytic[pi][i];
      const real diff = std::fabs(numeric - an);
      real rel = 0.0;
      if (diff > 1e-9) {
        rel = diff / std::max(std::fabs(numeric), std::fabs(an));
      }
      if (rel >= entry.max_rel_err) {
        entry.max_rel_err = rel;
        entry.worst_index = i;
        entry.analytic = an;
        entry.numeric = numeric;
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace lcnmt
