#include "rgbdc/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rgbdc {

namespace {

double evaluate(const TapeFn& fn, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Value> vals;
  vals.reserve(inputs.size());
  for (const Tensor& t : inputs) vals.push_back(tape.input(t));
  Value root = fn(tape, vals);
  const Tensor& out = tape.val(root);
  if (out.size() != 1) throw std::invalid_argument("grad_check: function is not scalar-valued");
  return out[0];
}

}  // namespace

GradCheckReport grad_check(const TapeFn& fn, const std::vector<Tensor>& inputs, double step,
                           double tol) {
  if (step <= 0) throw std::invalid_argument("grad_check: step must be positive");
  GradCheckReport report;

  // One reverse-mode pass for all analytic gradients.
  Tape tape;
  std::vector<Value> vals;
  for (const Tensor& t : inputs) vals.push_back(tape.input(t));
  Value root = fn(tape, vals);
  if (tape.val(root).size() != 1)
    throw std::invalid_argument("grad_check: function is not scalar-valued");
  double f0 = tape.val(root)[0];
  tape.backward(root);

  std::vector<Tensor> analytic;
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (tape.has_grad(vals[i]))
      analytic.push_back(tape.grad(vals[i]));
    else
      analytic.push_back(Tensor::zeros(inputs[i].shape()));
  }

  std::vector<Tensor> probe = inputs;
  for (size_t i = 0; i < inputs.size(); ++i) {
    for (int64_t e = 0; e < inputs[i].size(); ++e) {
      double x = inputs[i][e];
      probe[i][e] = x + step;
      double fp = evaluate(fn, probe);
      probe[i][e] = x - step;
      double fm = evaluate(fn, probe);
      probe[i][e] = x;

      double fwd = (fp - f0) / step;
      double bwd = (f0 - fm) / step;
      double slope_gap = std::fabs(fwd - bwd);
      if (slope_gap > 1e-7 && slope_gap > 0.1 * std::max(std::fabs(fwd), std::fabs(bwd))) {
        ++report.skipped;
        continue;
      }

      double numeric = (fp - fm) / (2.0 * step);
      double a = analytic[i][e];
      double denom = std::max({std::fabs(numeric), std::fabs(a), 1e-6});
      double rel = std::fabs(numeric - a) / denom;
      ++report.checked;
      report.max_rel_err = std::max(report.max_rel_err, rel);
      if (rel > tol)
        report.failures.push_back({static_cast<int>(i), e, numeric, a, rel});
    }
  }
  return report;
}

std::string format_report(const GradCheckReport& r, const std::string& name, double tol) {
  std::ostringstream os;
  os << (r.pass() ? "PASS" : "FAIL") << "  " << name << "  checked=" << r.checked
     << " skipped=" << r.skipped << " max_rel_err=" << r.max_rel_err << " tol=" << tol;
  for (size_t i = 0; i < r.failures.size() && i < 5; ++i) {
    const GradCheckEntry& f = r.failures[i];
    os << "\n  input " << f.input << " elem " << f.element << ": numeric=" << f.numeric
       << " analytic=" << f.analytic << " rel_err=" << f.rel_err;
  }
  return os.str();
}

}  // namespace rgbdc
