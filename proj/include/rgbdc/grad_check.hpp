#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rgbdc/tape.hpp"

namespace rgbdc {

// Scalar-valued computation under test: builds the graph on the given tape
// from the supplied input leaves and returns the root.
using TapeFn = std::function<Value(Tape&, const std::vector<Value>&)>;

struct GradCheckEntry {
  int input = 0;
  int64_t element = 0;
  double numeric = 0;
  double analytic = 0;
  double rel_err = 0;
};

struct GradCheckReport {
  int64_t checked = 0;
  int64_t skipped = 0;  // kink-adjacent elements, detected by one-sided slope disagreement
  double max_rel_err = 0;
  std::vector<GradCheckEntry> failures;
  bool pass() const { return failures.empty() && checked > 0; }
};

// Central finite differences against reverse-mode gradients for every element
// of every input. Elements whose one-sided slopes disagree (a hinge, clamp,
// max switch, or integer bilinear coordinate inside the probed interval) are
// skipped rather than compared.
GradCheckReport grad_check(const TapeFn& fn, const std::vector<Tensor>& inputs, double step,
                           double tol);

std::string format_report(const GradCheckReport& r, const std::string& name, double tol);

}  // namespace rgbdc
