#pragma once

#include <cstdint>
#include <vector>

#include "rgbdc/tape.hpp"

namespace rgbdc {

enum class Activation { Identity, Softplus, Sigmoid, LeakyRelu };

// Fully connected stack. widths = {in, h1, ..., out}; the hidden activation
// is applied after every layer except the last.
struct DenseNet {
  std::vector<int> widths;
  Activation hidden = Activation::Softplus;

  int layer_count() const { return static_cast<int>(widths.size()) - 1; }
  // Parameter layout: W_0 (in x h1), b_0 (h1), W_1, b_1, ...
  std::vector<Tensor> init_params(uint64_t seed, double weight_scale = 1.0) const;

  // x is (B, in); returns (B, out).
  Value forward(Tape& tape, const std::vector<Value>& params, Value x) const;

  // Analytic per-sample gradient of the scalar output w.r.t. the input,
  // expressed as tape operations so it can itself be differentiated.
  // Requires out == 1 and a smooth hidden activation.
  Value input_gradient(Tape& tape, const std::vector<Value>& params, Value x) const;
};

Value apply_activation(Value v, Activation act);

}  // namespace rgbdc
