#pragma once

#include <vector>

#include "rgbdc/tensor.hpp"

namespace rgbdc {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  int64_t step = 0;

  static AdamState init(const std::vector<Tensor>& params);
};

// Standard Adam update with bias correction. Throws on non-finite gradients.
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state,
               const AdamConfig& cfg);

}  // namespace rgbdc
