#pragma once

#include <vector>

#include "rgbdc/tape.hpp"
#include "rgbdc/tensor.hpp"

namespace rgbdc {

// Depth-major stack of per-voxel surface probabilities; slice 0 is nearest
// the camera. Rays are the axis-aligned columns of the grid.
struct OpacityGrid {
  Tensor values;                    // D x H x W in [0,1]
  std::vector<double> slice_depths;  // strictly increasing, size D

  int depth_slices() const { return values.dim(0); }
  int height() const { return values.dim(1); }
  int width() const { return values.dim(2); }
  void validate() const;
};

struct RayWeights {
  Tensor values;  // D x H x W, nonnegative
};

// Per-ray softmax over the depth dimension.
RayWeights softmax_projection_weights(const Tensor& scores);

// Front-to-back accumulation: a voxel keeps its opacity as weight while the
// prefix sum strictly before it is < 1; later voxels are zeroed.
RayWeights accumulative_projection_weights(const Tensor& opacities);

// Per-ray weighted sum of features (D x H x W x C) -> H x W x C.
Tensor project_grid(const Tensor& features, const RayWeights& weights);

struct ExpectedDepthResult {
  Tensor depth;                    // H x W
  std::vector<uint8_t> background;  // rays with zero weight sum
};

// Per-ray weight-averaged slice depth; zero-weight rays get far_depth and a
// background flag.
ExpectedDepthResult expected_depth(const RayWeights& weights,
                                   const std::vector<double>& slice_depths, double far_depth);

// Differentiable variants. The accumulative cutoff is a hard gate: gradients
// pass straight through kept voxels and are zero on dropped ones.
Value softmax_projection_weights(Value scores);
Value accumulative_projection_weights(Value opacities);
Value project_grid(Value features, Value weights);
Value expected_depth_value(Value weights, const std::vector<double>& slice_depths);

}  // namespace rgbdc
