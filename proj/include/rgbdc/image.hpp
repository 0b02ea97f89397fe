#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rgbdc/tensor.hpp"

namespace rgbdc {

struct RgbdImage {
  int width = 0;
  int height = 0;
  Tensor rgb;    // H x W x 3, values in [0,1]
  Tensor depth;  // H x W, world units

  static RgbdImage create(int width, int height);
  void validate() const;
};

// Per-pixel correspondence from one view into another: continuous source
// coordinates, the projected depth in the source frame, and validity flags.
struct WarpField {
  int width = 0;
  int height = 0;
  Tensor coords;           // H x W x 2, channel 0 = x, channel 1 = y
  Tensor projected_depth;  // H x W
  std::vector<uint8_t> valid;  // H x W row-major

  bool is_valid(int y, int x) const { return valid[static_cast<size_t>(y) * width + x] != 0; }
};

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> colors;  // in [0,1]

  size_t size() const { return points.size(); }
};

struct OcclusionMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> mask;  // true = gradients kept

  bool at(int y, int x) const { return mask[static_cast<size_t>(y) * width + x] != 0; }
  size_t count() const;
};

}  // namespace rgbdc
