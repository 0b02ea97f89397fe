#pragma once

#include <string>

#include "rgbdc/camera.hpp"
#include "rgbdc/image.hpp"
#include "rgbdc/tape.hpp"

namespace rgbdc {

struct UnprojectResult {
  PointCloud cloud;
  int skipped = 0;  // pixels with non-positive depth
};

// One world point per pixel with positive depth: p = R^T (K^-1 * d * (x,y,1) - t).
UnprojectResult unproject(const RgbdImage& img, const CameraIntrinsics& k,
                          const RigidTransform& e);

struct ProjectedPoints {
  Tensor coords;  // N x 2
  Tensor depths;  // N
  std::vector<uint8_t> valid;  // depth > 0
};

ProjectedPoints project_points(const PointCloud& pc, const CameraIntrinsics& k,
                               const RigidTransform& e);

// Applies the view-change transform to every pixel of a depth map, producing
// the pixel's continuous coordinate in the other view and its depth there.
WarpField compute_warp_field(const Tensor& depth, const CameraIntrinsics& k,
                             const RigidTransform& t12);

// Standard bilinear interpolation of (H,W,C) or (H,W) grids at (H',W',2)
// coordinates. Out-of-range coordinates clamp to the border.
Tensor bilinear_sample(const Tensor& grid, const Tensor& coords);

struct WarpedImage {
  Tensor rgb;    // H x W x 3
  Tensor depth;  // H x W
  std::vector<uint8_t> valid;
};

WarpedImage warp_image(const RgbdImage& src, const WarpField& wf);

// true iff valid and projected_depth <= warped_depth + margin.
OcclusionMask occlusion_mask(const WarpField& wf, const Tensor& warped_depth, double margin);

// Unit camera-space normals from finite differences of unprojected neighbors;
// one-sided at the borders. Oriented toward the camera.
Tensor normal_map(const Tensor& depth, const CameraIntrinsics& k);

void export_ply(const PointCloud& pc, const std::string& path);

// ---- differentiable bridges ----

// Tape op over a depth map: packs (x, y, depth) per pixel into H x W x 3.
// The target-view coordinates are smooth rational functions of the depth.
Value warp_project(Value depth, const CameraIntrinsics& k, const RigidTransform& t12);

// Tape op version of bilinear_sample; differentiable in both grid and coords.
Value bilinear_sample(Value grid, Value coords);

// Validity flags derived from a warp_project value tensor.
std::vector<uint8_t> warp_valid_flags(const Tensor& packed, int src_width, int src_height);

}  // namespace rgbdc
