#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rgbdc/tensor.hpp"
#include "rgbdc/voxel_occlusion.hpp"

namespace rgbdc {

// 8-bit RGB PNG; values clamped to [0,1].
void write_png_rgb8(const std::string& path, const Tensor& rgb);
Tensor read_png_rgb8(const std::string& path);

// 16-bit grayscale PNG with linear mapping of [lo, hi] to [0, 65535]; the
// caller records lo/hi in a JSON sidecar.
void write_png_gray16(const std::string& path, const Tensor& values, double lo, double hi);

// Grayscale PFM, float32, scale -1.0 (little-endian), rows bottom-to-top.
void write_pfm(const std::string& path, const Tensor& values);
Tensor read_pfm(const std::string& path);

// Min-max normalized viridis-style color mapping of a depth map.
Tensor depth_colormap(const Tensor& depth);

// Single-file container: uint32 LE header length, JSON header (dims,
// slice_depths), then D*H*W float32 LE values.
void save_opacity_grid(const std::string& path, const OpacityGrid& grid);
OpacityGrid load_opacity_grid(const std::string& path);

struct Checkpoint {
  std::vector<Tensor> tensors;
  std::vector<std::string> names;
  int64_t iteration = 0;
  std::string config_hash;
};

// Raw float32 blob plus JSON manifest with shapes, iteration and config hash.
void save_checkpoint(const std::string& blob_path, const std::string& manifest_path,
                     const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& blob_path, const std::string& manifest_path);

}  // namespace rgbdc
