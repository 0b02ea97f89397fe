#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rgbdc/camera.hpp"
#include "rgbdc/dense_net.hpp"
#include "rgbdc/image.hpp"
#include "rgbdc/losses.hpp"
#include "rgbdc/oracle.hpp"
#include "rgbdc/tape.hpp"

namespace rgbdc {

// Camera-conditioned RGBD generator: dense layers on concat(z, cyclic pose
// encoding), reshaped to a 4x4 feature map, then nearest upsampling with
// per-pixel channel mixing. RGB head is a sigmoid; the depth head is
// depth_base + depth_scale * softplus, so depth stays positive.
struct GeneratorSpec {
  int latent_dim = 16;
  std::vector<int> dense_widths = {64};
  int base_channels = 32;
  std::vector<int> stage_channels = {24, 16};  // one entry per 2x upsample
  int output_size = 16;                        // must equal 4 * 2^stages
  double depth_base = 0.3;
  double depth_scale = 1.0;

  void validate() const;
  int cond_dim() const { return latent_dim + 4; }
  std::vector<Tensor> init_params(uint64_t seed) const;
};

struct GeneratedRgbd {
  Value rgb;    // H x W x 3
  Value depth;  // H x W
};

GeneratedRgbd generate_value(Tape& tape, const GeneratorSpec& spec,
                             const std::vector<Value>& params, const Tensor& z,
                             const CameraPose& pose);

RgbdImage generate(const GeneratorSpec& spec, const std::vector<Tensor>& params, const Tensor& z,
                   const CameraPose& pose);

struct TrainConfig {
  GeneratorSpec gen;
  std::vector<int> disc_hidden = {64, 32};
  LossWeights weights;
  PoseDistribution poses;
  int batch_size = 8;
  int iterations = 500;
  double lr_generator = 1e-3;
  double lr_discriminator = 3e-3;
  uint64_t seed = 1;
  int real_pool = 128;  // oracle renders forming the real-image distribution

  void validate() const;
};

struct TrainResult {
  std::vector<Tensor> gen_params;
  std::vector<Tensor> disc_params;
  std::vector<LossReport> reports;  // one per iteration
  std::string csv_log;
  double max_abs_depth_grad = 0;  // over the whole run
};

DenseNet make_discriminator(int image_size, const std::vector<int>& hidden);

// Adversarial-plus-consistency training against the oracle scene's image
// distribution. Deterministic for a fixed config.
TrainResult train(const TrainConfig& cfg, const Scene& scene, const CameraIntrinsics& k);

struct RecoverDepthConfig {
  LossWeights weights;
  int iterations = 2000;
  double lr = 0.01;
  double init_depth = 1.0;
  Tensor init_map;  // when non-empty, overrides the constant init
};

struct RecoverDepthResult {
  Tensor depth;  // optimized view-1 depth
  std::vector<double> loss_history;
  bool diverged = false;
};

// Direct per-pixel depth optimization for view 1 against a fixed second RGBD
// view, minimizing the consistency terms plus the depth floor.
RecoverDepthResult recover_depth(const Tensor& rgb1, const RgbdImage& view2,
                                 const CameraIntrinsics& k, const CameraPose& pose1,
                                 const CameraPose& pose2, const RecoverDepthConfig& cfg);

// Color-distance-from-background weighted horizontal centroid, in pixels.
// Used to measure how the rendered object moves under a conditioning sweep.
double foreground_centroid_x(const Tensor& rgb, const Eigen::Vector3d& background_color);

}  // namespace rgbdc
