#pragma once

#include "rgbdc/camera.hpp"
#include "rgbdc/dense_net.hpp"
#include "rgbdc/geometry.hpp"
#include "rgbdc/image.hpp"
#include "rgbdc/tape.hpp"

namespace rgbdc {

struct LossWeights {
  double lambda_3d = 1.0;
  double lambda_depth = 10.0;
  double d_min = 0.3;
  // Negative means automatic: 1e-3 times the depth range of the pair.
  double occlusion_margin = -1.0;
  double r1_weight = 10.0;

  void validate() const;
  double resolve_margin(double depth_min, double depth_max) const;
};

struct LossReport {
  double photometric = 0;
  double depth_consistency = 0;
  double depth_floor = 0;
  double adversarial = 0;
  double total = 0;
  double masked_fraction = 0;  // fraction of pixels excluded from the 3D terms
  bool empty_mask_warning = false;

  static std::string csv_header();
  std::string csv_row(int64_t iteration) const;
};

// The two 3D-consistency terms as tape values, symmetrized over both view
// transform directions. Occlusion-masked pixels are excluded from both terms
// and receive no gradient.
struct Loss3dValues {
  Value photometric;
  Value depth_consistency;
  double masked_fraction = 0;
  bool empty_mask = false;
};

Loss3dValues loss_3d_value(Tape& tape, Value rgb1, Value depth1, Value rgb2, Value depth2,
                           const CameraIntrinsics& k, const RigidTransform& e1,
                           const RigidTransform& e2, const LossWeights& weights);

namespace detail {

// One direction of the consistency loss (view a compared against view b
// resampled through the a->b transform). The symmetric loss averages the two
// directions; exposed so the per-direction gradient gating is testable.
struct DirectionTerms {
  Value photometric;
  Value depth_consistency;
  std::vector<uint8_t> mask;  // pixels kept by validity + occlusion test
  double kept_fraction = 0;
  bool empty = false;
};

DirectionTerms loss_3d_one_direction(Tape& tape, Value rgb_a, Value depth_a, Value rgb_b,
                                     Value depth_b, const CameraIntrinsics& k,
                                     const RigidTransform& t_ab, double margin);

}  // namespace detail

struct Loss3dResult {
  double photometric = 0;
  double depth_consistency = 0;
  double masked_fraction = 0;
  bool empty_mask = false;
  Tensor d_rgb1, d_depth1, d_rgb2, d_depth2;  // gradients of photometric + depth_consistency
};

Loss3dResult loss_3d(const RgbdImage& img1, const RgbdImage& img2, const CameraIntrinsics& k,
                     const CameraPose& pose1, const CameraPose& pose2, const LossWeights& weights);

Value loss_depth_floor_value(Value depth, double d_min);

struct DepthFloorResult {
  double value = 0;
  Tensor gradient;
};

DepthFloorResult loss_depth_floor(const Tensor& depth, double d_min);

struct Loss3dTerms {
  double photometric = 0;
  double depth_consistency = 0;
  double masked_fraction = 0;
  bool empty_mask = false;
};

// L = adversarial + lambda_3d * (photometric + depth_consistency)
//       + lambda_depth * depth_floor. Throws on NaN, naming the bad term.
LossReport generator_objective(double adversarial, const Loss3dTerms& l3d, double depth_floor,
                               const LossWeights& weights);

Value generator_objective_value(Tape& tape, Value adversarial, Value photometric,
                                Value depth_consistency, Value depth_floor,
                                const LossWeights& weights);

// Non-saturating adversarial terms.
Value adversarial_generator_loss(Value fake_logits);  // mean softplus(-l)
Value adversarial_discriminator_loss(Value real_logits, Value fake_logits);

// Mean over the batch of the squared gradient norm of the discriminator
// output w.r.t. its input (R1 form), built from the net's analytic
// input-gradient so the result is itself differentiable in the parameters.
Value r1_penalty_value(Tape& tape, const DenseNet& disc, const std::vector<Value>& disc_params,
                       Value real_inputs);

struct AdversarialScalars {
  double g_loss = 0;
  double d_loss = 0;
  double penalty = 0;
};

AdversarialScalars adversarial_losses(const Tensor& real_logits, const Tensor& fake_logits,
                                      const DenseNet& disc, const std::vector<Tensor>& disc_params,
                                      const Tensor& real_inputs);

}  // namespace rgbdc
