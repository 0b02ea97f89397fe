#include "rgbdc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rgbdc {

void LossWeights::validate() const {
  if (lambda_3d < 0 || lambda_depth < 0)
    throw std::invalid_argument("loss weights: lambdas must be >= 0");
  if (!(d_min > 0)) throw std::invalid_argument("loss weights: d_min must be positive");
  if (r1_weight < 0) throw std::invalid_argument("loss weights: r1_weight must be >= 0");
}

double LossWeights::resolve_margin(double depth_min, double depth_max) const {
  if (occlusion_margin >= 0) return occlusion_margin;
  return 1e-3 * std::max(depth_max - depth_min, 0.0);
}

std::string LossReport::csv_header() {
  return "iteration,photometric,depth_consistency,depth_floor,adversarial,total,masked_fraction";
}

std::string LossReport::csv_row(int64_t iteration) const {
  std::ostringstream os;
  os.precision(17);
  os << iteration << ',' << photometric << ',' << depth_consistency << ',' << depth_floor << ','
     << adversarial << ',' << total << ',' << masked_fraction;
  return os.str();
}

namespace detail {

// One direction of the consistency loss: project view a's pixels into view b,
// sample view b there, and compare on the occlusion-masked pixel set.
DirectionTerms loss_3d_one_direction(Tape& tape, Value rgb_a, Value depth_a, Value rgb_b,
                                     Value depth_b, const CameraIntrinsics& k,
                                     const RigidTransform& t_ab, double margin) {
  const Tensor& da = tape.val(depth_a);
  const int h = da.dim(0), w = da.dim(1);

  Value packed = warp_project(depth_a, k, t_ab);
  Value coords = slice_last_dim(packed, 0, 2);
  Value pdepth = reshape(slice_last_dim(packed, 2, 3), {h, w});
  Value warped_rgb = bilinear_sample(rgb_b, coords);
  Value warped_depth = bilinear_sample(depth_b, coords);

  // Mask decided from forward values only; it gates values and gradients.
  std::vector<uint8_t> valid = warp_valid_flags(tape.val(packed), w, h);
  const Tensor& pd = tape.val(pdepth);
  const Tensor& wd = tape.val(warped_depth);
  Tensor mask({h, w});
  int64_t kept = 0;
  DirectionTerms out;
  out.mask.assign(static_cast<size_t>(h) * w, 0);
  for (int64_t i = 0; i < mask.size(); ++i) {
    bool m = valid[static_cast<size_t>(i)] && pd[i] <= wd[i] + margin;
    mask[i] = m ? 1.0 : 0.0;
    out.mask[static_cast<size_t>(i)] = m ? 1 : 0;
    kept += m;
  }

  out.kept_fraction = static_cast<double>(kept) / static_cast<double>(h * w);
  if (kept == 0) {
    out.empty = true;
    out.photometric = tape.constant_scalar(0.0);
    out.depth_consistency = tape.constant_scalar(0.0);
    return out;
  }

  Tensor mask3({h, w, 3});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) mask3.at(y, x, c) = mask.at(y, x);

  Value mask_v = tape.constant(std::move(mask));
  Value mask3_v = tape.constant(std::move(mask3));
  double inv_n = 1.0 / static_cast<double>(kept);

  out.photometric = scale(sum_all(abs_val(rgb_a - warped_rgb) * mask3_v), inv_n / 3.0);
  out.depth_consistency = scale(sum_all(abs_val(pdepth - warped_depth) * mask_v), inv_n);
  return out;
}

}  // namespace detail

Loss3dValues loss_3d_value(Tape& tape, Value rgb1, Value depth1, Value rgb2, Value depth2,
                           const CameraIntrinsics& k, const RigidTransform& e1,
                           const RigidTransform& e2, const LossWeights& weights) {
  const Tensor& d1 = tape.val(depth1);
  const Tensor& d2 = tape.val(depth2);
  if (!d1.same_shape(d2) || !tape.val(rgb1).same_shape(tape.val(rgb2)))
    throw std::invalid_argument("loss_3d: view shapes differ");

  double dmin = std::min(d1.min(), d2.min());
  double dmax = std::max(d1.max(), d2.max());
  double margin = weights.resolve_margin(dmin, dmax);

  RigidTransform t12 = relative_transform(e1, e2);
  RigidTransform t21 = relative_transform(e2, e1);
  detail::DirectionTerms fwd =
      detail::loss_3d_one_direction(tape, rgb1, depth1, rgb2, depth2, k, t12, margin);
  detail::DirectionTerms bwd =
      detail::loss_3d_one_direction(tape, rgb2, depth2, rgb1, depth1, k, t21, margin);

  Loss3dValues out;
  out.photometric = scale(fwd.photometric + bwd.photometric, 0.5);
  out.depth_consistency = scale(fwd.depth_consistency + bwd.depth_consistency, 0.5);
  out.masked_fraction = 1.0 - 0.5 * (fwd.kept_fraction + bwd.kept_fraction);
  out.empty_mask = fwd.empty || bwd.empty;
  return out;
}

Loss3dResult loss_3d(const RgbdImage& img1, const RgbdImage& img2, const CameraIntrinsics& k,
                     const CameraPose& pose1, const CameraPose& pose2,
                     const LossWeights& weights) {
  img1.validate();
  img2.validate();
  weights.validate();
  RigidTransform e1 = pose_to_extrinsics(pose1);
  RigidTransform e2 = pose_to_extrinsics(pose2);

  Tape tape;
  Value rgb1 = tape.input(img1.rgb);
  Value depth1 = tape.input(img1.depth);
  Value rgb2 = tape.input(img2.rgb);
  Value depth2 = tape.input(img2.depth);
  Loss3dValues v = loss_3d_value(tape, rgb1, depth1, rgb2, depth2, k, e1, e2, weights);
  Value total = v.photometric + v.depth_consistency;
  tape.backward(total);

  Loss3dResult r;
  r.photometric = tape.val(v.photometric)[0];
  r.depth_consistency = tape.val(v.depth_consistency)[0];
  r.masked_fraction = v.masked_fraction;
  r.empty_mask = v.empty_mask;
  auto grad_or_zero = [&](Value val, const Tensor& like) {
    return tape.has_grad(val) ? tape.grad(val) : Tensor::zeros(like.shape());
  };
  r.d_rgb1 = grad_or_zero(rgb1, img1.rgb);
  r.d_depth1 = grad_or_zero(depth1, img1.depth);
  r.d_rgb2 = grad_or_zero(rgb2, img2.rgb);
  r.d_depth2 = grad_or_zero(depth2, img2.depth);
  return r;
}

Value loss_depth_floor_value(Value depth, double d_min) {
  if (!(d_min > 0)) throw std::invalid_argument("loss_depth_floor: d_min must be positive");
  Tape& tape = *depth.tape;
  Value deficit = relu(tape.constant_scalar(d_min) - depth);
  return mean_all(square(deficit));
}

DepthFloorResult loss_depth_floor(const Tensor& depth, double d_min) {
  if (!(d_min > 0)) throw std::invalid_argument("loss_depth_floor: d_min must be positive");
  DepthFloorResult r;
  r.gradient = Tensor::zeros(depth.shape());
  double inv_n = 1.0 / static_cast<double>(depth.size());
  double acc = 0;
  for (int64_t i = 0; i < depth.size(); ++i) {
    double deficit = std::max(0.0, d_min - depth[i]);
    acc += deficit * deficit;
    r.gradient[i] = -2.0 * deficit * inv_n;
  }
  r.value = acc * inv_n;
  return r;
}

namespace {
void check_finite(double v, const char* term) {
  if (!std::isfinite(v))
    throw std::runtime_error(std::string("generator objective: non-finite term '") + term + "'");
}
}  // namespace

LossReport generator_objective(double adversarial, const Loss3dTerms& l3d, double depth_floor,
                               const LossWeights& weights) {
  weights.validate();
  check_finite(adversarial, "adversarial");
  check_finite(l3d.photometric, "photometric");
  check_finite(l3d.depth_consistency, "depth_consistency");
  check_finite(depth_floor, "depth_floor");

  LossReport r;
  r.adversarial = adversarial;
  r.photometric = l3d.photometric;
  r.depth_consistency = l3d.depth_consistency;
  r.depth_floor = depth_floor;
  r.masked_fraction = l3d.masked_fraction;
  r.empty_mask_warning = l3d.empty_mask;
  r.total = adversarial + weights.lambda_3d * (l3d.photometric + l3d.depth_consistency) +
            weights.lambda_depth * depth_floor;
  return r;
}

Value generator_objective_value(Tape& tape, Value adversarial, Value photometric,
                                Value depth_consistency, Value depth_floor,
                                const LossWeights& weights) {
  (void)tape;
  weights.validate();
  return adversarial + scale(photometric + depth_consistency, weights.lambda_3d) +
         scale(depth_floor, weights.lambda_depth);
}

Value adversarial_generator_loss(Value fake_logits) { return mean_all(softplus(neg(fake_logits))); }

Value adversarial_discriminator_loss(Value real_logits, Value fake_logits) {
  return mean_all(softplus(neg(real_logits))) + mean_all(softplus(fake_logits));
}

Value r1_penalty_value(Tape& tape, const DenseNet& disc, const std::vector<Value>& disc_params,
                       Value real_inputs) {
  Value g = disc.input_gradient(tape, disc_params, real_inputs);  // (B, in)
  int batch = tape.val(real_inputs).dim(0);
  return scale(sum_all(square(g)), 1.0 / static_cast<double>(batch));
}

AdversarialScalars adversarial_losses(const Tensor& real_logits, const Tensor& fake_logits,
                                      const DenseNet& disc, const std::vector<Tensor>& disc_params,
                                      const Tensor& real_inputs) {
  if (!real_logits.all_finite() || !fake_logits.all_finite())
    throw std::invalid_argument("adversarial_losses: non-finite logits");
  Tape tape;
  Value real = tape.constant(real_logits);
  Value fake = tape.constant(fake_logits);
  std::vector<Value> params;
  for (const Tensor& p : disc_params) params.push_back(tape.input(p));
  Value inputs = tape.input(real_inputs);

  AdversarialScalars out;
  out.g_loss = tape.val(adversarial_generator_loss(fake))[0];
  out.d_loss = tape.val(adversarial_discriminator_loss(real, fake))[0];
  out.penalty = tape.val(r1_penalty_value(tape, disc, params, inputs))[0];
  return out;
}

}  // namespace rgbdc
