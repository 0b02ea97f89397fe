#include "rgbdc/generator.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "rgbdc/adam.hpp"

namespace rgbdc {

void GeneratorSpec::validate() const {
  if (latent_dim < 1) throw std::invalid_argument("generator: latent_dim must be >= 1");
  if (base_channels < 1) throw std::invalid_argument("generator: base_channels must be >= 1");
  if (stage_channels.empty()) throw std::invalid_argument("generator: need upsample stages");
  int size = 4;
  for (size_t i = 0; i < stage_channels.size(); ++i) size *= 2;
  if (size != output_size)
    throw std::invalid_argument("generator: output_size must be 4 * 2^stages, expected " +
                                std::to_string(size));
  if (!(depth_base > 0)) throw std::invalid_argument("generator: depth_base must be positive");
  if (!(depth_scale > 0)) throw std::invalid_argument("generator: depth_scale must be positive");
}

std::vector<Tensor> GeneratorSpec::init_params(uint64_t seed) const {
  validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto dense = [&](int in, int out, std::vector<Tensor>& ps) {
    Tensor w({in, out});
    double s = 1.0 / std::sqrt(static_cast<double>(in));
    for (int64_t i = 0; i < w.size(); ++i) w[i] = s * normal(rng);
    ps.push_back(std::move(w));
    ps.push_back(Tensor::zeros({out}));
  };
  std::vector<Tensor> params;
  int prev = cond_dim();
  for (int wdt : dense_widths) {
    dense(prev, wdt, params);
    prev = wdt;
  }
  dense(prev, 4 * 4 * base_channels, params);
  prev = base_channels;
  for (int ch : stage_channels) {
    dense(prev, ch, params);
    prev = ch;
  }
  dense(prev, 3, params);  // rgb head
  dense(prev, 1, params);  // depth head
  return params;
}

namespace {

// z = x W + b on a flattened (N, C) view of the feature map.
Value channel_mix(Tape& tape, Value features, Value w, Value b, int n, int out_c) {
  Value z = matmul(features, w) + broadcast_to(b, {n, out_c});
  (void)tape;
  return z;
}

}  // namespace

GeneratedRgbd generate_value(Tape& tape, const GeneratorSpec& spec,
                             const std::vector<Value>& params, const Tensor& z,
                             const CameraPose& pose) {
  spec.validate();
  if (z.size() != spec.latent_dim)
    throw std::invalid_argument("generate: latent size mismatch, expected " +
                                std::to_string(spec.latent_dim));
  size_t expect = 2 * (spec.dense_widths.size() + 1 + spec.stage_channels.size() + 2);
  if (params.size() != expect)
    throw std::invalid_argument("generate: wrong parameter count");

  CyclicEncoding enc = cyclic_encode(pose);
  Tensor cond({1, spec.cond_dim()});
  for (int i = 0; i < spec.latent_dim; ++i) cond[i] = z[i];
  for (int i = 0; i < 4; ++i) cond[spec.latent_dim + i] = enc.v[static_cast<size_t>(i)];

  size_t p = 0;
  Value h = tape.constant(std::move(cond));
  int prev = spec.cond_dim();
  for (int wdt : spec.dense_widths) {
    h = softplus(channel_mix(tape, h, params[p], params[p + 1], 1, wdt));
    p += 2;
    prev = wdt;
  }
  h = softplus(channel_mix(tape, h, params[p], params[p + 1], 1, 4 * 4 * spec.base_channels));
  p += 2;
  (void)prev;

  int size = 4;
  int channels = spec.base_channels;
  Value f = reshape(h, {size, size, channels});
  for (int ch : spec.stage_channels) {
    f = upsample_nearest2x(f);
    size *= 2;
    Value mixed = channel_mix(tape, reshape(f, {size * size, channels}), params[p], params[p + 1],
                              size * size, ch);
    p += 2;
    f = reshape(softplus(mixed), {size, size, ch});
    channels = ch;
  }

  Value rgb_lin = channel_mix(tape, reshape(f, {size * size, channels}), params[p], params[p + 1],
                              size * size, 3);
  p += 2;
  Value depth_lin = channel_mix(tape, reshape(f, {size * size, channels}), params[p], params[p + 1],
                                size * size, 1);

  GeneratedRgbd out;
  out.rgb = reshape(sigmoid(rgb_lin), {size, size, 3});
  out.depth = add_const(scale(softplus(reshape(depth_lin, {size, size})), spec.depth_scale),
                        spec.depth_base);
  return out;
}

RgbdImage generate(const GeneratorSpec& spec, const std::vector<Tensor>& params, const Tensor& z,
                   const CameraPose& pose) {
  Tape tape;
  std::vector<Value> pv;
  pv.reserve(params.size());
  for (const Tensor& t : params) pv.push_back(tape.constant(t));
  GeneratedRgbd g = generate_value(tape, spec, pv, z, pose);
  RgbdImage img;
  img.width = spec.output_size;
  img.height = spec.output_size;
  img.rgb = tape.val(g.rgb);
  img.depth = tape.val(g.depth);
  return img;
}

void TrainConfig::validate() const {
  gen.validate();
  weights.validate();
  poses.validate();
  if (batch_size < 1 || iterations < 1 || real_pool < 1)
    throw std::invalid_argument("train config: counts must be positive");
  if (!(lr_generator > 0) || !(lr_discriminator > 0))
    throw std::invalid_argument("train config: learning rates must be positive");
}

DenseNet make_discriminator(int image_size, const std::vector<int>& hidden) {
  DenseNet d;
  d.widths.push_back(image_size * image_size * 3);
  for (int h : hidden) d.widths.push_back(h);
  d.widths.push_back(1);
  d.hidden = Activation::Softplus;
  return d;
}

namespace {

Tensor flatten_rows(const std::vector<const Tensor*>& images) {
  int64_t cols = images[0]->size();
  Tensor out({static_cast<int>(images.size()), static_cast<int>(cols)});
  for (size_t r = 0; r < images.size(); ++r)
    for (int64_t j = 0; j < cols; ++j) out[static_cast<int64_t>(r) * cols + j] = (*images[r])[j];
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Scene& scene, const CameraIntrinsics& k) {
  cfg.validate();
  scene.validate();
  const int size = cfg.gen.output_size;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Real distribution: oracle renders at poses from the training distribution.
  std::vector<Tensor> real_pool;
  real_pool.reserve(static_cast<size_t>(cfg.real_pool));
  for (int i = 0; i < cfg.real_pool; ++i) {
    auto [c1, c2] = sample_pose_pair(cfg.poses, rng);
    real_pool.push_back(render_rgbd(scene, k, c1, size, size).rgb);
  }

  std::vector<Tensor> gen_params = cfg.gen.init_params(cfg.seed + 1);
  DenseNet disc = make_discriminator(size, cfg.disc_hidden);
  std::vector<Tensor> disc_params = disc.init_params(cfg.seed + 2);

  AdamState gen_state = AdamState::init(gen_params);
  AdamState disc_state = AdamState::init(disc_params);
  AdamConfig gen_adam{cfg.lr_generator, 0.9, 0.999, 1e-8};
  AdamConfig disc_adam{cfg.lr_discriminator, 0.9, 0.999, 1e-8};

  TrainResult result;
  std::ostringstream csv;
  csv << LossReport::csv_header() << '\n';

  std::uniform_int_distribution<int> pick_real(0, cfg.real_pool - 1);

  for (int it = 1; it <= cfg.iterations; ++it) {
    std::vector<std::vector<Tensor>> item_grads;
    std::vector<Tensor> fake_rgbs;  // both views of every item, for the D step
    Loss3dTerms terms_mean;
    double floor_mean = 0, adv_mean = 0;
    bool any_empty = false;

    for (int b = 0; b < cfg.batch_size; ++b) {
      Tensor z({cfg.gen.latent_dim});
      for (int64_t i = 0; i < z.size(); ++i) z[i] = normal(rng);
      auto [c1, c2] = sample_pose_pair(cfg.poses, rng);

      Tape tape;
      std::vector<Value> gp;
      for (const Tensor& t : gen_params) gp.push_back(tape.input(t));
      std::vector<Value> dp;
      for (const Tensor& t : disc_params) dp.push_back(tape.constant(t));

      GeneratedRgbd v1 = generate_value(tape, cfg.gen, gp, z, c1);
      GeneratedRgbd v2 = generate_value(tape, cfg.gen, gp, z, c2);

      RigidTransform e1 = pose_to_extrinsics(c1);
      RigidTransform e2 = pose_to_extrinsics(c2);
      Loss3dValues l3d =
          loss_3d_value(tape, v1.rgb, v1.depth, v2.rgb, v2.depth, k, e1, e2, cfg.weights);
      Value floor = scale(loss_depth_floor_value(v1.depth, cfg.weights.d_min) +
                              loss_depth_floor_value(v2.depth, cfg.weights.d_min),
                          0.5);

      // Adversarial term on the RGB channels of both generated views.
      Value fake_in = concat({reshape(v1.rgb, {1, size * size * 3}),
                              reshape(v2.rgb, {1, size * size * 3})},
                             0);
      Value fake_logits = disc.forward(tape, dp, fake_in);
      Value adv = adversarial_generator_loss(fake_logits);

      Value total =
          generator_objective_value(tape, adv, l3d.photometric, l3d.depth_consistency, floor,
                                    cfg.weights);
      tape.backward(total);

      // NaN in any component aborts with the term named.
      Loss3dTerms terms{tape.val(l3d.photometric)[0], tape.val(l3d.depth_consistency)[0],
                        l3d.masked_fraction, l3d.empty_mask};
      generator_objective(tape.val(adv)[0], terms, tape.val(floor)[0], cfg.weights);

      terms_mean.photometric += terms.photometric;
      terms_mean.depth_consistency += terms.depth_consistency;
      terms_mean.masked_fraction += terms.masked_fraction;
      any_empty = any_empty || terms.empty_mask;
      floor_mean += tape.val(floor)[0];
      adv_mean += tape.val(adv)[0];

      if (tape.has_grad(v1.depth))
        result.max_abs_depth_grad =
            std::max(result.max_abs_depth_grad,
                     std::max(std::fabs(tape.grad(v1.depth).min()),
                              std::fabs(tape.grad(v1.depth).max())));

      std::vector<Tensor> grads;
      grads.reserve(gp.size());
      for (size_t i = 0; i < gp.size(); ++i)
        grads.push_back(tape.has_grad(gp[i]) ? tape.grad(gp[i])
                                             : Tensor::zeros(gen_params[i].shape()));
      item_grads.push_back(std::move(grads));

      fake_rgbs.push_back(tape.val(v1.rgb));
      fake_rgbs.push_back(tape.val(v2.rgb));
    }

    // Pinned pairwise-tree reduction over batch items.
    std::vector<Tensor> gen_grads;
    for (size_t p = 0; p < gen_params.size(); ++p) {
      std::vector<Tensor> per_item;
      per_item.reserve(item_grads.size());
      for (const auto& ig : item_grads) per_item.push_back(ig[p]);
      Tensor g = tree_sum(per_item);
      for (int64_t j = 0; j < g.size(); ++j) g[j] /= cfg.batch_size;
      gen_grads.push_back(std::move(g));
    }
    adam_step(gen_params, gen_grads, gen_state, gen_adam);

    // Discriminator step on a fresh real batch and the detached fakes.
    {
      Tape tape;
      std::vector<Value> dp;
      for (const Tensor& t : disc_params) dp.push_back(tape.input(t));
      std::vector<const Tensor*> real_ptrs;
      for (int b = 0; b < cfg.batch_size; ++b)
        real_ptrs.push_back(&real_pool[static_cast<size_t>(pick_real(rng))]);
      Tensor real_rows = flatten_rows(real_ptrs);
      std::vector<const Tensor*> fake_ptrs;
      for (const Tensor& t : fake_rgbs) fake_ptrs.push_back(&t);
      Tensor fake_rows = flatten_rows(fake_ptrs);

      Value real_in = tape.input(real_rows);  // input so the R1 penalty sees it
      Value fake_in = tape.constant(fake_rows);
      Value real_logits = disc.forward(tape, dp, real_in);
      Value fake_logits = disc.forward(tape, dp, fake_in);
      Value d_loss = adversarial_discriminator_loss(real_logits, fake_logits);
      Value penalty = r1_penalty_value(tape, disc, dp, real_in);
      Value d_total = d_loss + scale(penalty, 0.5 * cfg.weights.r1_weight);
      tape.backward(d_total);

      std::vector<Tensor> d_grads;
      for (size_t i = 0; i < dp.size(); ++i)
        d_grads.push_back(tape.has_grad(dp[i]) ? tape.grad(dp[i])
                                               : Tensor::zeros(disc_params[i].shape()));
      adam_step(disc_params, d_grads, disc_state, disc_adam);
    }

    double inv_b = 1.0 / cfg.batch_size;
    Loss3dTerms mean{terms_mean.photometric * inv_b, terms_mean.depth_consistency * inv_b,
                     terms_mean.masked_fraction * inv_b, any_empty};
    LossReport report = generator_objective(adv_mean * inv_b, mean, floor_mean * inv_b, cfg.weights);
    csv << report.csv_row(it) << '\n';
    result.reports.push_back(report);
  }

  result.gen_params = std::move(gen_params);
  result.disc_params = std::move(disc_params);
  result.csv_log = csv.str();
  return result;
}

RecoverDepthResult recover_depth(const Tensor& rgb1, const RgbdImage& view2,
                                 const CameraIntrinsics& k, const CameraPose& pose1,
                                 const CameraPose& pose2, const RecoverDepthConfig& cfg) {
  view2.validate();
  cfg.weights.validate();
  if (rgb1.shape() != view2.rgb.shape())
    throw std::invalid_argument("recover_depth: view shapes differ");
  const int h = view2.height, w = view2.width;

  RigidTransform e1 = pose_to_extrinsics(pose1);
  RigidTransform e2 = pose_to_extrinsics(pose2);

  RecoverDepthResult out;
  if (cfg.init_map.size() > 0) {
    if (cfg.init_map.shape() != view2.depth.shape())
      throw std::invalid_argument("recover_depth: init map shape mismatch");
    out.depth = cfg.init_map;
  } else {
    out.depth = Tensor::full({h, w}, cfg.init_depth);
  }

  std::vector<Tensor> params = {out.depth};
  AdamState state = AdamState::init(params);
  AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};

  int rising = 0;
  double prev_loss = 0;
  for (int it = 0; it < cfg.iterations; ++it) {
    Tape tape;
    Value depth1 = tape.input(params[0]);
    Value r1 = tape.constant(rgb1);
    Value r2 = tape.constant(view2.rgb);
    Value d2 = tape.constant(view2.depth);
    Loss3dValues l3d = loss_3d_value(tape, r1, depth1, r2, d2, k, e1, e2, cfg.weights);
    Value total = scale(l3d.photometric + l3d.depth_consistency, cfg.weights.lambda_3d) +
                  scale(loss_depth_floor_value(depth1, cfg.weights.d_min), cfg.weights.lambda_depth);
    tape.backward(total);

    double loss = tape.val(total)[0];
    out.loss_history.push_back(loss);
    if (it > 0 && loss > prev_loss) {
      if (++rising >= 100) out.diverged = true;
    } else {
      rising = 0;
    }
    prev_loss = loss;

    std::vector<Tensor> grads = {tape.has_grad(depth1) ? tape.grad(depth1)
                                                       : Tensor::zeros(params[0].shape())};
    adam_step(params, grads, state, adam);
  }
  out.depth = params[0];
  return out;
}

double foreground_centroid_x(const Tensor& rgb, const Eigen::Vector3d& background_color) {
  if (rgb.rank() != 3 || rgb.dim(2) != 3)
    throw std::invalid_argument("foreground_centroid_x: need H x W x 3");
  const int h = rgb.dim(0), w = rgb.dim(1);
  double num = 0, den = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double wgt = (std::fabs(rgb.at(y, x, 0) - background_color.x()) +
                    std::fabs(rgb.at(y, x, 1) - background_color.y()) +
                    std::fabs(rgb.at(y, x, 2) - background_color.z())) /
                   3.0;
      num += wgt * x;
      den += wgt;
    }
  return den > 0 ? num / den : (w - 1) / 2.0;
}

}  // namespace rgbdc
