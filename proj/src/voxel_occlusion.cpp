#include "rgbdc/voxel_occlusion.hpp"

#include <cmath>
#include <stdexcept>

namespace rgbdc {

void OpacityGrid::validate() const {
  if (values.rank() != 3) throw std::invalid_argument("opacity grid: values must be D x H x W");
  for (int64_t i = 0; i < values.size(); ++i)
    if (values[i] < 0 || values[i] > 1)
      throw std::invalid_argument("opacity grid: values must lie in [0,1]");
  if (static_cast<int>(slice_depths.size()) != values.dim(0))
    throw std::invalid_argument("opacity grid: slice depth count mismatch");
  for (size_t i = 1; i < slice_depths.size(); ++i)
    if (!(slice_depths[i] > slice_depths[i - 1]))
      throw std::invalid_argument("opacity grid: slice depths must be strictly increasing");
}

namespace {

void check_dhw(const Tensor& t, const char* what) {
  if (t.rank() != 3) throw std::invalid_argument(std::string(what) + ": need D x H x W, got " +
                                                 t.shape_str());
}

void softmax_kernel(const Tensor& scores, Tensor& out) {
  const int d = scores.dim(0), h = scores.dim(1), w = scores.dim(2);
  const int64_t ray_count = static_cast<int64_t>(h) * w;
  for (int64_t r = 0; r < ray_count; ++r) {
    double mx = -1e300;
    for (int s = 0; s < d; ++s) mx = std::max(mx, scores[s * ray_count + r]);
    double z = 0;
    for (int s = 0; s < d; ++s) z += std::exp(scores[s * ray_count + r] - mx);
    for (int s = 0; s < d; ++s) out[s * ray_count + r] = std::exp(scores[s * ray_count + r] - mx) / z;
  }
}

void accumulative_kernel(const Tensor& opacities, Tensor& out) {
  const int d = opacities.dim(0), h = opacities.dim(1), w = opacities.dim(2);
  const int64_t ray_count = static_cast<int64_t>(h) * w;
  for (int64_t r = 0; r < ray_count; ++r) {
    double prefix = 0;  // sum strictly before the current voxel
    for (int s = 0; s < d; ++s) {
      double o = opacities[s * ray_count + r];
      if (prefix < 1.0) {
        out[s * ray_count + r] = o;
        prefix += o;
      } else {
        out[s * ray_count + r] = 0.0;
      }
    }
  }
}

}  // namespace

RayWeights softmax_projection_weights(const Tensor& scores) {
  check_dhw(scores, "softmax_projection_weights");
  if (!scores.all_finite())
    throw std::invalid_argument("softmax_projection_weights: non-finite scores");
  RayWeights w{Tensor::zeros(scores.shape())};
  softmax_kernel(scores, w.values);
  return w;
}

RayWeights accumulative_projection_weights(const Tensor& opacities) {
  check_dhw(opacities, "accumulative_projection_weights");
  for (int64_t i = 0; i < opacities.size(); ++i)
    if (opacities[i] < 0 || opacities[i] > 1)
      throw std::invalid_argument("accumulative_projection_weights: opacities must lie in [0,1]");
  RayWeights w{Tensor::zeros(opacities.shape())};
  accumulative_kernel(opacities, w.values);
  return w;
}

Tensor project_grid(const Tensor& features, const RayWeights& weights) {
  if (features.rank() != 4) throw std::invalid_argument("project_grid: features must be D x H x W x C");
  const Tensor& wv = weights.values;
  check_dhw(wv, "project_grid weights");
  const int d = features.dim(0), h = features.dim(1), w = features.dim(2), c = features.dim(3);
  if (wv.dim(0) != d || wv.dim(1) != h || wv.dim(2) != w)
    throw std::invalid_argument("project_grid: shape mismatch " + features.shape_str() + " vs " +
                                wv.shape_str());
  Tensor out({h, w, c});
  for (int s = 0; s < d; ++s)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double wt = wv.at(s, y, x);
        if (wt == 0.0) continue;
        for (int ch = 0; ch < c; ++ch) out.at(y, x, ch) += wt * features.at(s, y, x, ch);
      }
  return out;
}

ExpectedDepthResult expected_depth(const RayWeights& weights,
                                   const std::vector<double>& slice_depths, double far_depth) {
  const Tensor& wv = weights.values;
  check_dhw(wv, "expected_depth weights");
  const int d = wv.dim(0), h = wv.dim(1), w = wv.dim(2);
  if (static_cast<int>(slice_depths.size()) != d)
    throw std::invalid_argument("expected_depth: slice depth count mismatch");
  ExpectedDepthResult out;
  out.depth = Tensor::zeros({h, w});
  out.background.assign(static_cast<size_t>(h) * w, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double num = 0, den = 0;
      for (int s = 0; s < d; ++s) {
        double wt = wv.at(s, y, x);
        num += wt * slice_depths[static_cast<size_t>(s)];
        den += wt;
      }
      if (den > 0) {
        out.depth.at(y, x) = num / den;
      } else {
        out.depth.at(y, x) = far_depth;
        out.background[static_cast<size_t>(y) * w + x] = 1;
      }
    }
  return out;
}

// ---- differentiable variants ----

Value softmax_projection_weights(Value scores) {
  Tape& tape = *scores.tape;
  check_dhw(tape.val(scores), "softmax_projection_weights");
  Tape::ForwardFn fwd = [](const Tape& tp, const std::vector<int>& ps) {
    Tensor out(tp.node_val(ps[0]).shape());
    softmax_kernel(tp.node_val(ps[0]), out);
    return out;
  };
  Tape::BackwardFn bwd = [](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& y = tp.node_val(id);
    const Tensor& g = tp.grad(Value{&tp, id});
    Tensor& slot = tp.grad_slot(ps[0]);
    const int d = y.dim(0);
    const int64_t ray_count = static_cast<int64_t>(y.dim(1)) * y.dim(2);
    for (int64_t r = 0; r < ray_count; ++r) {
      double dot = 0;
      for (int s = 0; s < d; ++s) dot += g[s * ray_count + r] * y[s * ray_count + r];
      for (int s = 0; s < d; ++s)
        slot[s * ray_count + r] += y[s * ray_count + r] * (g[s * ray_count + r] - dot);
    }
  };
  return tape.make_node({scores}, "softmax_projection_weights", std::move(fwd), std::move(bwd));
}

Value accumulative_projection_weights(Value opacities) {
  Tape& tape = *opacities.tape;
  check_dhw(tape.val(opacities), "accumulative_projection_weights");
  Tape::ForwardFn fwd = [](const Tape& tp, const std::vector<int>& ps) {
    Tensor out(tp.node_val(ps[0]).shape());
    accumulative_kernel(tp.node_val(ps[0]), out);
    return out;
  };
  // Straight-through on kept voxels: the kept set is recomputed from the
  // forward values, dropped voxels get zero gradient.
  Tape::BackwardFn bwd = [](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& x = tp.node_val(ps[0]);
    const Tensor& g = tp.grad(Value{&tp, id});
    Tensor& slot = tp.grad_slot(ps[0]);
    const int d = x.dim(0);
    const int64_t ray_count = static_cast<int64_t>(x.dim(1)) * x.dim(2);
    for (int64_t r = 0; r < ray_count; ++r) {
      double prefix = 0;
      for (int s = 0; s < d; ++s) {
        double o = x[s * ray_count + r];
        if (prefix < 1.0) {
          slot[s * ray_count + r] += g[s * ray_count + r];
          prefix += o;
        }
      }
    }
  };
  return tape.make_node({opacities}, "accumulative_projection_weights", std::move(fwd),
                        std::move(bwd));
}

Value project_grid(Value features, Value weights) {
  Tape& tape = *features.tape;
  const Tensor& fv = tape.val(features);
  const Tensor& wv = tape.val(weights);
  if (fv.rank() != 4) throw std::invalid_argument("project_grid: features must be D x H x W x C");
  if (wv.dim(0) != fv.dim(0) || wv.dim(1) != fv.dim(1) || wv.dim(2) != fv.dim(2))
    throw std::invalid_argument("project_grid: shape mismatch " + fv.shape_str() + " vs " +
                                wv.shape_str());
  const int d = fv.dim(0), h = fv.dim(1), w = fv.dim(2), c = fv.dim(3);
  Tape::ForwardFn fwd = [d, h, w, c](const Tape& tp, const std::vector<int>& ps) {
    const Tensor& f = tp.node_val(ps[0]);
    const Tensor& wt = tp.node_val(ps[1]);
    Tensor out({h, w, c});
    for (int s = 0; s < d; ++s)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          for (int ch = 0; ch < c; ++ch) out.at(y, x, ch) += wt.at(s, y, x) * f.at(s, y, x, ch);
    return out;
  };
  Tape::BackwardFn bwd = [d, h, w, c](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& f = tp.node_val(ps[0]);
    const Tensor& wt = tp.node_val(ps[1]);
    const Tensor& g = tp.grad(Value{&tp, id});
    Tensor& fslot = tp.grad_slot(ps[0]);
    Tensor& wslot = tp.grad_slot(ps[1]);
    for (int s = 0; s < d; ++s)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double wacc = 0;
          for (int ch = 0; ch < c; ++ch) {
            double go = g.at(y, x, ch);
            fslot[((static_cast<int64_t>(s) * h + y) * w + x) * c + ch] += go * wt.at(s, y, x);
            wacc += go * f.at(s, y, x, ch);
          }
          wslot[(static_cast<int64_t>(s) * h + y) * w + x] += wacc;
        }
  };
  return tape.make_node({features, weights}, "project_grid", std::move(fwd), std::move(bwd));
}

Value expected_depth_value(Value weights, const std::vector<double>& slice_depths) {
  Tape& tape = *weights.tape;
  const Tensor& wv = tape.val(weights);
  check_dhw(wv, "expected_depth_value");
  const int d = wv.dim(0), h = wv.dim(1), w = wv.dim(2);
  if (static_cast<int>(slice_depths.size()) != d)
    throw std::invalid_argument("expected_depth_value: slice depth count mismatch");
  // Sum_s w_s * d_s / Sum_s w_s via a depth-slice feature projection.
  Tensor depth_feature({d, h, w, 1});
  Tensor ones_feature({d, h, w, 1});
  for (int s = 0; s < d; ++s)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        depth_feature.at(s, y, x, 0) = slice_depths[static_cast<size_t>(s)];
        ones_feature.at(s, y, x, 0) = 1.0;
      }
  Value num = project_grid(tape.constant(std::move(depth_feature)), weights);
  Value den = project_grid(tape.constant(std::move(ones_feature)), weights);
  const Tensor& den_v = tape.val(den);
  for (int64_t i = 0; i < den_v.size(); ++i)
    if (!(den_v[i] > 0))
      throw std::invalid_argument("expected_depth_value: ray with zero weight sum");
  return reshape(num / den, {h, w});
}

}  // namespace rgbdc
