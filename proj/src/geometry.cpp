#include "rgbdc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <stdexcept>

namespace rgbdc {

namespace {
constexpr double kMinProjDepth = 1e-12;
}

RgbdImage RgbdImage::create(int width, int height) {
  RgbdImage img;
  img.width = width;
  img.height = height;
  img.rgb = Tensor::zeros({height, width, 3});
  img.depth = Tensor::zeros({height, width});
  return img;
}

void RgbdImage::validate() const {
  if (width < 2 || height < 2) throw std::invalid_argument("rgbd image: size must be >= 2");
  if (rgb.shape() != std::vector<int>{height, width, 3})
    throw std::invalid_argument("rgbd image: rgb shape " + rgb.shape_str());
  if (depth.shape() != std::vector<int>{height, width})
    throw std::invalid_argument("rgbd image: depth shape " + depth.shape_str());
  for (int64_t i = 0; i < rgb.size(); ++i)
    if (rgb[i] < -1e-9 || rgb[i] > 1.0 + 1e-9)
      throw std::invalid_argument("rgbd image: rgb out of [0,1]");
  if (!depth.all_finite()) throw std::invalid_argument("rgbd image: non-finite depth");
}

size_t OcclusionMask::count() const {
  size_t n = 0;
  for (uint8_t m : mask) n += m != 0;
  return n;
}

UnprojectResult unproject(const RgbdImage& img, const CameraIntrinsics& k,
                          const RigidTransform& e) {
  UnprojectResult out;
  const Eigen::Matrix3d kinv = k.inverse();
  const Eigen::Matrix3d rt = e.rotation.transpose();
  out.cloud.points.reserve(static_cast<size_t>(img.width) * img.height);
  out.cloud.colors.reserve(out.cloud.points.capacity());
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double d = img.depth.at(y, x);
      if (!(d > 0)) {
        ++out.skipped;
        continue;
      }
      Eigen::Vector3d cam = kinv * Eigen::Vector3d(x, y, 1.0) * d;
      out.cloud.points.push_back(rt * (cam - e.translation));
      out.cloud.colors.emplace_back(img.rgb.at(y, x, 0), img.rgb.at(y, x, 1), img.rgb.at(y, x, 2));
    }
  }
  return out;
}

ProjectedPoints project_points(const PointCloud& pc, const CameraIntrinsics& k,
                               const RigidTransform& e) {
  int n = static_cast<int>(pc.points.size());
  ProjectedPoints out;
  out.coords = Tensor::zeros({n, 2});
  out.depths = Tensor::zeros({n});
  out.valid.assign(static_cast<size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d cam = e.apply(pc.points[static_cast<size_t>(i)]);
    out.depths[i] = cam.z();
    if (cam.z() > kMinProjDepth) {
      out.coords.at(i, 0) = k.fx * cam.x() / cam.z() + k.cx;
      out.coords.at(i, 1) = k.fy * cam.y() / cam.z() + k.cy;
      out.valid[static_cast<size_t>(i)] = 1;
    } else {
      out.coords.at(i, 0) = -1.0;
      out.coords.at(i, 1) = -1.0;
    }
  }
  return out;
}

namespace {

bool is_identity_transform(const RigidTransform& t, double tol = 1e-14) {
  return (t.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         t.translation.cwiseAbs().maxCoeff() <= tol;
}

// Per-pixel linear coefficients of the view-change map: h(d) = d * a + b with
// a = K R12 K^-1 (x, y, 1) and b = K t12. Output channels are (x', y', depth').
struct WarpCoefficients {
  Tensor a;  // H x W x 3
  Eigen::Vector3d b;
  bool identity = false;  // identity view change reproduces the lattice exactly
};

WarpCoefficients warp_coefficients(int width, int height, const CameraIntrinsics& k,
                                   const RigidTransform& t12) {
  WarpCoefficients c;
  c.a = Tensor({height, width, 3});
  if (is_identity_transform(t12)) {
    c.identity = true;
    c.b = Eigen::Vector3d::Zero();
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        c.a.at(y, x, 0) = x;
        c.a.at(y, x, 1) = y;
        c.a.at(y, x, 2) = 1.0;
      }
    return c;
  }
  const Eigen::Matrix3d a_mat = k.matrix() * t12.rotation * k.inverse();
  c.b = k.matrix() * t12.translation;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      Eigen::Vector3d ap = a_mat * Eigen::Vector3d(x, y, 1.0);
      c.a.at(y, x, 0) = ap.x();
      c.a.at(y, x, 1) = ap.y();
      c.a.at(y, x, 2) = ap.z();
    }
  return c;
}

void warp_kernel(const Tensor& depth, const WarpCoefficients& c, Tensor& out) {
  const int h = depth.dim(0), w = depth.dim(1);
  if (c.identity) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        out.at(y, x, 0) = x;
        out.at(y, x, 1) = y;
        out.at(y, x, 2) = depth.at(y, x);
      }
    return;
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double d = depth.at(y, x);
      double hx = d * c.a.at(y, x, 0) + c.b.x();
      double hy = d * c.a.at(y, x, 1) + c.b.y();
      double hz = d * c.a.at(y, x, 2) + c.b.z();
      out.at(y, x, 2) = hz;
      if (hz > kMinProjDepth) {
        out.at(y, x, 0) = hx / hz;
        out.at(y, x, 1) = hy / hz;
      } else {
        out.at(y, x, 0) = -1.0;
        out.at(y, x, 1) = -1.0;
      }
    }
}

}  // namespace

WarpField compute_warp_field(const Tensor& depth, const CameraIntrinsics& k,
                             const RigidTransform& t12) {
  if (depth.rank() != 2) throw std::invalid_argument("compute_warp_field: depth must be H x W");
  const int h = depth.dim(0), w = depth.dim(1);
  WarpCoefficients c = warp_coefficients(w, h, k, t12);
  Tensor packed({h, w, 3});
  warp_kernel(depth, c, packed);

  WarpField wf;
  wf.width = w;
  wf.height = h;
  wf.coords = Tensor::zeros({h, w, 2});
  wf.projected_depth = Tensor::zeros({h, w});
  wf.valid = warp_valid_flags(packed, w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      wf.coords.at(y, x, 0) = packed.at(y, x, 0);
      wf.coords.at(y, x, 1) = packed.at(y, x, 1);
      wf.projected_depth.at(y, x) = packed.at(y, x, 2);
    }
  return wf;
}

std::vector<uint8_t> warp_valid_flags(const Tensor& packed, int src_width, int src_height) {
  const int h = packed.dim(0), w = packed.dim(1);
  std::vector<uint8_t> valid(static_cast<size_t>(h) * w, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double px = packed.at(y, x, 0), py = packed.at(y, x, 1), pd = packed.at(y, x, 2);
      bool ok = pd > 0 && px >= 0 && px <= src_width - 1 && py >= 0 && py <= src_height - 1;
      valid[static_cast<size_t>(y) * w + x] = ok ? 1 : 0;
    }
  return valid;
}

namespace {

struct BilinearCorner {
  int x0, x1, y0, y1;
  double fx, fy;
  bool x_interior, y_interior;  // coordinate inside the open interval (not clamped)
};

BilinearCorner corner_setup(double x, double y, int w, int h) {
  BilinearCorner c;
  double xc = std::clamp(x, 0.0, static_cast<double>(w - 1));
  double yc = std::clamp(y, 0.0, static_cast<double>(h - 1));
  if (w == 1) {
    c.x0 = c.x1 = 0;
    c.fx = 0;
  } else {
    c.x0 = std::min(static_cast<int>(std::floor(xc)), w - 2);
    c.x1 = c.x0 + 1;
    c.fx = xc - c.x0;
  }
  if (h == 1) {
    c.y0 = c.y1 = 0;
    c.fy = 0;
  } else {
    c.y0 = std::min(static_cast<int>(std::floor(yc)), h - 2);
    c.y1 = c.y0 + 1;
    c.fy = yc - c.y0;
  }
  c.x_interior = x > 0.0 && x < w - 1;
  c.y_interior = y > 0.0 && y < h - 1;
  return c;
}

void bilinear_forward(const Tensor& grid, const Tensor& coords, Tensor& out, int channels) {
  const int gh = grid.dim(0), gw = grid.dim(1);
  const int oh = coords.dim(0), ow = coords.dim(1);
  const int64_t gstride = static_cast<int64_t>(gw) * channels;
  const double* g = grid.data();
  for (int i = 0; i < oh; ++i)
    for (int j = 0; j < ow; ++j) {
      BilinearCorner c = corner_setup(coords.at(i, j, 0), coords.at(i, j, 1), gw, gh);
      double w00 = (1 - c.fy) * (1 - c.fx), w01 = (1 - c.fy) * c.fx;
      double w10 = c.fy * (1 - c.fx), w11 = c.fy * c.fx;
      for (int ch = 0; ch < channels; ++ch) {
        double v = w00 * g[c.y0 * gstride + c.x0 * channels + ch] +
                   w01 * g[c.y0 * gstride + c.x1 * channels + ch] +
                   w10 * g[c.y1 * gstride + c.x0 * channels + ch] +
                   w11 * g[c.y1 * gstride + c.x1 * channels + ch];
        out[(static_cast<int64_t>(i) * ow + j) * channels + ch] = v;
      }
    }
}

}  // namespace

Tensor bilinear_sample(const Tensor& grid, const Tensor& coords) {
  if (coords.rank() != 3 || coords.dim(2) != 2)
    throw std::invalid_argument("bilinear_sample: coords must be H' x W' x 2, got " +
                                coords.shape_str());
  if (!coords.all_finite()) throw std::invalid_argument("bilinear_sample: non-finite coords");
  const bool flat = grid.rank() == 2;
  if (!flat && grid.rank() != 3)
    throw std::invalid_argument("bilinear_sample: grid must be H x W (x C), got " +
                                grid.shape_str());
  int channels = flat ? 1 : grid.dim(2);
  Tensor out(flat ? std::vector<int>{coords.dim(0), coords.dim(1)}
                  : std::vector<int>{coords.dim(0), coords.dim(1), channels});
  bilinear_forward(grid, coords, out, channels);
  return out;
}

WarpedImage warp_image(const RgbdImage& src, const WarpField& wf) {
  src.validate();
  WarpedImage out;
  out.rgb = bilinear_sample(src.rgb, wf.coords);
  out.depth = bilinear_sample(src.depth, wf.coords);
  out.valid = wf.valid;
  return out;
}

OcclusionMask occlusion_mask(const WarpField& wf, const Tensor& warped_depth, double margin) {
  if (margin < 0) throw std::invalid_argument("occlusion_mask: margin must be >= 0");
  if (warped_depth.shape() != wf.projected_depth.shape())
    throw std::invalid_argument("occlusion_mask: shape mismatch");
  OcclusionMask m;
  m.width = wf.width;
  m.height = wf.height;
  m.mask.assign(wf.valid.size(), 0);
  for (size_t i = 0; i < wf.valid.size(); ++i) {
    if (!wf.valid[i]) continue;
    double pd = wf.projected_depth[static_cast<int64_t>(i)];
    double wd = warped_depth[static_cast<int64_t>(i)];
    m.mask[i] = pd <= wd + margin ? 1 : 0;
  }
  return m;
}

Tensor normal_map(const Tensor& depth, const CameraIntrinsics& k) {
  if (depth.rank() != 2) throw std::invalid_argument("normal_map: depth must be H x W");
  const int h = depth.dim(0), w = depth.dim(1);
  const Eigen::Matrix3d kinv = k.inverse();
  auto cam_point = [&](int y, int x) {
    return Eigen::Vector3d(kinv * Eigen::Vector3d(x, y, 1.0) * depth.at(y, x));
  };
  Tensor out({h, w, 3});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
      int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
      Eigen::Vector3d dx = (cam_point(y, xp) - cam_point(y, xm)) / (xp - xm);
      Eigen::Vector3d dy = (cam_point(yp, x) - cam_point(ym, x)) / (yp - ym);
      Eigen::Vector3d n = -dx.cross(dy);
      double len = n.norm();
      if (len > 1e-15) n /= len;
      out.at(y, x, 0) = n.x();
      out.at(y, x, 1) = n.y();
      out.at(y, x, 2) = n.z();
    }
  return out;
}

void export_ply(const PointCloud& pc, const std::string& path) {
  if (pc.points.size() != pc.colors.size())
    throw std::invalid_argument("export_ply: point/color count mismatch");
  std::ofstream f(path);
  if (!f) throw std::runtime_error("export_ply: cannot open " + path);
  f << "ply\nformat ascii 1.0\nelement vertex " << pc.points.size()
    << "\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nproperty "
       "uchar green\nproperty uchar blue\nend_header\n";
  char line[160];
  for (size_t i = 0; i < pc.points.size(); ++i) {
    const Eigen::Vector3d& p = pc.points[i];
    const Eigen::Vector3d& c = pc.colors[i];
    auto q = [](double v) {
      return std::clamp(static_cast<int>(std::lround(v * 255.0)), 0, 255);
    };
    std::snprintf(line, sizeof(line), "%.9g %.9g %.9g %d %d %d\n", p.x(), p.y(), p.z(), q(c.x()),
                  q(c.y()), q(c.z()));
    f << line;
  }
  if (!f) throw std::runtime_error("export_ply: write failed for " + path);
}

// ---- differentiable bridges ----

Value warp_project(Value depth, const CameraIntrinsics& k, const RigidTransform& t12) {
  Tape& tape = *depth.tape;
  const Tensor& d = tape.val(depth);
  if (d.rank() != 2) throw std::invalid_argument("warp_project: depth must be H x W");
  const int h = d.dim(0), w = d.dim(1);
  auto coeff = std::make_shared<WarpCoefficients>(warp_coefficients(w, h, k, t12));

  Tape::ForwardFn fwd = [coeff, h, w](const Tape& tp, const std::vector<int>& ps) {
    Tensor out({h, w, 3});
    warp_kernel(tp.node_val(ps[0]), *coeff, out);
    return out;
  };
  Tape::BackwardFn bwd = [coeff, h, w](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& packed = tp.node_val(id);
    const Tensor& g = tp.grad(Value{&tp, id});
    Tensor& slot = tp.grad_slot(ps[0]);
    const Tensor& a = coeff->a;
    const bool identity = coeff->identity;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double hz = packed.at(y, x, 2);
        double acc = g.at(y, x, 2) * a.at(y, x, 2);
        if (!identity && hz > kMinProjDepth) {
          double px = packed.at(y, x, 0), py = packed.at(y, x, 1);
          acc += g.at(y, x, 0) * (a.at(y, x, 0) - px * a.at(y, x, 2)) / hz;
          acc += g.at(y, x, 1) * (a.at(y, x, 1) - py * a.at(y, x, 2)) / hz;
        }
        slot[static_cast<int64_t>(y) * w + x] += acc;
      }
  };
  return tape.make_node({depth}, "warp_project", std::move(fwd), std::move(bwd));
}

Value bilinear_sample(Value grid, Value coords) {
  Tape& tape = *grid.tape;
  if (coords.tape != grid.tape)
    throw std::invalid_argument("bilinear_sample: values on different tapes");
  const Tensor& gv = tape.val(grid);
  const Tensor& cv = tape.val(coords);
  if (cv.rank() != 3 || cv.dim(2) != 2)
    throw std::invalid_argument("bilinear_sample: coords must be H' x W' x 2");
  const bool flat = gv.rank() == 2;
  if (!flat && gv.rank() != 3)
    throw std::invalid_argument("bilinear_sample: grid must be H x W (x C)");
  const int channels = flat ? 1 : gv.dim(2);
  const int gh = gv.dim(0), gw = gv.dim(1);
  const int oh = cv.dim(0), ow = cv.dim(1);
  std::vector<int> out_shape =
      flat ? std::vector<int>{oh, ow} : std::vector<int>{oh, ow, channels};

  Tape::ForwardFn fwd = [out_shape, channels](const Tape& tp, const std::vector<int>& ps) {
    Tensor out(out_shape);
    bilinear_forward(tp.node_val(ps[0]), tp.node_val(ps[1]), out, channels);
    return out;
  };
  Tape::BackwardFn bwd = [channels, gh, gw, oh, ow](Tape& tp, int id) {
    const std::vector<int>& ps = tp.parents_of(id);
    const Tensor& gv2 = tp.node_val(ps[0]);
    const Tensor& cv2 = tp.node_val(ps[1]);
    const Tensor& g = tp.grad(Value{&tp, id});
    Tensor& gslot = tp.grad_slot(ps[0]);
    Tensor& cslot = tp.grad_slot(ps[1]);
    const int64_t gstride = static_cast<int64_t>(gw) * channels;
    const double* gd = gv2.data();
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j) {
        BilinearCorner c = corner_setup(cv2.at(i, j, 0), cv2.at(i, j, 1), gw, gh);
        double w00 = (1 - c.fy) * (1 - c.fx), w01 = (1 - c.fy) * c.fx;
        double w10 = c.fy * (1 - c.fx), w11 = c.fy * c.fx;
        double gx = 0, gy = 0;
        for (int ch = 0; ch < channels; ++ch) {
          double go = g[(static_cast<int64_t>(i) * ow + j) * channels + ch];
          if (go == 0.0) continue;
          int64_t i00 = c.y0 * gstride + c.x0 * channels + ch;
          int64_t i01 = c.y0 * gstride + c.x1 * channels + ch;
          int64_t i10 = c.y1 * gstride + c.x0 * channels + ch;
          int64_t i11 = c.y1 * gstride + c.x1 * channels + ch;
          gslot[i00] += go * w00;
          gslot[i01] += go * w01;
          gslot[i10] += go * w10;
          gslot[i11] += go * w11;
          gx += go * ((1 - c.fy) * (gd[i01] - gd[i00]) + c.fy * (gd[i11] - gd[i10]));
          gy += go * ((1 - c.fx) * (gd[i10] - gd[i00]) + c.fx * (gd[i11] - gd[i01]));
        }
        if (c.x_interior) cslot[(static_cast<int64_t>(i) * ow + j) * 2 + 0] += gx;
        if (c.y_interior) cslot[(static_cast<int64_t>(i) * ow + j) * 2 + 1] += gy;
      }
  };
  return tape.make_node({grid, coords}, "bilinear_sample", std::move(fwd), std::move(bwd));
}

}  // namespace rgbdc
