#include "rgbdc/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "rgbdc/parallel.hpp"

namespace rgbdc {

Eigen::Vector3d Texture::sample(const Eigen::Vector3d& p) const {
  switch (kind) {
    case Kind::Solid:
      return color_a;
    case Kind::Checker: {
      // Cells centered on the origin so axis-aligned faces at lattice planes
      // stay on one side.
      int parity = (static_cast<int>(std::floor(p.x() * scale + 0.5)) +
                    static_cast<int>(std::floor(p.y() * scale + 0.5)) +
                    static_cast<int>(std::floor(p.z() * scale + 0.5))) &
                   1;
      return parity ? color_b : color_a;
    }
    case Kind::Gradient: {
      double t = 0.5 + p[axis] / (2.0 * scale);
      t = std::clamp(t, 0.0, 1.0);
      return (1.0 - t) * color_a + t * color_b;
    }
  }
  return color_a;
}

void Primitive::validate() const {
  switch (kind) {
    case Kind::Sphere:
      if (!(radius > 0)) throw std::invalid_argument("sphere: radius must be positive");
      break;
    case Kind::Box:
      if (!(half_extents.minCoeff() > 0))
        throw std::invalid_argument("box: half extents must be positive");
      break;
    case Kind::Plane:
      if (normal.norm() < 1e-12) throw std::invalid_argument("plane: zero normal");
      if (!(extent > 0)) throw std::invalid_argument("plane: extent must be positive");
      break;
  }
  if (!(texture.scale > 0)) throw std::invalid_argument("texture: scale must be positive");
}

void Scene::validate() const {
  if (!(background_depth > 0)) throw std::invalid_argument("scene: background depth must be positive");
  for (const Primitive& p : primitives) p.validate();
}

namespace {

std::optional<double> intersect_sphere(const Primitive& s, const Eigen::Vector3d& o,
                                       const Eigen::Vector3d& d, double t_min) {
  Eigen::Vector3d oc = o - s.center;
  double a = d.squaredNorm();
  double b = 2.0 * d.dot(oc);
  double c = oc.squaredNorm() - s.radius * s.radius;
  double disc = b * b - 4.0 * a * c;
  if (disc < 0) return std::nullopt;
  double sq = std::sqrt(disc);
  double t0 = (-b - sq) / (2.0 * a);
  double t1 = (-b + sq) / (2.0 * a);
  if (t0 > t_min) return t0;
  if (t1 > t_min) return t1;
  return std::nullopt;
}

std::optional<double> intersect_box(const Primitive& bx, const Eigen::Vector3d& o,
                                    const Eigen::Vector3d& d, double t_min) {
  double t_lo = -1e30, t_hi = 1e30;
  for (int i = 0; i < 3; ++i) {
    double lo = bx.center[i] - bx.half_extents[i];
    double hi = bx.center[i] + bx.half_extents[i];
    if (std::fabs(d[i]) < 1e-15) {
      if (o[i] < lo || o[i] > hi) return std::nullopt;
      continue;
    }
    double ta = (lo - o[i]) / d[i];
    double tb = (hi - o[i]) / d[i];
    if (ta > tb) std::swap(ta, tb);
    t_lo = std::max(t_lo, ta);
    t_hi = std::min(t_hi, tb);
    if (t_lo > t_hi) return std::nullopt;
  }
  if (t_lo > t_min) return t_lo;
  if (t_hi > t_min) return t_hi;
  return std::nullopt;
}

std::optional<double> intersect_plane(const Primitive& pl, const Eigen::Vector3d& o,
                                      const Eigen::Vector3d& d, double t_min) {
  Eigen::Vector3d n = pl.normal.normalized();
  double denom = d.dot(n);
  if (std::fabs(denom) < 1e-15) return std::nullopt;
  double t = (pl.center - o).dot(n) / denom;
  if (t <= t_min) return std::nullopt;
  // Finite square patch: bound the hit in an in-plane orthonormal frame.
  Eigen::Vector3d ref = std::fabs(n.z()) < 0.9 ? Eigen::Vector3d(0, 0, 1) : Eigen::Vector3d(1, 0, 0);
  Eigen::Vector3d u = n.cross(ref).normalized();
  Eigen::Vector3d v = n.cross(u);
  Eigen::Vector3d rel = o + t * d - pl.center;
  if (std::fabs(rel.dot(u)) > pl.extent || std::fabs(rel.dot(v)) > pl.extent) return std::nullopt;
  return t;
}

}  // namespace

std::optional<RayHit> trace_nearest(const Scene& scene, const Eigen::Vector3d& origin,
                                    const Eigen::Vector3d& dir, double t_min) {
  std::optional<RayHit> best;
  for (const Primitive& prim : scene.primitives) {
    std::optional<double> t;
    switch (prim.kind) {
      case Primitive::Kind::Sphere:
        t = intersect_sphere(prim, origin, dir, t_min);
        break;
      case Primitive::Kind::Box:
        t = intersect_box(prim, origin, dir, t_min);
        break;
      case Primitive::Kind::Plane:
        t = intersect_plane(prim, origin, dir, t_min);
        break;
    }
    if (t && (!best || *t < best->t)) {
      RayHit hit;
      hit.t = *t;
      hit.point = origin + *t * dir;
      hit.primitive = &prim;
      best = hit;
    }
  }
  return best;
}

RgbdImage render_rgbd(const Scene& scene, const CameraIntrinsics& k, const CameraPose& pose,
                      int width, int height, int supersample) {
  if (supersample < 1) throw std::invalid_argument("render_rgbd: supersample must be >= 1");
  scene.validate();
  RigidTransform e = pose_to_extrinsics(pose);
  const Eigen::Vector3d center = e.camera_center();
  const Eigen::Matrix3d dir_mat = e.rotation.transpose() * k.inverse();

  RgbdImage img = RgbdImage::create(width, height);
  const double ss = supersample;
  parallel_for(0, height, [&](int y) {
    for (int x = 0; x < width; ++x) {
      Eigen::Vector3d color = Eigen::Vector3d::Zero();
      double depth = 0;
      for (int sy = 0; sy < supersample; ++sy)
        for (int sx = 0; sx < supersample; ++sx) {
          double px = x + (sx + 0.5) / ss - 0.5;
          double py = y + (sy + 0.5) / ss - 0.5;
          // Unnormalized direction with unit camera-space z: the ray parameter
          // equals the camera depth.
          Eigen::Vector3d dir = dir_mat * Eigen::Vector3d(px, py, 1.0);
          auto hit = trace_nearest(scene, center, dir);
          if (hit) {
            color += hit->primitive->texture.sample(hit->point);
            depth += hit->t;
          } else {
            color += scene.background_color;
            depth += scene.background_depth;
          }
        }
      double inv = 1.0 / (ss * ss);
      img.rgb.at(y, x, 0) = std::clamp(color.x() * inv, 0.0, 1.0);
      img.rgb.at(y, x, 1) = std::clamp(color.y() * inv, 0.0, 1.0);
      img.rgb.at(y, x, 2) = std::clamp(color.z() * inv, 0.0, 1.0);
      img.depth.at(y, x) = depth * inv;
    }
  });
  return img;
}

std::vector<uint8_t> occlusion_ground_truth(const Scene& scene, const CameraIntrinsics& k,
                                            const CameraPose& pose1, const CameraPose& pose2,
                                            int width, int height, double tol) {
  scene.validate();
  RigidTransform e1 = pose_to_extrinsics(pose1);
  RigidTransform e2 = pose_to_extrinsics(pose2);
  const Eigen::Vector3d c1 = e1.camera_center();
  const Eigen::Vector3d c2 = e2.camera_center();
  const Eigen::Matrix3d dir_mat = e1.rotation.transpose() * k.inverse();

  std::vector<uint8_t> visible(static_cast<size_t>(width) * height, 0);
  parallel_for(0, height, [&](int y) {
    for (int x = 0; x < width; ++x) {
      Eigen::Vector3d dir = dir_mat * Eigen::Vector3d(x, y, 1.0);
      auto hit = trace_nearest(scene, c1, dir);
      Eigen::Vector3d p = hit ? hit->point : Eigen::Vector3d(c1 + scene.background_depth * dir);
      // Depth of p in view 2; points behind the second camera are not visible.
      double d2 = (e2.rotation * p + e2.translation).z();
      if (d2 <= 0) continue;
      Eigen::Vector3d dir2 = (p - c2) / d2;  // unit camera-2 z per step
      auto block = trace_nearest(scene, c2, dir2);
      bool clear = !block || block->t >= d2 - tol;
      visible[static_cast<size_t>(y) * width + x] = clear ? 1 : 0;
    }
  });
  return visible;
}

}  // namespace rgbdc
