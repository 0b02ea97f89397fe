#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "rgbdc/camera.hpp"
#include "rgbdc/image.hpp"

namespace rgbdc {

// Procedural albedo. Checker cells have side 1/scale in world units; gradient
// blends between the two colors along one axis over [-scale, scale].
struct Texture {
  enum class Kind { Solid, Checker, Gradient };
  Kind kind = Kind::Solid;
  Eigen::Vector3d color_a{0.5, 0.5, 0.5};
  Eigen::Vector3d color_b{0.5, 0.5, 0.5};
  double scale = 1.0;
  int axis = 0;  // gradient axis

  Eigen::Vector3d sample(const Eigen::Vector3d& p) const;
};

struct Primitive {
  enum class Kind { Sphere, Box, Plane };
  Kind kind = Kind::Sphere;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // sphere/box center, plane point
  double radius = 0.3;
  Eigen::Vector3d half_extents{0.2, 0.2, 0.2};
  Eigen::Vector3d normal{0, 0, -1};  // plane only
  double extent = 0.5;               // plane half-side
  Texture texture;

  void validate() const;
};

struct Scene {
  std::vector<Primitive> primitives;
  Eigen::Vector3d background_color{1, 1, 1};
  double background_depth = 2.0;

  void validate() const;
};

struct RayHit {
  double t = 0;  // equals camera-space depth for the renderer's ray convention
  Eigen::Vector3d point;
  const Primitive* primitive = nullptr;
};

// Nearest intersection with t > t_min along origin + t * dir.
std::optional<RayHit> trace_nearest(const Scene& scene, const Eigen::Vector3d& origin,
                                    const Eigen::Vector3d& dir, double t_min = 1e-9);

// Analytic RGBD render: nearest-hit albedo and camera-space depth per pixel;
// background pixels get the configured far depth and color. supersample
// averages an N x N subpixel grid.
RgbdImage render_rgbd(const Scene& scene, const CameraIntrinsics& k, const CameraPose& pose,
                      int width, int height, int supersample = 1);

// For each pixel of view 1 (hit point, or the synthetic background point at
// far depth), true iff that 3D point is the nearest surface along the view-2
// ray through it, within tolerance.
std::vector<uint8_t> occlusion_ground_truth(const Scene& scene, const CameraIntrinsics& k,
                                            const CameraPose& pose1, const CameraPose& pose2,
                                            int width, int height, double tol = 1e-6);

}  // namespace rgbdc
