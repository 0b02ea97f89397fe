#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <random>
#include <utility>

namespace rgbdc {

struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;

  Eigen::Matrix3d matrix() const;
  Eigen::Matrix3d inverse() const;
  void validate(int image_size) const;  // fx,fy > 0; principal point inside [0, size]
};

// Origin-centered orbit pose: the camera sits at
// distance * (cos e * sin a, sin e, -cos e * cos a) and looks at the world
// origin with +y up; camera +z is forward, pixel x right, pixel y down.
struct CameraPose {
  double azimuth = 0;    // radians, left-right
  double elevation = 0;  // radians, up-down
  double distance = 1;   // world units

  CameraPose canonical() const;  // azimuth wrapped to (-pi, pi]
  void validate() const;         // distance > 0, |elevation| < pi/2
};

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;
  Eigen::Vector3d camera_center() const { return -rotation.transpose() * translation; }
  void validate(double tol = 1e-9) const;  // orthonormal, det +1
};

// (cos a, sin a, cos e, sin e): the conditioning vector fed to the generator.
struct CyclicEncoding {
  std::array<double, 4> v{1, 0, 1, 0};
};

struct PoseDistribution {
  double azimuth_range = 0;    // full span, radians
  double elevation_range = 0;  // full span, radians
  double max_delta = 0;        // per-axis cap on |c2 - c1|, radians
  double distance = 1.0;

  void validate() const;
};

CameraIntrinsics intrinsics_from_image_size(int s);

RigidTransform pose_to_extrinsics(const CameraPose& pose);

// T with x_cam2 = R x_cam1 + t, i.e. E2 composed with E1^-1.
RigidTransform relative_transform(const RigidTransform& e1, const RigidTransform& e2);

CyclicEncoding cyclic_encode(const CameraPose& pose);

// c1 uniform over the configured box, c2 uniform over the intersection of the
// box with the max_delta box centered at c1.
std::pair<CameraPose, CameraPose> sample_pose_pair(const PoseDistribution& dist,
                                                   std::mt19937_64& rng);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

}  // namespace rgbdc
