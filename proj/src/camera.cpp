#include "rgbdc/camera.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rgbdc {

namespace {
constexpr double kPi = std::numbers::pi;
}

double deg_to_rad(double deg) { return deg * kPi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return k;
}

Eigen::Matrix3d CameraIntrinsics::inverse() const {
  Eigen::Matrix3d k;
  k << 1.0 / fx, 0, -cx / fx, 0, 1.0 / fy, -cy / fy, 0, 0, 1;
  return k;
}

void CameraIntrinsics::validate(int image_size) const {
  if (fx <= 0 || fy <= 0) throw std::invalid_argument("intrinsics: focal lengths must be positive");
  if (cx < 0 || cy < 0 || cx > image_size || cy > image_size)
    throw std::invalid_argument("intrinsics: principal point outside image");
}

CameraIntrinsics intrinsics_from_image_size(int s) {
  if (s < 2) throw std::invalid_argument("image size must be >= 2, got " + std::to_string(s));
  double sd = static_cast<double>(s);
  return CameraIntrinsics{2.0 * sd, 2.0 * sd, sd / 2.0, sd / 2.0};
}

CameraPose CameraPose::canonical() const {
  CameraPose p = *this;
  p.azimuth = std::remainder(p.azimuth, 2.0 * kPi);
  if (p.azimuth <= -kPi) p.azimuth += 2.0 * kPi;
  return p;
}

void CameraPose::validate() const {
  if (!(distance > 0)) throw std::invalid_argument("pose: distance must be positive");
  if (!(std::fabs(elevation) < kPi / 2.0))
    throw std::invalid_argument("pose: |elevation| must be < pi/2");
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -inv.rotation * translation;
  return inv;
}

void RigidTransform::validate(double tol) const {
  Eigen::Matrix3d delta = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  if (delta.cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("rigid transform: rotation not orthonormal");
  if (std::fabs(rotation.determinant() - 1.0) > tol)
    throw std::invalid_argument("rigid transform: det(R) != +1");
}

RigidTransform pose_to_extrinsics(const CameraPose& pose) {
  pose.validate();
  const double ca = std::cos(pose.azimuth), sa = std::sin(pose.azimuth);
  const double ce = std::cos(pose.elevation), se = std::sin(pose.elevation);
  Eigen::Vector3d center(pose.distance * ce * sa, pose.distance * se, -pose.distance * ce * ca);
  Eigen::Vector3d forward = -center.normalized();  // toward the origin
  Eigen::Vector3d up(0, 1, 0);
  Eigen::Vector3d right = up.cross(forward);
  double n = right.norm();
  if (n < 1e-12) throw std::invalid_argument("pose: gimbal degeneracy at |elevation| = pi/2");
  right /= n;
  Eigen::Vector3d down = forward.cross(right);

  RigidTransform e;
  e.rotation.row(0) = right;
  e.rotation.row(1) = down;
  e.rotation.row(2) = forward;
  e.translation = -e.rotation * center;
  return e;
}

RigidTransform relative_transform(const RigidTransform& e1, const RigidTransform& e2) {
  RigidTransform t;
  t.rotation = e2.rotation * e1.rotation.transpose();
  t.translation = e2.translation - t.rotation * e1.translation;
  return t;
}

CyclicEncoding cyclic_encode(const CameraPose& pose) {
  CyclicEncoding enc;
  enc.v = {std::cos(pose.azimuth), std::sin(pose.azimuth), std::cos(pose.elevation),
           std::sin(pose.elevation)};
  return enc;
}

void PoseDistribution::validate() const {
  if (azimuth_range < 0 || elevation_range < 0)
    throw std::invalid_argument("pose distribution: ranges must be non-negative");
  if (max_delta < 0) throw std::invalid_argument("pose distribution: max_delta must be >= 0");
  if (max_delta > azimuth_range && azimuth_range > 0)
    throw std::invalid_argument("pose distribution: max_delta exceeds azimuth range");
  if (!(distance > 0)) throw std::invalid_argument("pose distribution: distance must be positive");
}

std::pair<CameraPose, CameraPose> sample_pose_pair(const PoseDistribution& dist,
                                                   std::mt19937_64& rng) {
  dist.validate();
  auto uniform = [&rng](double lo, double hi) {
    if (hi <= lo) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  const double ha = dist.azimuth_range / 2.0;
  const double he = dist.elevation_range / 2.0;
  CameraPose c1;
  c1.azimuth = uniform(-ha, ha);
  c1.elevation = uniform(-he, he);
  c1.distance = dist.distance;

  CameraPose c2;
  c2.azimuth = uniform(std::max(-ha, c1.azimuth - dist.max_delta),
                       std::min(ha, c1.azimuth + dist.max_delta));
  c2.elevation = uniform(std::max(-he, c1.elevation - dist.max_delta),
                         std::min(he, c1.elevation + dist.max_delta));
  c2.distance = dist.distance;
  return {c1, c2};
}

}  // namespace rgbdc
