#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "rgbdc/camera.hpp"
#include "rgbdc/geometry.hpp"
#include "rgbdc/image.hpp"

namespace rgbdc {

// Spherical binning about a fixed world origin. Azimuth is measured in the
// x-z plane from the +z direction (atan2(x, z)), elevation from the x-z plane
// toward +y.
struct PolarCellConfig {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  double azimuth_min = 0, azimuth_max = 0;      // radians
  double elevation_min = 0, elevation_max = 0;  // radians
  int bins_azimuth = 128;
  int bins_elevation = 128;
  bool white_filter = false;  // drop near-white points before binning
  double white_threshold = 0.95;

  void validate() const;
  int cell_count() const { return bins_azimuth * bins_elevation; }

  static PolarCellConfig face_preset();
  static PolarCellConfig car_preset();
};

struct ViewSet {
  int64_t latent_id = 0;
  std::vector<std::pair<RgbdImage, CameraPose>> views;
};

struct ConsistencyScores {
  double v_depth = 0;
  double v_color = 0;
  double populated_cell_fraction = 0;  // cells seen by at least two views
};

struct QuantizedPoint {
  int cell = -1;  // -1 when outside the angular range
  double radius = 0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
};

std::vector<QuantizedPoint> polar_quantize(const PointCloud& pc, const PolarCellConfig& cfg);

struct CellSample {
  double radius = 0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
};

// Per cell, the minimum-radial point of one view; index = cell id. The bool
// marks populated cells.
struct ViewCells {
  std::vector<CellSample> samples;
  std::vector<uint8_t> populated;
};

ViewCells reduce_view_cells(const std::vector<QuantizedPoint>& points,
                            const PolarCellConfig& cfg);

// Cross-view variance of per-cell nearest-surface depth and color, averaged
// over cells populated by at least two views. Throws "insufficient overlap"
// when no such cell exists.
ConsistencyScores consistency_scores(const ViewSet& vs, const CameraIntrinsics& k,
                                     const PolarCellConfig& cfg);

}  // namespace rgbdc
