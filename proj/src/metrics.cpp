#include "rgbdc/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace rgbdc {

void PolarCellConfig::validate() const {
  if (!(azimuth_min < azimuth_max) || !(elevation_min < elevation_max))
    throw std::invalid_argument("polar config: min must be < max per axis");
  if (bins_azimuth < 1 || bins_elevation < 1)
    throw std::invalid_argument("polar config: bins must be >= 1");
}

PolarCellConfig PolarCellConfig::face_preset() {
  PolarCellConfig c;
  c.origin = Eigen::Vector3d(0, 0, -0.5);
  c.azimuth_min = deg_to_rad(-23);
  c.azimuth_max = deg_to_rad(23);
  c.elevation_min = deg_to_rad(-23);
  c.elevation_max = deg_to_rad(23);
  c.bins_azimuth = 128;
  c.bins_elevation = 128;
  c.white_filter = false;
  return c;
}

PolarCellConfig PolarCellConfig::car_preset() {
  PolarCellConfig c;
  c.origin = Eigen::Vector3d(0, 0, 0);
  c.azimuth_min = deg_to_rad(-180);
  c.azimuth_max = deg_to_rad(180);
  c.elevation_min = deg_to_rad(-90);
  c.elevation_max = deg_to_rad(90);
  c.bins_azimuth = 128;
  c.bins_elevation = 128;
  c.white_filter = true;
  return c;
}

std::vector<QuantizedPoint> polar_quantize(const PointCloud& pc, const PolarCellConfig& cfg) {
  cfg.validate();
  const double az_width = (cfg.azimuth_max - cfg.azimuth_min) / cfg.bins_azimuth;
  const double el_width = (cfg.elevation_max - cfg.elevation_min) / cfg.bins_elevation;
  std::vector<QuantizedPoint> out;
  out.reserve(pc.points.size());
  for (size_t i = 0; i < pc.points.size(); ++i) {
    QuantizedPoint q;
    Eigen::Vector3d dir = pc.points[i] - cfg.origin;
    q.radius = dir.norm();
    q.color = pc.colors[i];
    if (q.radius < 1e-12) {
      out.push_back(q);  // degenerate point at the origin: out of range
      continue;
    }
    double azimuth = std::atan2(dir.x(), dir.z());
    double elevation = std::asin(std::clamp(dir.y() / q.radius, -1.0, 1.0));
    int ia = static_cast<int>(std::floor((azimuth - cfg.azimuth_min) / az_width));
    int ie = static_cast<int>(std::floor((elevation - cfg.elevation_min) / el_width));
    if (azimuth >= cfg.azimuth_min && azimuth < cfg.azimuth_max && elevation >= cfg.elevation_min &&
        elevation < cfg.elevation_max && ia >= 0 && ia < cfg.bins_azimuth && ie >= 0 &&
        ie < cfg.bins_elevation) {
      q.cell = ie * cfg.bins_azimuth + ia;
    }
    out.push_back(q);
  }
  return out;
}

ViewCells reduce_view_cells(const std::vector<QuantizedPoint>& points,
                            const PolarCellConfig& cfg) {
  ViewCells cells;
  cells.samples.assign(static_cast<size_t>(cfg.cell_count()), CellSample{});
  cells.populated.assign(static_cast<size_t>(cfg.cell_count()), 0);
  for (const QuantizedPoint& q : points) {
    if (q.cell < 0) continue;
    size_t c = static_cast<size_t>(q.cell);
    if (!cells.populated[c] || q.radius < cells.samples[c].radius) {
      cells.samples[c] = CellSample{q.radius, q.color};
      cells.populated[c] = 1;
    }
  }
  return cells;
}

namespace {

bool is_white(const Eigen::Vector3d& c, double threshold) {
  return c.x() > threshold && c.y() > threshold && c.z() > threshold;
}

PointCloud filter_white(const PointCloud& pc, double threshold) {
  PointCloud out;
  for (size_t i = 0; i < pc.points.size(); ++i) {
    if (is_white(pc.colors[i], threshold)) continue;
    out.points.push_back(pc.points[i]);
    out.colors.push_back(pc.colors[i]);
  }
  return out;
}

}  // namespace

ConsistencyScores consistency_scores(const ViewSet& vs, const CameraIntrinsics& k,
                                     const PolarCellConfig& cfg) {
  cfg.validate();
  if (vs.views.size() < 2) throw std::invalid_argument("consistency_scores: need >= 2 views");
  const int w0 = vs.views.front().first.width, h0 = vs.views.front().first.height;
  for (const auto& [img, pose] : vs.views)
    if (img.width != w0 || img.height != h0)
      throw std::invalid_argument("consistency_scores: views differ in size");

  std::vector<ViewCells> per_view;
  per_view.reserve(vs.views.size());
  for (const auto& [img, pose] : vs.views) {
    RigidTransform e = pose_to_extrinsics(pose);
    PointCloud pc = unproject(img, k, e).cloud;
    if (cfg.white_filter) pc = filter_white(pc, cfg.white_threshold);
    per_view.push_back(reduce_view_cells(polar_quantize(pc, cfg), cfg));
  }

  double depth_acc = 0, color_acc = 0;
  int64_t qualified = 0;
  const int cells = cfg.cell_count();
  for (int c = 0; c < cells; ++c) {
    int n = 0;
    double r_sum = 0, r_sq = 0;
    Eigen::Vector3d c_sum = Eigen::Vector3d::Zero(), c_sq = Eigen::Vector3d::Zero();
    for (const ViewCells& view : per_view) {
      if (!view.populated[static_cast<size_t>(c)]) continue;
      const CellSample& s = view.samples[static_cast<size_t>(c)];
      ++n;
      r_sum += s.radius;
      r_sq += s.radius * s.radius;
      c_sum += s.color;
      c_sq += s.color.cwiseProduct(s.color);
    }
    if (n < 2) continue;
    ++qualified;
    double inv = 1.0 / n;
    depth_acc += r_sq * inv - (r_sum * inv) * (r_sum * inv);  // population variance
    Eigen::Vector3d var = c_sq * inv - (c_sum * inv).cwiseProduct(c_sum * inv);
    color_acc += var.sum() / 3.0;
  }
  if (qualified == 0) throw std::runtime_error("consistency_scores: insufficient overlap");

  ConsistencyScores s;
  s.v_depth = std::max(depth_acc / qualified, 0.0);
  s.v_color = std::max(color_acc / qualified, 0.0);
  s.populated_cell_fraction = static_cast<double>(qualified) / cells;
  return s;
}

}  // namespace rgbdc
