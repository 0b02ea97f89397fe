#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "rgbdc/camera.hpp"
#include "rgbdc/generator.hpp"
#include "rgbdc/losses.hpp"
#include "rgbdc/metrics.hpp"
#include "rgbdc/oracle.hpp"

namespace rgbdc {

// Invalid or malformed configuration; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RecoverPoses {
  CameraPose a;
  CameraPose b;
};

struct ExperimentConfig {
  uint64_t seed = 1;
  int image_size = 64;
  int supersample = 1;
  std::string out_dir;

  Scene scene;
  CameraPose pose;          // base pose from the camera section
  PoseDistribution poses;   // sampling ranges from the camera section
  LossWeights weights;
  PolarCellConfig metrics;
  TrainConfig training;     // weights/poses/seed filled from the sections above
  RecoverDepthConfig recover;
  RecoverPoses recover_poses;

  nlohmann::json raw;  // the parsed document, for hashing and manifests
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

// All angles in the view sidecar are degrees.
struct ViewMeta {
  CameraPose pose;
  int image_size = 0;
  int64_t latent_id = 0;
};

void write_view_json(const std::string& path, const ViewMeta& meta);
ViewMeta read_view_json(const std::string& path);

uint64_t fnv1a64(const std::string& bytes);
std::string config_hash_hex(const nlohmann::json& j);

// manifest.json next to a subcommand's outputs: config hash, version, seed,
// wall time, timestamp.
void write_manifest(const std::string& out_dir, const std::string& subcommand,
                    const nlohmann::json& config, uint64_t seed, double wall_seconds);

}  // namespace rgbdc
