#include "rgbdc/config.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

namespace rgbdc {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

double get_num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

int get_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer())
    throw ConfigError(std::string("'") + key + "' must be an integer");
  return j.at(key).get<int>();
}

bool get_bool(const json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(std::string("'") + key + "' must be a boolean");
  return j.at(key).get<bool>();
}

Eigen::Vector3d get_vec3(const json& j, const char* key, const Eigen::Vector3d& fallback,
                         const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& arr = j.at(key);
  if (!arr.is_array() || arr.size() != 3)
    throw ConfigError(where + ": '" + key + "' must be an array of 3 numbers");
  return Eigen::Vector3d(arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>());
}

std::vector<int> get_int_list(const json& j, const char* key, std::vector<int> fallback) {
  if (!j.contains(key)) return fallback;
  const json& arr = j.at(key);
  if (!arr.is_array()) throw ConfigError(std::string("'") + key + "' must be an array");
  std::vector<int> out;
  for (const auto& v : arr) out.push_back(v.get<int>());
  return out;
}

Texture parse_texture(const json& j, const std::string& where) {
  Texture t;
  if (!j.contains("kind")) throw ConfigError(where + ": texture needs a 'kind'");
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "solid") {
    check_keys(j, {"kind", "color"}, where);
    t.kind = Texture::Kind::Solid;
    t.color_a = get_vec3(j, "color", t.color_a, where);
  } else if (kind == "checker") {
    check_keys(j, {"kind", "color_a", "color_b", "scale"}, where);
    t.kind = Texture::Kind::Checker;
    t.color_a = get_vec3(j, "color_a", t.color_a, where);
    t.color_b = get_vec3(j, "color_b", t.color_b, where);
    t.scale = get_num(j, "scale", 1.0);
  } else if (kind == "gradient") {
    check_keys(j, {"kind", "color_a", "color_b", "scale", "axis"}, where);
    t.kind = Texture::Kind::Gradient;
    t.color_a = get_vec3(j, "color_a", t.color_a, where);
    t.color_b = get_vec3(j, "color_b", t.color_b, where);
    t.scale = get_num(j, "scale", 1.0);
    t.axis = get_int(j, "axis", 0);
    if (t.axis < 0 || t.axis > 2) throw ConfigError(where + ": gradient axis must be 0..2");
  } else {
    throw ConfigError(where + ": unknown texture kind '" + kind + "'");
  }
  return t;
}

Primitive parse_primitive(const json& j, const std::string& where) {
  Primitive p;
  if (!j.contains("kind")) throw ConfigError(where + ": primitive needs a 'kind'");
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "sphere") {
    check_keys(j, {"kind", "center", "radius", "texture"}, where);
    p.kind = Primitive::Kind::Sphere;
    p.center = get_vec3(j, "center", p.center, where);
    p.radius = get_num(j, "radius", p.radius);
  } else if (kind == "box") {
    check_keys(j, {"kind", "center", "half_extents", "texture"}, where);
    p.kind = Primitive::Kind::Box;
    p.center = get_vec3(j, "center", p.center, where);
    p.half_extents = get_vec3(j, "half_extents", p.half_extents, where);
  } else if (kind == "plane") {
    check_keys(j, {"kind", "point", "normal", "extent", "texture"}, where);
    p.kind = Primitive::Kind::Plane;
    p.center = get_vec3(j, "point", p.center, where);
    p.normal = get_vec3(j, "normal", p.normal, where);
    p.extent = get_num(j, "extent", p.extent);
  } else {
    throw ConfigError(where + ": unknown primitive kind '" + kind + "'");
  }
  if (j.contains("texture")) p.texture = parse_texture(j.at("texture"), where + ".texture");
  return p;
}

Scene parse_scene(const json& j) {
  check_keys(j, {"background_color", "background_depth", "primitives"}, "scene");
  Scene s;
  s.background_color = get_vec3(j, "background_color", s.background_color, "scene");
  s.background_depth = get_num(j, "background_depth", s.background_depth);
  if (j.contains("primitives")) {
    if (!j.at("primitives").is_array()) throw ConfigError("scene: 'primitives' must be an array");
    int idx = 0;
    for (const auto& pj : j.at("primitives")) {
      s.primitives.push_back(parse_primitive(pj, "scene.primitives[" + std::to_string(idx) + "]"));
      ++idx;
    }
  }
  return s;
}

PolarCellConfig parse_metrics(const json& j) {
  PolarCellConfig base;
  if (j.contains("preset")) {
    std::string preset = j.at("preset").get<std::string>();
    if (preset == "face")
      base = PolarCellConfig::face_preset();
    else if (preset == "car")
      base = PolarCellConfig::car_preset();
    else
      throw ConfigError("metrics: unknown preset '" + preset + "'");
  }
  check_keys(j,
             {"preset", "origin", "azimuth_min_deg", "azimuth_max_deg", "elevation_min_deg",
              "elevation_max_deg", "bins_azimuth", "bins_elevation", "white_filter",
              "white_threshold"},
             "metrics");
  base.origin = get_vec3(j, "origin", base.origin, "metrics");
  base.azimuth_min = deg_to_rad(get_num(j, "azimuth_min_deg", rad_to_deg(base.azimuth_min)));
  base.azimuth_max = deg_to_rad(get_num(j, "azimuth_max_deg", rad_to_deg(base.azimuth_max)));
  base.elevation_min = deg_to_rad(get_num(j, "elevation_min_deg", rad_to_deg(base.elevation_min)));
  base.elevation_max = deg_to_rad(get_num(j, "elevation_max_deg", rad_to_deg(base.elevation_max)));
  base.bins_azimuth = get_int(j, "bins_azimuth", base.bins_azimuth);
  base.bins_elevation = get_int(j, "bins_elevation", base.bins_elevation);
  base.white_filter = get_bool(j, "white_filter", base.white_filter);
  base.white_threshold = get_num(j, "white_threshold", base.white_threshold);
  return base;
}

}  // namespace

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  check_keys(j,
             {"seed", "image_size", "supersample", "out_dir", "scene", "camera", "losses",
              "metrics", "training", "recover"},
             "config");
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.seed = static_cast<uint64_t>(get_int(j, "seed", 1));
  cfg.image_size = get_int(j, "image_size", 64);
  if (cfg.image_size < 2) throw ConfigError("config: image_size must be >= 2");
  cfg.supersample = get_int(j, "supersample", 1);
  if (cfg.supersample < 1) throw ConfigError("config: supersample must be >= 1");
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();

  if (j.contains("scene")) cfg.scene = parse_scene(j.at("scene"));

  if (j.contains("camera")) {
    const json& c = j.at("camera");
    check_keys(c,
               {"azimuth_deg", "elevation_deg", "distance", "azimuth_range_deg",
                "elevation_range_deg", "max_delta_deg"},
               "camera");
    cfg.pose.azimuth = deg_to_rad(get_num(c, "azimuth_deg", 0.0));
    cfg.pose.elevation = deg_to_rad(get_num(c, "elevation_deg", 0.0));
    cfg.pose.distance = get_num(c, "distance", 1.0);
    cfg.poses.azimuth_range = deg_to_rad(get_num(c, "azimuth_range_deg", 120.0));
    cfg.poses.elevation_range = deg_to_rad(get_num(c, "elevation_range_deg", 35.0));
    cfg.poses.max_delta = deg_to_rad(get_num(c, "max_delta_deg", 30.0));
    cfg.poses.distance = cfg.pose.distance;
  } else {
    cfg.poses.azimuth_range = deg_to_rad(120.0);
    cfg.poses.elevation_range = deg_to_rad(35.0);
    cfg.poses.max_delta = deg_to_rad(30.0);
  }

  if (j.contains("losses")) {
    const json& l = j.at("losses");
    check_keys(l, {"lambda_3d", "lambda_depth", "d_min", "occlusion_margin", "r1_weight"},
               "losses");
    cfg.weights.lambda_3d = get_num(l, "lambda_3d", cfg.weights.lambda_3d);
    cfg.weights.lambda_depth = get_num(l, "lambda_depth", cfg.weights.lambda_depth);
    cfg.weights.d_min = get_num(l, "d_min", cfg.weights.d_min);
    cfg.weights.occlusion_margin = get_num(l, "occlusion_margin", cfg.weights.occlusion_margin);
    cfg.weights.r1_weight = get_num(l, "r1_weight", cfg.weights.r1_weight);
  }

  if (j.contains("metrics")) cfg.metrics = parse_metrics(j.at("metrics"));

  if (j.contains("training")) {
    const json& t = j.at("training");
    check_keys(t,
               {"latent_dim", "dense_widths", "base_channels", "stage_channels", "output_size",
                "depth_base", "depth_scale", "disc_hidden", "batch_size", "iterations",
                "lr_generator", "lr_discriminator", "real_pool"},
               "training");
    GeneratorSpec& g = cfg.training.gen;
    g.latent_dim = get_int(t, "latent_dim", g.latent_dim);
    g.dense_widths = get_int_list(t, "dense_widths", g.dense_widths);
    g.base_channels = get_int(t, "base_channels", g.base_channels);
    g.stage_channels = get_int_list(t, "stage_channels", g.stage_channels);
    g.output_size = get_int(t, "output_size", g.output_size);
    g.depth_base = get_num(t, "depth_base", g.depth_base);
    g.depth_scale = get_num(t, "depth_scale", g.depth_scale);
    cfg.training.disc_hidden = get_int_list(t, "disc_hidden", cfg.training.disc_hidden);
    cfg.training.batch_size = get_int(t, "batch_size", cfg.training.batch_size);
    cfg.training.iterations = get_int(t, "iterations", cfg.training.iterations);
    cfg.training.lr_generator = get_num(t, "lr_generator", cfg.training.lr_generator);
    cfg.training.lr_discriminator = get_num(t, "lr_discriminator", cfg.training.lr_discriminator);
    cfg.training.real_pool = get_int(t, "real_pool", cfg.training.real_pool);
  }
  cfg.training.weights = cfg.weights;
  cfg.training.poses = cfg.poses;
  cfg.training.seed = cfg.seed;

  cfg.recover_poses.a = cfg.pose;
  cfg.recover_poses.b = cfg.pose;
  if (j.contains("recover")) {
    const json& r = j.at("recover");
    check_keys(r,
               {"iterations", "lr", "init_depth", "azimuth_a_deg", "azimuth_b_deg",
                "elevation_a_deg", "elevation_b_deg"},
               "recover");
    cfg.recover.iterations = get_int(r, "iterations", cfg.recover.iterations);
    cfg.recover.lr = get_num(r, "lr", cfg.recover.lr);
    cfg.recover.init_depth = get_num(r, "init_depth", cfg.recover.init_depth);
    cfg.recover_poses.a.azimuth = deg_to_rad(get_num(r, "azimuth_a_deg", -7.5));
    cfg.recover_poses.b.azimuth = deg_to_rad(get_num(r, "azimuth_b_deg", 7.5));
    cfg.recover_poses.a.elevation = deg_to_rad(get_num(r, "elevation_a_deg", 0.0));
    cfg.recover_poses.b.elevation = deg_to_rad(get_num(r, "elevation_b_deg", 0.0));
  }
  cfg.recover.weights = cfg.weights;

  // Surface invalid values now rather than on first use.
  try {
    cfg.scene.validate();
    cfg.pose.validate();
    cfg.poses.validate();
    cfg.weights.validate();
    cfg.metrics.validate();
    cfg.training.gen.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_experiment_config(j);
}

void write_view_json(const std::string& path, const ViewMeta& meta) {
  nlohmann::json j;
  j["azimuth_deg"] = rad_to_deg(meta.pose.azimuth);
  j["elevation_deg"] = rad_to_deg(meta.pose.elevation);
  j["distance"] = meta.pose.distance;
  j["image_size"] = meta.image_size;
  j["latent_id"] = meta.latent_id;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << j.dump(2) << "\n";
  if (!f) throw std::runtime_error("write failed for " + path);
}

ViewMeta read_view_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  ViewMeta meta;
  meta.pose.azimuth = deg_to_rad(j.at("azimuth_deg").get<double>());
  meta.pose.elevation = deg_to_rad(j.at("elevation_deg").get<double>());
  meta.pose.distance = j.at("distance").get<double>();
  meta.image_size = j.at("image_size").get<int>();
  meta.latent_id = j.value("latent_id", 0);
  return meta;
}

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash_hex(const nlohmann::json& j) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

void write_manifest(const std::string& out_dir, const std::string& subcommand,
                    const nlohmann::json& config, uint64_t seed, double wall_seconds) {
  nlohmann::json m;
  m["subcommand"] = subcommand;
  m["config_hash"] = config_hash_hex(config);
  m["version"] = RGBDC_VERSION;
  m["seed"] = seed;
  m["wall_time_seconds"] = wall_seconds;
  m["timestamp_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  std::ofstream f(out_dir + "/manifest.json");
  if (!f) throw std::runtime_error("cannot open " + out_dir + "/manifest.json");
  f << m.dump(2) << "\n";
  if (!f) throw std::runtime_error("write failed for manifest.json");
}

}  // namespace rgbdc
