#include "rgbdc/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

#include "json.hpp"

namespace rgbdc {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

void write_png_impl(const std::string& path, int width, int height, int bit_depth, int color_type,
                    const std::vector<png_bytep>& rows) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("png: cannot open " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png: create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png: create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png: write failed for " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);  // rows are native little-endian
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png_rgb8(const std::string& path, const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(2) != 3)
    throw std::invalid_argument("write_png_rgb8: need H x W x 3, got " + rgb.shape_str());
  const int h = rgb.dim(0), w = rgb.dim(1);
  std::vector<uint8_t> bytes(static_cast<size_t>(h) * w * 3);
  for (int64_t i = 0; i < rgb.size(); ++i) {
    double v = std::clamp(rgb[i], 0.0, 1.0);
    bytes[static_cast<size_t>(i)] = static_cast<uint8_t>(std::lround(v * 255.0));
  }
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<size_t>(y)] = bytes.data() + static_cast<size_t>(y) * w * 3;
  write_png_impl(path, w, h, 8, PNG_COLOR_TYPE_RGB, rows);
}

Tensor read_png_rgb8(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("png: cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png: create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png: create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png: read failed for " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  // Normalize to 8-bit RGB.
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::vector<uint8_t> bytes(static_cast<size_t>(h) * w * 3);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = bytes.data() + static_cast<size_t>(y) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Tensor out({static_cast<int>(h), static_cast<int>(w), 3});
  for (int64_t i = 0; i < out.size(); ++i) out[i] = bytes[static_cast<size_t>(i)] / 255.0;
  return out;
}

void write_png_gray16(const std::string& path, const Tensor& values, double lo, double hi) {
  if (values.rank() != 2)
    throw std::invalid_argument("write_png_gray16: need H x W, got " + values.shape_str());
  if (!(hi > lo)) throw std::invalid_argument("write_png_gray16: need hi > lo");
  const int h = values.dim(0), w = values.dim(1);
  std::vector<uint16_t> pix(static_cast<size_t>(h) * w);
  for (int64_t i = 0; i < values.size(); ++i) {
    double t = std::clamp((values[i] - lo) / (hi - lo), 0.0, 1.0);
    pix[static_cast<size_t>(i)] = static_cast<uint16_t>(std::lround(t * 65535.0));
  }
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (int y = 0; y < h; ++y)
    rows[static_cast<size_t>(y)] = reinterpret_cast<png_bytep>(pix.data() + static_cast<size_t>(y) * w);
  write_png_impl(path, w, h, 16, PNG_COLOR_TYPE_GRAY, rows);
}

void write_pfm(const std::string& path, const Tensor& values) {
  if (values.rank() != 2)
    throw std::invalid_argument("write_pfm: need H x W, got " + values.shape_str());
  const int h = values.dim(0), w = values.dim(1);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("pfm: cannot open " + path);
  f << "Pf\n" << w << " " << h << "\n-1.0\n";
  // PFM stores rows bottom to top.
  std::vector<float> row(static_cast<size_t>(w));
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) row[static_cast<size_t>(x)] = static_cast<float>(values.at(y, x));
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(w * sizeof(float)));
  }
  if (!f) throw std::runtime_error("pfm: write failed for " + path);
}

Tensor read_pfm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("pfm: cannot open " + path);
  std::string magic;
  int w = 0, h = 0;
  double scale = 0;
  f >> magic >> w >> h >> scale;
  if (magic != "Pf") throw std::runtime_error("pfm: not a grayscale PFM: " + path);
  if (scale >= 0) throw std::runtime_error("pfm: big-endian files unsupported: " + path);
  if (w <= 0 || h <= 0) throw std::runtime_error("pfm: bad dimensions in " + path);
  f.get();  // single whitespace after the scale line
  Tensor out({h, w});
  std::vector<float> row(static_cast<size_t>(w));
  for (int y = h - 1; y >= 0; --y) {
    f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(w * sizeof(float)));
    if (!f) throw std::runtime_error("pfm: truncated file " + path);
    for (int x = 0; x < w; ++x) out.at(y, x) = row[static_cast<size_t>(x)];
  }
  return out;
}

Tensor depth_colormap(const Tensor& depth) {
  if (depth.rank() != 2)
    throw std::invalid_argument("depth_colormap: need H x W, got " + depth.shape_str());
  // Viridis-style anchors, dark-to-bright.
  static const double anchors[][3] = {
      {0.267, 0.005, 0.329}, {0.283, 0.141, 0.458}, {0.254, 0.265, 0.530},
      {0.207, 0.372, 0.553}, {0.164, 0.471, 0.558}, {0.128, 0.567, 0.551},
      {0.135, 0.659, 0.518}, {0.267, 0.749, 0.441}, {0.478, 0.821, 0.318},
      {0.741, 0.873, 0.150}, {0.993, 0.906, 0.144}};
  constexpr int n_anchors = 11;
  double lo = depth.min(), hi = depth.max();
  double range = hi - lo;
  const int h = depth.dim(0), w = depth.dim(1);
  Tensor out({h, w, 3});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double t = range > 0 ? (depth.at(y, x) - lo) / range : 0.0;
      double pos = t * (n_anchors - 1);
      int i0 = std::clamp(static_cast<int>(std::floor(pos)), 0, n_anchors - 2);
      double f = pos - i0;
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = (1 - f) * anchors[i0][c] + f * anchors[i0 + 1][c];
    }
  return out;
}

void save_opacity_grid(const std::string& path, const OpacityGrid& grid) {
  grid.validate();
  nlohmann::json header;
  header["depth"] = grid.depth_slices();
  header["height"] = grid.height();
  header["width"] = grid.width();
  header["slice_depths"] = grid.slice_depths;
  std::string hs = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("opacity grid: cannot open " + path);
  uint32_t len = static_cast<uint32_t>(hs.size());
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  std::vector<float> data(static_cast<size_t>(grid.values.size()));
  for (int64_t i = 0; i < grid.values.size(); ++i) data[static_cast<size_t>(i)] = static_cast<float>(grid.values[i]);
  f.write(reinterpret_cast<const char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!f) throw std::runtime_error("opacity grid: write failed for " + path);
}

OpacityGrid load_opacity_grid(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("opacity grid: cannot open " + path);
  uint32_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string hs(len, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(len));
  if (!f) throw std::runtime_error("opacity grid: truncated header in " + path);
  nlohmann::json header = nlohmann::json::parse(hs);
  int d = header.at("depth").get<int>();
  int h = header.at("height").get<int>();
  int w = header.at("width").get<int>();
  OpacityGrid grid;
  grid.slice_depths = header.at("slice_depths").get<std::vector<double>>();
  grid.values = Tensor::zeros({d, h, w});
  std::vector<float> data(static_cast<size_t>(grid.values.size()));
  f.read(reinterpret_cast<char*>(data.data()),
         static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!f) throw std::runtime_error("opacity grid: truncated data in " + path);
  for (int64_t i = 0; i < grid.values.size(); ++i) grid.values[i] = data[static_cast<size_t>(i)];
  grid.validate();
  return grid;
}

void save_checkpoint(const std::string& blob_path, const std::string& manifest_path,
                     const Checkpoint& ckpt) {
  if (ckpt.names.size() != ckpt.tensors.size())
    throw std::invalid_argument("checkpoint: name/tensor count mismatch");
  nlohmann::json manifest;
  manifest["iteration"] = ckpt.iteration;
  manifest["config_hash"] = ckpt.config_hash;
  nlohmann::json tensors = nlohmann::json::array();
  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw std::runtime_error("checkpoint: cannot open " + blob_path);
  for (size_t i = 0; i < ckpt.tensors.size(); ++i) {
    const Tensor& t = ckpt.tensors[i];
    tensors.push_back({{"name", ckpt.names[i]}, {"shape", t.shape()}});
    std::vector<float> data(static_cast<size_t>(t.size()));
    for (int64_t j = 0; j < t.size(); ++j) data[static_cast<size_t>(j)] = static_cast<float>(t[j]);
    blob.write(reinterpret_cast<const char*>(data.data()),
               static_cast<std::streamsize>(data.size() * sizeof(float)));
  }
  if (!blob) throw std::runtime_error("checkpoint: write failed for " + blob_path);
  manifest["tensors"] = tensors;
  std::ofstream mf(manifest_path);
  if (!mf) throw std::runtime_error("checkpoint: cannot open " + manifest_path);
  mf << manifest.dump(2) << "\n";
  if (!mf) throw std::runtime_error("checkpoint: write failed for " + manifest_path);
}

Checkpoint load_checkpoint(const std::string& blob_path, const std::string& manifest_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw std::runtime_error("checkpoint: cannot open " + manifest_path);
  nlohmann::json manifest = nlohmann::json::parse(mf);
  Checkpoint ckpt;
  ckpt.iteration = manifest.at("iteration").get<int64_t>();
  ckpt.config_hash = manifest.value("config_hash", "");
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw std::runtime_error("checkpoint: cannot open " + blob_path);
  for (const auto& entry : manifest.at("tensors")) {
    std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    Tensor t = Tensor::zeros(shape);
    std::vector<float> data(static_cast<size_t>(t.size()));
    blob.read(reinterpret_cast<char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!blob) throw std::runtime_error("checkpoint: truncated blob " + blob_path);
    for (int64_t j = 0; j < t.size(); ++j) t[j] = data[static_cast<size_t>(j)];
    ckpt.tensors.push_back(std::move(t));
    ckpt.names.push_back(entry.at("name").get<std::string>());
  }
  return ckpt;
}

}  // namespace rgbdc
