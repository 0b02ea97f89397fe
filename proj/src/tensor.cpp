#include "rgbdc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rgbdc {

int64_t shape_size(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_to_string(shape));
    n *= d;
  }
  return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  if (shape_.size() > 4) throw std::invalid_argument("tensor rank > 4: " + shape_to_string(shape_));
  data_.assign(static_cast<size_t>(shape_size(shape_)), 0.0);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() > 4) throw std::invalid_argument("tensor rank > 4: " + shape_to_string(shape_));
  if (static_cast<int64_t>(data_.size()) != shape_size(shape_))
    throw std::invalid_argument("data size " + std::to_string(data_.size()) +
                                " does not match shape " + shape_to_string(shape_));
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), v);
  return t;
}

double& Tensor::at(int i0) { return data_[static_cast<size_t>(i0)]; }
double& Tensor::at(int i0, int i1) { return data_[static_cast<size_t>(i0) * shape_[1] + i1]; }
double& Tensor::at(int i0, int i1, int i2) {
  return data_[(static_cast<size_t>(i0) * shape_[1] + i1) * shape_[2] + i2];
}
double& Tensor::at(int i0, int i1, int i2, int i3) {
  return data_[((static_cast<size_t>(i0) * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3];
}
double Tensor::at(int i0) const { return data_[static_cast<size_t>(i0)]; }
double Tensor::at(int i0, int i1) const { return data_[static_cast<size_t>(i0) * shape_[1] + i1]; }
double Tensor::at(int i0, int i1, int i2) const {
  return data_[(static_cast<size_t>(i0) * shape_[1] + i1) * shape_[2] + i2];
}
double Tensor::at(int i0, int i1, int i2, int i3) const {
  return data_[((static_cast<size_t>(i0) * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3];
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

double Tensor::min() const {
  if (data_.empty()) throw std::runtime_error("min of empty tensor");
  return *std::min_element(data_.begin(), data_.end());
}

double Tensor::max() const {
  if (data_.empty()) throw std::runtime_error("max of empty tensor");
  return *std::max_element(data_.begin(), data_.end());
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace rgbdc
