#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace rgbdc {

// Dense row-major double array of rank 0..4. The single array currency of the
// toolkit; images are H x W x C, opacity grids D x H x W (x C).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double v);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // Multi-index access; index count must match rank.
  double& at(int i0);
  double& at(int i0, int i1);
  double& at(int i0, int i1, int i2);
  double& at(int i0, int i1, int i2, int i3);
  double at(int i0) const;
  double at(int i0, int i1) const;
  double at(int i0, int i1, int i2) const;
  double at(int i0, int i1, int i2, int i3) const;

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const;

  double min() const;
  double max() const;
  double sum() const;
  bool all_finite() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

int64_t shape_size(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

}  // namespace rgbdc
