// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace cfmimo::numeric {

/// Dense row-major tensor of doubles. Networks treat every tensor as a 2-D view:
/// rows() is the leading extent and cols() the product of the remaining extents.
class RealTensor {
 public:
  RealTensor() = default;
  RealTensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  RealTensor(std::vector<std::size_t> shape, double fill = 0.0);
  RealTensor(std::size_t rows, std::size_t cols, std::vector<double> values);

  static RealTensor scalar(double v) { return RealTensor(1, 1, v); }
  static RealTensor row(std::span<const double> values);
  static RealTensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  [[nodiscard]] const std::vector<std::size_t>& shape() const { return shape_; }
  [[nodiscard]] std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  [[nodiscard]] std::size_t cols() const;
  [[nodiscard]] std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  [[nodiscard]] double* data() { return data_.data(); }
  [[nodiscard]] const double* data() const { return data_.data(); }
  [[nodiscard]] std::span<double> row_span(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  [[nodiscard]] std::span<const double> row_span(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  [[nodiscard]] const std::vector<double>& values() const { return data_; }
  [[nodiscard]] std::vector<double>& values() { return data_; }

  /// Same entries, new shape; the entry count must match.
  [[nodiscard]] RealTensor reshaped(std::vector<std::size_t> shape) const;
  void fill(double v);
  [[nodiscard]] bool all_finite() const;
  [[nodiscard]] double squared_norm() const;
  bool operator==(const RealTensor& other) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// C = A * B with a fixed per-row accumulation order.
void matmul_into(const RealTensor& a, const RealTensor& b, RealTensor& c);
/// ga += go * b^T, the left-operand gradient of a product.
void matmul_nt_accumulate(const RealTensor& go, const RealTensor& b, RealTensor& ga);
/// gb += a^T * go, the right-operand gradient of a product.
void matmul_tn_accumulate(const RealTensor& a, const RealTensor& go, RealTensor& gb);
RealTensor matmul(const RealTensor& a, const RealTensor& b);
RealTensor transpose(const RealTensor& a);

}  // namespace cfmimo::numeric
