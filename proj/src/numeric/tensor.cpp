// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/numeric/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace cfmimo::numeric {

namespace {
std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}
std::size_t trailing(const std::vector<std::size_t>& shape) {
  if (shape.empty()) return 0;
  return std::accumulate(shape.begin() + 1, shape.end(), std::size_t{1}, std::multiplies<>());
}
}  // namespace

RealTensor::RealTensor(std::size_t rows, std::size_t cols, double fill)
    : shape_{rows, cols}, cols_(cols), data_(rows * cols, fill) {}

RealTensor::RealTensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), cols_(trailing(shape_)), data_(shape_.empty() ? 0 : product(shape_), fill) {}

RealTensor::RealTensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : shape_{rows, cols}, cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) throw std::invalid_argument("RealTensor: value count does not match shape");
}

RealTensor RealTensor::row(std::span<const double> values) {
  return RealTensor(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

RealTensor RealTensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  RealTensor t(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("RealTensor::from_rows: ragged rows");
    for (double v : row) t.data_[i++] = v;
  }
  return t;
}

std::size_t RealTensor::cols() const { return cols_; }

RealTensor RealTensor::reshaped(std::vector<std::size_t> shape) const {
  if (product(shape) != data_.size()) throw std::invalid_argument("RealTensor::reshaped: entry count mismatch");
  RealTensor t;
  t.shape_ = std::move(shape);
  t.cols_ = trailing(t.shape_);
  t.data_ = data_;
  return t;
}

void RealTensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool RealTensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double RealTensor::squared_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

namespace {

// Each output entry accumulates its terms in increasing inner index, whatever
// the blocking or the instruction set chosen at load time, so every clone
// produces identical bits.
#if defined(__GNUC__) && defined(__x86_64__) && !defined(__clang__)
#define CFMIMO_KERNEL __attribute__((target_clones("avx2", "default")))
#else
#define CFMIMO_KERNEL
#endif

// c[n x m] += a[n x k] * b[k x m]. Zero entries of a are not skipped: every
// output entry sees the same operation sequence wherever its row falls in the
// blocking, which keeps row permutations exact down to signed zeros.
CFMIMO_KERNEL void gemm_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                            std::size_t m) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    double* c0 = c + i * m;
    double* c1 = c0 + m;
    double* c2 = c1 + m;
    double* c3 = c2 + m;
    const double* a0 = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double x0 = a0[p], x1 = a0[k + p], x2 = a0[2 * k + p], x3 = a0[3 * k + p];
      const double* br = b + p * m;
      for (std::size_t j = 0; j < m; ++j) {
        const double bv = br[j];
        c0[j] += x0 * bv;
        c1[j] += x1 * bv;
        c2[j] += x2 * bv;
        c3[j] += x3 * bv;
      }
    }
  }
  for (; i < n; ++i) {
    double* cr = c + i * m;
    const double* ar = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double x = ar[p];
      const double* br = b + p * m;
      for (std::size_t j = 0; j < m; ++j) cr[j] += x * br[j];
    }
  }
}

}  // namespace

void matmul_into(const RealTensor& a, const RealTensor& b, RealTensor& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) throw std::invalid_argument("matmul: inner dimensions differ");
  if (c.rows() != n || c.cols() != m) c = RealTensor(n, m);
  else c.fill(0.0);
  gemm_acc(a.data(), b.data(), c.data(), n, k, m);
}

void matmul_nt_accumulate(const RealTensor& go, const RealTensor& b, RealTensor& ga) {
  if (go.cols() != b.cols() || ga.rows() != go.rows() || ga.cols() != b.rows())
    throw std::invalid_argument("matmul_nt_accumulate: shape mismatch");
  const RealTensor bt = transpose(b);
  gemm_acc(go.data(), bt.data(), ga.data(), go.rows(), go.cols(), bt.cols());
}

void matmul_tn_accumulate(const RealTensor& a, const RealTensor& go, RealTensor& gb) {
  if (a.rows() != go.rows() || gb.rows() != a.cols() || gb.cols() != go.cols())
    throw std::invalid_argument("matmul_tn_accumulate: shape mismatch");
  const RealTensor at = transpose(a);
  gemm_acc(at.data(), go.data(), gb.data(), at.rows(), at.cols(), go.cols());
}

RealTensor matmul(const RealTensor& a, const RealTensor& b) {
  RealTensor c(a.rows(), b.cols());
  matmul_into(a, b, c);
  return c;
}

RealTensor transpose(const RealTensor& a) {
  RealTensor t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

}  // namespace cfmimo::numeric
