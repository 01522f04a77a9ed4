// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "cfmimo/numeric/rng.hpp"

namespace cfmimo::numeric {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Raised for invalid numeric inputs (non-PSD covariance, singular system, NaN).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool is_hermitian(const ComplexMatrix& a, double tol = 1e-12);

/// Smallest eigenvalue allowed for a matrix to count as PSD: -1e-10 * trace.
double psd_tolerance(const ComplexMatrix& a);

/// Factor L with L L^H = cov. Eigenvalues in [-1e-10 tr, 0) are clipped to 0;
/// anything more negative throws NumericError.
ComplexMatrix psd_factor(const ComplexMatrix& cov);

/// Precomputed sampler for CN(0, cov). Diagonal covariances skip the dense
/// matrix-vector product.
class GaussianSampler {
 public:
  GaussianSampler() = default;
  explicit GaussianSampler(const ComplexMatrix& cov);

  [[nodiscard]] ComplexVector sample(RngStream& rng) const;
  void sample_into(RngStream& rng, ComplexVector& out) const;
  [[nodiscard]] Eigen::Index dim() const { return factor_.rows(); }
  [[nodiscard]] const ComplexMatrix& factor() const { return factor_; }

 private:
  ComplexMatrix factor_;
  Eigen::VectorXd diag_sqrt_;
  bool diagonal_ = false;
};

ComplexVector sample_complex_gaussian(const ComplexMatrix& cov, RngStream& rng);

/// Solve a x = b for Hermitian positive definite a. Throws NumericError with a
/// condition-number diagnostic when a is singular or indefinite.
ComplexMatrix hermitian_solve(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexVector hermitian_solve(const ComplexMatrix& a, const ComplexVector& b);

}  // namespace cfmimo::numeric
