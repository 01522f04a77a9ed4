// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/numeric/complex_linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cfmimo::numeric {

bool is_hermitian(const ComplexMatrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i; j < a.cols(); ++j)
      if (std::abs(a(i, j) - std::conj(a(j, i))) > tol * scale) return false;
  return true;
}

double psd_tolerance(const ComplexMatrix& a) { return -1e-10 * std::abs(a.trace().real()); }

ComplexMatrix psd_factor(const ComplexMatrix& cov) {
  if (cov.rows() != cov.cols()) throw NumericError("psd_factor: covariance must be square");
  if (!cov.allFinite()) throw NumericError("psd_factor: covariance has non-finite entries");
  if (!is_hermitian(cov)) throw NumericError("psd_factor: covariance is not Hermitian");
  const Eigen::Index n = cov.rows();
  if (n == 0) return cov;
  if (cov.isZero(0.0)) return ComplexMatrix::Zero(n, n);

  const ComplexMatrix sym = 0.5 * (cov + cov.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericError("psd_factor: eigendecomposition failed");
  Eigen::VectorXd lambda = eig.eigenvalues();
  const double floor = psd_tolerance(cov);
  if (lambda.minCoeff() < floor) {
    std::ostringstream msg;
    msg << "psd_factor: covariance is not PSD (smallest eigenvalue " << lambda.minCoeff()
        << " < tolerance " << floor << ")";
    throw NumericError(msg.str());
  }
  lambda = lambda.cwiseMax(0.0);
  return eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
}

GaussianSampler::GaussianSampler(const ComplexMatrix& cov) {
  const bool diag = cov.rows() == cov.cols() &&
                    (cov - ComplexMatrix(cov.diagonal().asDiagonal())).isZero(0.0);
  if (diag) {
    const Eigen::VectorXd d = cov.diagonal().real();
    if (!d.allFinite()) throw NumericError("GaussianSampler: covariance has non-finite entries");
    if (d.size() > 0 && d.minCoeff() < psd_tolerance(cov))
      throw NumericError("GaussianSampler: diagonal covariance has negative entries");
    if (!cov.diagonal().imag().isZero(1e-12 * std::max(1.0, d.cwiseAbs().maxCoeff())))
      throw NumericError("GaussianSampler: covariance is not Hermitian");
    diagonal_ = true;
    diag_sqrt_ = d.cwiseMax(0.0).cwiseSqrt();
    factor_ = ComplexMatrix(diag_sqrt_.cast<cplx>().asDiagonal());
  } else {
    factor_ = psd_factor(cov);
  }
}

void GaussianSampler::sample_into(RngStream& rng, ComplexVector& out) const {
  const Eigen::Index n = factor_.rows();
  out.resize(n);
  if (diagonal_) {
    for (Eigen::Index i = 0; i < n; ++i) out(i) = diag_sqrt_(i) * rng.complex_normal();
    return;
  }
  ComplexVector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.complex_normal();
  out.noalias() = factor_ * z;
}

ComplexVector GaussianSampler::sample(RngStream& rng) const {
  ComplexVector out;
  sample_into(rng, out);
  return out;
}

ComplexVector sample_complex_gaussian(const ComplexMatrix& cov, RngStream& rng) {
  return GaussianSampler(cov).sample(rng);
}

namespace {

[[noreturn]] void throw_solve_failure(const ComplexMatrix& a, const char* reason) {
  std::ostringstream msg;
  msg << "hermitian_solve: " << reason;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
  if (eig.info() == Eigen::Success && a.rows() > 0) {
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    msg << " (eigenvalues in [" << lo << ", " << hi << "], condition number ";
    if (lo > 0.0)
      msg << hi / lo;
    else
      msg << "inf";
    msg << ")";
  }
  throw NumericError(msg.str());
}

}  // namespace

ComplexMatrix hermitian_solve(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != a.cols() || a.rows() != b.rows())
    throw NumericError("hermitian_solve: dimension mismatch");
  if (!a.allFinite() || !b.allFinite()) throw NumericError("hermitian_solve: non-finite input");
  Eigen::LLT<ComplexMatrix> llt(a);
  if (llt.info() != Eigen::Success) throw_solve_failure(a, "matrix is not positive definite");
  ComplexMatrix x = llt.solve(b);
  const double bnorm = b.norm();
  const double resid = (a * x - b).norm();
  if (!x.allFinite() || resid > 1e-9 * bnorm) {
    // One refinement step recovers most of the accuracy lost to poor scaling.
    x += llt.solve(b - a * x);
    if (!x.allFinite() || (a * x - b).norm() > 1e-9 * bnorm)
      throw_solve_failure(a, "matrix is too ill-conditioned");
  }
  return x;
}

ComplexVector hermitian_solve(const ComplexMatrix& a, const ComplexVector& b) {
  ComplexMatrix x = hermitian_solve(a, ComplexMatrix(b));
  return x.col(0);
}

}  // namespace cfmimo::numeric
