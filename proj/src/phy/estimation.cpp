// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/phy/estimation.hpp"

#include <cmath>
#include <stdexcept>

namespace cfmimo::phy {

using numeric::cplx;

ChannelSampler::ChannelSampler(const CovarianceSet& cov) : M_(cov.M), K_(cov.K), N_(cov.N) {
  samplers_.reserve(cov.r.size());
  for (const auto& r : cov.r) samplers_.emplace_back(r);
}

void ChannelSampler::sample_into(numeric::RngStream& rng, ChannelRealization& out) const {
  out.M = M_;
  out.K = K_;
  out.N = N_;
  out.h.resize(M_ * K_);
  for (std::size_t i = 0; i < samplers_.size(); ++i) samplers_[i].sample_into(rng, out.h[i]);
}

ChannelRealization ChannelSampler::sample(numeric::RngStream& rng) const {
  ChannelRealization r;
  sample_into(rng, r);
  return r;
}

ChannelRealization sample_channels(const CovarianceSet& cov, numeric::RngStream& rng) {
  return ChannelSampler(cov).sample(rng);
}

MmseEstimator::MmseEstimator(const CovarianceSet& cov, const PilotAssignment& pilots, std::vector<double> ue_powers,
                             double noise_power)
    : M_(cov.M),
      K_(cov.K),
      N_(cov.N),
      tau_p_(pilots.tau_p),
      pilots_(pilots),
      powers_(std::move(ue_powers)),
      noise_(noise_power),
      diagonal_(cov.uncorrelated()) {
  if (powers_.size() != K_) throw std::invalid_argument("MmseEstimator: need one pilot power per UE");
  if (pilots_.t.size() != K_) throw std::invalid_argument("MmseEstimator: pilot assignment size mismatch");
  if (!(noise_ > 0.0)) throw std::invalid_argument("MmseEstimator: noise power must be positive");
  for (double p : powers_)
    if (p < 0.0) throw std::invalid_argument("MmseEstimator: negative pilot power");
  const auto n = static_cast<Eigen::Index>(N_);
  const double tau = static_cast<double>(tau_p_);
  const ComplexMatrix eye = ComplexMatrix::Identity(n, n);

  psi_.assign(M_ * tau_p_, noise_ * eye);
  for (std::size_t m = 0; m < M_; ++m)
    for (std::size_t i = 0; i < K_; ++i) psi_[m * tau_p_ + pilots_.t[i]] += powers_[i] * tau * cov.R(m, i);

  err_.resize(M_ * K_);
  hat_.resize(M_ * K_);
  gain_.resize(M_ * K_);
  gain_scalar_.assign(M_ * K_, 0.0);
  for (std::size_t m = 0; m < M_; ++m)
    for (std::size_t k = 0; k < K_; ++k) {
      const ComplexMatrix& R = cov.R(m, k);
      const ComplexMatrix& P = psi_[m * tau_p_ + pilots_.t[k]];
      const double s = std::sqrt(powers_[k] * tau);
      // Psi^{-1} R is computed by a solve; A = s R Psi^{-1} = s (Psi^{-1} R)^H since both are Hermitian.
      const ComplexMatrix pinv_r = numeric::hermitian_solve(P, R);
      const ComplexMatrix a = s * pinv_r.adjoint();
      // Estimate covariance p_k tau_p R Psi^{-1} R; the error covariance is its complement.
      const ComplexMatrix rhat = (s * s) * R * pinv_r;
      gain_[m * K_ + k] = a;
      if (diagonal_) gain_scalar_[m * K_ + k] = a(0, 0).real();
      hat_[m * K_ + k] = 0.5 * (rhat + rhat.adjoint());
      err_[m * K_ + k] = R - hat_[m * K_ + k];
    }
}

void MmseEstimator::estimate_into(const ChannelRealization& h, numeric::RngStream& rng,
                                  std::vector<ComplexVector>& h_hat) const {
  if (h.M != M_ || h.K != K_ || h.N != N_) throw std::invalid_argument("MmseEstimator: realization shape mismatch");
  const double tau = static_cast<double>(tau_p_);
  const double noise_sd = std::sqrt(noise_);
  const auto n = static_cast<Eigen::Index>(N_);
  h_hat.resize(M_ * K_);
  std::vector<ComplexVector> y(tau_p_, ComplexVector(n));
  for (std::size_t m = 0; m < M_; ++m) {
    for (std::size_t t = 0; t < tau_p_; ++t)
      for (Eigen::Index a = 0; a < n; ++a) y[t](a) = noise_sd * rng.complex_normal();
    for (std::size_t i = 0; i < K_; ++i) y[pilots_.t[i]] += std::sqrt(powers_[i] * tau) * h.at(m, i);
    for (std::size_t k = 0; k < K_; ++k) {
      const ComplexVector& yk = y[pilots_.t[k]];
      if (diagonal_)
        h_hat[m * K_ + k] = gain_scalar_[m * K_ + k] * yk;
      else
        h_hat[m * K_ + k].noalias() = gain_[m * K_ + k] * yk;
    }
  }
}

ChannelEstimate MmseEstimator::estimate(const ChannelRealization& h, numeric::RngStream& rng) const {
  ChannelEstimate e;
  e.M = M_;
  e.K = K_;
  e.N = N_;
  e.tau_p = tau_p_;
  estimate_into(h, rng, e.h_hat);
  e.psi = psi_;
  e.err_cov = err_;
  return e;
}

ChannelEstimate mmse_estimate(const CovarianceSet& cov, const PilotAssignment& pilots,
                              const ChannelRealization& channels, const std::vector<double>& ue_powers,
                              double noise_power, numeric::RngStream& rng) {
  return MmseEstimator(cov, pilots, ue_powers, noise_power).estimate(channels, rng);
}

}  // namespace cfmimo::phy
