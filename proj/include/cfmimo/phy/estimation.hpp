// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "cfmimo/numeric/complex_linalg.hpp"
#include "cfmimo/numeric/rng.hpp"
#include "cfmimo/phy/covariance.hpp"
#include "cfmimo/phy/pilots.hpp"

namespace cfmimo::phy {

/// Channel vectors h_mk, AP-major (m * K + k).
struct ChannelRealization {
  std::size_t M = 0, K = 0, N = 0;
  std::vector<ComplexVector> h;
  [[nodiscard]] const ComplexVector& at(std::size_t m, std::size_t k) const { return h[m * K + k]; }
};

/// Caches one Gaussian sampler per (m, k) so repeated draws skip the factorization.
class ChannelSampler {
 public:
  explicit ChannelSampler(const CovarianceSet& cov);
  void sample_into(numeric::RngStream& rng, ChannelRealization& out) const;
  [[nodiscard]] ChannelRealization sample(numeric::RngStream& rng) const;

 private:
  std::size_t M_, K_, N_;
  std::vector<numeric::GaussianSampler> samplers_;
};

ChannelRealization sample_channels(const CovarianceSet& cov, numeric::RngStream& rng);

struct ChannelEstimate {
  std::size_t M = 0, K = 0, N = 0, tau_p = 0;
  std::vector<ComplexVector> h_hat;   // m * K + k
  std::vector<ComplexMatrix> psi;     // m * tau_p + t
  std::vector<ComplexMatrix> err_cov; // m * K + k
  [[nodiscard]] const ComplexVector& at(std::size_t m, std::size_t k) const { return h_hat[m * K + k]; }
};

/// MMSE estimator with all geometry-dependent matrices precomputed:
/// y_mt = sum_{i in S} sqrt(p_i tau_p) h_mi + n_mt and h_hat_mk = A_mk y_{m t_k}
/// with A_mk = sqrt(p_k tau_p) R_mk Psi^{-1}.
class MmseEstimator {
 public:
  MmseEstimator(const CovarianceSet& cov, const PilotAssignment& pilots, std::vector<double> ue_powers,
                double noise_power);

  /// Draws the pilot noise from rng (AP-major, then pilot index).
  void estimate_into(const ChannelRealization& h, numeric::RngStream& rng, std::vector<ComplexVector>& h_hat) const;
  [[nodiscard]] ChannelEstimate estimate(const ChannelRealization& h, numeric::RngStream& rng) const;

  [[nodiscard]] const ComplexMatrix& psi(std::size_t m, std::size_t t) const { return psi_[m * tau_p_ + t]; }
  [[nodiscard]] const ComplexMatrix& err_cov(std::size_t m, std::size_t k) const { return err_[m * K_ + k]; }
  /// Covariance of the estimate itself, p_k tau_p R Psi^{-1} R.
  [[nodiscard]] const ComplexMatrix& hat_cov(std::size_t m, std::size_t k) const { return hat_[m * K_ + k]; }

 private:
  std::size_t M_, K_, N_, tau_p_;
  PilotAssignment pilots_;
  std::vector<double> powers_;
  double noise_;
  bool diagonal_;
  std::vector<ComplexMatrix> psi_, err_, hat_, gain_;
  std::vector<double> gain_scalar_;
};

ChannelEstimate mmse_estimate(const CovarianceSet& cov, const PilotAssignment& pilots,
                              const ChannelRealization& channels, const std::vector<double>& ue_powers,
                              double noise_power, numeric::RngStream& rng);

}  // namespace cfmimo::phy
