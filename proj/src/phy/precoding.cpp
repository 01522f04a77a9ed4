// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/phy/precoding.hpp"

#include <stdexcept>

namespace cfmimo::phy {

namespace {

bool normalize(ComplexVector& v) {
  const double n = v.norm();
  if (n > 0.0 && std::isfinite(n)) {
    v /= n;
    return false;
  }
  v.setZero();
  if (v.size() > 0) v(0) = 1.0;
  return true;
}

}  // namespace

std::size_t mr_into(const std::vector<ComplexVector>& h_hat, std::vector<ComplexVector>& w) {
  w.resize(h_hat.size());
  std::size_t guards = 0;
  for (std::size_t i = 0; i < h_hat.size(); ++i) {
    w[i] = h_hat[i];
    guards += normalize(w[i]) ? 1 : 0;
  }
  return guards;
}

std::size_t rzf_into(const std::vector<ComplexVector>& h_hat, std::size_t M, std::size_t K,
                     const std::vector<double>& ue_powers, double noise_power, std::vector<ComplexVector>& w) {
  if (!(noise_power > 0.0)) throw std::invalid_argument("rzf: noise power must be positive");
  if (ue_powers.size() != K) throw std::invalid_argument("rzf: need one power per UE");
  w.resize(h_hat.size());
  std::size_t guards = 0;
  for (std::size_t m = 0; m < M; ++m) {
    const auto n = h_hat[m * K].size();
    ComplexMatrix a = noise_power * ComplexMatrix::Identity(n, n);
    for (std::size_t i = 0; i < K; ++i) a.noalias() += ue_powers[i] * h_hat[m * K + i] * h_hat[m * K + i].adjoint();
    ComplexMatrix rhs(n, static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k) rhs.col(static_cast<Eigen::Index>(k)) = ue_powers[k] * h_hat[m * K + k];
    const ComplexMatrix x = numeric::hermitian_solve(a, rhs);
    for (std::size_t k = 0; k < K; ++k) {
      w[m * K + k] = x.col(static_cast<Eigen::Index>(k));
      guards += normalize(w[m * K + k]) ? 1 : 0;
    }
  }
  return guards;
}

Precoders precode_mr(const ChannelEstimate& est) {
  Precoders p{est.M, est.K, est.N, {}, 0};
  p.zero_guards = mr_into(est.h_hat, p.w);
  return p;
}

Precoders precode_rzf(const ChannelEstimate& est, const std::vector<double>& ue_powers, double noise_power) {
  Precoders p{est.M, est.K, est.N, {}, 0};
  p.zero_guards = rzf_into(est.h_hat, est.M, est.K, ue_powers, noise_power, p.w);
  return p;
}

}  // namespace cfmimo::phy
