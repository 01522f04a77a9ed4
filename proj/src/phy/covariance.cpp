// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/phy/covariance.hpp"

#include <cmath>
#include <numbers>

namespace cfmimo::phy {

ComplexMatrix local_scattering(std::size_t n, double theta, const CovarianceConfig& cfg) {
  const double half = 0.5 * cfg.angular_spread_deg * std::numbers::pi / 180.0;
  const std::size_t q = std::max<std::size_t>(cfg.quadrature, 1);
  ComplexMatrix r = ComplexMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  // Toeplitz: entry (l, m) depends on l - m only.
  std::vector<numeric::cplx> col(n);
  for (std::size_t d = 0; d < n; ++d) {
    numeric::cplx acc = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
      const double phi = theta - half + (2.0 * half) * (static_cast<double>(i) + 0.5) / static_cast<double>(q);
      const double arg = 2.0 * std::numbers::pi * cfg.antenna_spacing * static_cast<double>(d) * std::sin(phi);
      acc += std::polar(1.0, arg);
    }
    col[d] = acc / static_cast<double>(q);
  }
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t m = 0; m < n; ++m)
      r(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(m)) = l >= m ? col[l - m] : std::conj(col[m - l]);
  return r;
}

std::vector<double> large_scale_gains(const NetworkGeometry& geom, const PathlossConfig& pl) {
  const std::size_t M = geom.num_aps(), K = geom.num_ues();
  std::vector<double> beta(M * K);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t k = 0; k < K; ++k) beta[m * K + k] = pathloss(distance(geom, m, k), pl);
  return beta;
}

CovarianceSet build_covariance(const NetworkGeometry& geom, std::size_t antennas, const PathlossConfig& pl,
                               const CovarianceConfig& cov) {
  CovarianceSet set;
  set.M = geom.num_aps();
  set.K = geom.num_ues();
  set.N = antennas;
  set.beta = large_scale_gains(geom, pl);
  set.diagonal = cov.model == CovarianceModel::kUncorrelated || antennas == 1;
  set.r.reserve(set.M * set.K);
  const auto n = static_cast<Eigen::Index>(antennas);
  for (std::size_t m = 0; m < set.M; ++m)
    for (std::size_t k = 0; k < set.K; ++k) {
      const double beta = set.beta[m * set.K + k];
      if (set.diagonal) {
        set.r.push_back(beta * ComplexMatrix::Identity(n, n));
        continue;
      }
      const Point d = displacement(geom.aps[m], geom.ues[k], geom.side(), geom.wraparound);
      ComplexMatrix r = local_scattering(antennas, std::atan2(d.y, d.x), cov);
      // The unit diagonal makes the trace N exactly; scale to N * beta.
      set.r.push_back(beta * r);
    }
  return set;
}

}  // namespace cfmimo::phy
