// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "cfmimo/numeric/complex_linalg.hpp"
#include "cfmimo/phy/geometry.hpp"
#include "cfmimo/phy/pathloss.hpp"

namespace cfmimo::phy {

using numeric::ComplexMatrix;
using numeric::ComplexVector;

enum class CovarianceModel { kUncorrelated, kLocalScattering };

struct CovarianceConfig {
  CovarianceModel model = CovarianceModel::kUncorrelated;
  /// Total width of the uniform angular spread around the nominal direction.
  double angular_spread_deg = 20.0;
  /// Antenna spacing of the uniform linear array, in wavelengths.
  double antenna_spacing = 0.5;
  /// Quadrature points for the angular integral.
  std::size_t quadrature = 256;
};

/// Per-(AP, UE) spatial covariances, stored AP-major: index m * K + k.
struct CovarianceSet {
  std::size_t M = 0, K = 0, N = 0;
  std::vector<ComplexMatrix> r;
  std::vector<double> beta;

  [[nodiscard]] const ComplexMatrix& R(std::size_t m, std::size_t k) const { return r[m * K + k]; }
  [[nodiscard]] double b(std::size_t m, std::size_t k) const { return beta[m * K + k]; }
  [[nodiscard]] bool uncorrelated() const { return diagonal; }
  bool diagonal = true;
};

/// Local-scattering covariance of an N-element ULA with unit average gain per
/// antenna (trace N), for nominal angle theta (radians).
ComplexMatrix local_scattering(std::size_t n, double theta, const CovarianceConfig& cfg);

CovarianceSet build_covariance(const NetworkGeometry& geom, std::size_t antennas, const PathlossConfig& pl,
                               const CovarianceConfig& cov);

/// Large-scale gains only (M x K, AP-major); cheaper than build_covariance.
std::vector<double> large_scale_gains(const NetworkGeometry& geom, const PathlossConfig& pl);

}  // namespace cfmimo::phy
