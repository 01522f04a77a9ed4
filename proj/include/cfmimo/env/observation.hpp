// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "cfmimo/env/config.hpp"
#include "cfmimo/numeric/tensor.hpp"
#include "cfmimo/phy/covariance.hpp"
#include "cfmimo/phy/estimation.hpp"
#include "cfmimo/phy/geometry.hpp"

namespace cfmimo::env {

/// Local view of one AP, split into two entity axes.
///
/// UE rows (K x (2N + 5)): the normalized estimate h_hat / sqrt(beta) as
/// interleaved real/imaginary parts, the gain (10 log10 beta + 100) / 30, the
/// shortest displacement to the UE divided by the side length, and the AP's own
/// position mapped to [-1, 1].
///
/// Antenna rows (N x 3): mean, max and min over UEs of |h_hat_kn|^2 / beta_k.
/// These are symmetric in the UEs, so reordering UEs leaves them unchanged.
struct Observation {
  numeric::RealTensor ue_rows;
  numeric::RealTensor antenna_rows;

  [[nodiscard]] static constexpr std::size_t ue_features(std::size_t N) { return 2 * N + 5; }
  static constexpr std::size_t kAntennaFeatures = 3;

  /// UE rows, then antenna rows, row-major.
  [[nodiscard]] std::vector<double> flat() const;
  [[nodiscard]] std::size_t flat_size() const { return ue_rows.size() + antenna_rows.size(); }
};

/// Features inside one row only depend on that entity, so permuting UEs permutes rows.
Observation build_observation(std::size_t m, const phy::NetworkGeometry& geom, const phy::CovarianceSet& cov,
                              const phy::ChannelEstimate& est);
std::vector<Observation> build_observations(const phy::NetworkGeometry& geom, const phy::CovarianceSet& cov,
                                            const phy::ChannelEstimate& est);

/// Gain feature used in UE rows.
double gain_feature(double beta);

}  // namespace cfmimo::env
