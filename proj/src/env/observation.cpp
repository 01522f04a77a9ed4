// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/env/observation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfmimo::env {

double gain_feature(double beta) {
  const double db = 10.0 * std::log10(std::max(beta, 1e-30));
  return (db + 100.0) / 30.0;
}

std::vector<double> Observation::flat() const {
  std::vector<double> out(ue_rows.values());
  out.insert(out.end(), antenna_rows.values().begin(), antenna_rows.values().end());
  return out;
}

Observation build_observation(std::size_t m, const phy::NetworkGeometry& geom, const phy::CovarianceSet& cov,
                              const phy::ChannelEstimate& est) {
  const std::size_t K = cov.K, N = cov.N;
  Observation o;
  o.ue_rows = numeric::RealTensor(K, Observation::ue_features(N));
  o.antenna_rows = numeric::RealTensor(N, Observation::kAntennaFeatures);
  const phy::Point self = geom.aps.at(m);
  const double side = geom.side();
  const double own_x = 2.0 * (self.x - geom.area_min) / side - 1.0;
  const double own_y = 2.0 * (self.y - geom.area_min) / side - 1.0;

  std::vector<std::vector<double>> energy(N, std::vector<double>(K));
  for (std::size_t k = 0; k < K; ++k) {
    const double beta = cov.b(m, k);
    const double scale = beta > 0.0 ? 1.0 / std::sqrt(beta) : 0.0;
    const auto& h = est.at(m, k);
    auto row = o.ue_rows.row_span(k);
    for (std::size_t n = 0; n < N; ++n) {
      row[2 * n] = h(n).real() * scale;
      row[2 * n + 1] = h(n).imag() * scale;
      energy[n][k] = std::norm(h(n)) * scale * scale;
    }
    const phy::Point d = phy::displacement(self, geom.ues[k], side, geom.wraparound);
    row[2 * N] = gain_feature(beta);
    row[2 * N + 1] = d.x / side;
    row[2 * N + 2] = d.y / side;
    row[2 * N + 3] = own_x;
    row[2 * N + 4] = own_y;
  }
  for (std::size_t n = 0; n < N; ++n) {
    // Sorting first makes the mean independent of UE order down to the last bit.
    auto& e = energy[n];
    std::sort(e.begin(), e.end());
    double s = 0.0;
    for (double v : e) s += v;
    o.antenna_rows(n, 0) = s / static_cast<double>(K);
    o.antenna_rows(n, 1) = e.back();
    o.antenna_rows(n, 2) = e.front();
  }
  return o;
}

std::vector<Observation> build_observations(const phy::NetworkGeometry& geom, const phy::CovarianceSet& cov,
                                            const phy::ChannelEstimate& est) {
  std::vector<Observation> out;
  out.reserve(geom.num_aps());
  for (std::size_t m = 0; m < geom.num_aps(); ++m) out.push_back(build_observation(m, geom, cov, est));
  return out;
}

}  // namespace cfmimo::env
