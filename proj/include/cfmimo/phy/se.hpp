// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "cfmimo/numeric/rng.hpp"
#include "cfmimo/phy/covariance.hpp"
#include "cfmimo/phy/pilots.hpp"
#include "cfmimo/phy/precoding.hpp"

namespace cfmimo::phy {

/// Monte-Carlo estimates of the hardening-bound statistics:
///   a_k[m]        = E{ Re(h_mk^H w_mk) }
///   B_ki[m][m']   = E{ Re(h_mk^H w_mi w_m'i^H h_m'k) }
struct SeStatistics {
  std::size_t M = 0, K = 0;
  std::size_t mc_draws = 0;
  std::vector<Eigen::VectorXd> a, a_stderr;  // K entries of length M
  std::vector<Eigen::MatrixXd> b, b_stderr;  // k * K + i, M x M
  std::size_t zero_guards = 0;

  [[nodiscard]] const Eigen::MatrixXd& B(std::size_t k, std::size_t i) const { return b[k * K + i]; }
};

struct SeStatisticsOptions {
  PrecoderKind precoder = PrecoderKind::kMr;
  std::size_t draws = 2000;
  /// Draws per independent chunk; chunk c uses its own child stream.
  std::size_t chunk = 500;
  /// Worker threads; results do not depend on this value.
  std::size_t threads = 1;
};

/// Each call consumes one value from rng to salt its chunk streams.
SeStatistics estimate_se_statistics(const CovarianceSet& cov, const PilotAssignment& pilots,
                                    const std::vector<double>& ue_powers, double noise_power,
                                    const SeStatisticsOptions& opts, numeric::RngStream& rng);

struct SinrResult {
  std::vector<double> sinr;
  /// Set when Monte-Carlo noise drove some denominator below sigma^2 / 2.
  bool guard_triggered = false;
};

/// mu[k][m] = sqrt(rho_mk). Throws on negative entries.
SinrResult compute_sinr(const SeStatistics& stats, const std::vector<Eigen::VectorXd>& mu, double noise_power);

double compute_se(double sinr, std::size_t tau_p, std::size_t tau_c);

}  // namespace cfmimo::phy
