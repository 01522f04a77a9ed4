// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "cfmimo/phy/estimation.hpp"

namespace cfmimo::phy {

enum class PrecoderKind { kMr, kRzf };

/// Unit-norm precoders w_mk, AP-major. An all-zero estimate cannot define a
/// direction; those entries get e_1 and are counted in zero_guards.
struct Precoders {
  std::size_t M = 0, K = 0, N = 0;
  std::vector<ComplexVector> w;
  std::size_t zero_guards = 0;
  [[nodiscard]] const ComplexVector& at(std::size_t m, std::size_t k) const { return w[m * K + k]; }
};

/// Raw-vector entry points used inside Monte-Carlo loops.
std::size_t mr_into(const std::vector<ComplexVector>& h_hat, std::vector<ComplexVector>& w);
std::size_t rzf_into(const std::vector<ComplexVector>& h_hat, std::size_t M, std::size_t K,
                     const std::vector<double>& ue_powers, double noise_power, std::vector<ComplexVector>& w);

Precoders precode_mr(const ChannelEstimate& est);
Precoders precode_rzf(const ChannelEstimate& est, const std::vector<double>& ue_powers, double noise_power);

}  // namespace cfmimo::phy
