// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>

namespace cfmimo::numeric {

/// Counter-based random stream. Draw number i of a stream depends only on
/// (seed, stream id, i), so two streams built from the same pair replay the
/// same sequence bit for bit. Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n);
  double normal();
  /// Circularly symmetric CN(0, 1): real and imaginary parts have variance 1/2.
  std::complex<double> complex_normal();
  double gumbel();

  /// Independent stream sharing this seed; used to hand work to parallel tasks.
  [[nodiscard]] RngStream child(std::uint64_t stream_id) const;

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream() const { return stream_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::uint64_t key_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace cfmimo::numeric
