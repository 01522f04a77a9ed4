// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/phy/se.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "cfmimo/phy/estimation.hpp"

namespace cfmimo::phy {

namespace {

struct Moments {
  std::vector<Eigen::VectorXd> a1, a2;
  std::vector<Eigen::MatrixXd> b1, b2;
  std::size_t draws = 0;
  std::size_t guards = 0;

  Moments(std::size_t M, std::size_t K)
      : a1(K, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(M))),
        a2(K, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(M))),
        b1(K * K, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M))),
        b2(K * K, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M))) {}

  void merge(const Moments& o) {
    for (std::size_t i = 0; i < a1.size(); ++i) {
      a1[i] += o.a1[i];
      a2[i] += o.a2[i];
    }
    for (std::size_t i = 0; i < b1.size(); ++i) {
      b1[i] += o.b1[i];
      b2[i] += o.b2[i];
    }
    draws += o.draws;
    guards += o.guards;
  }
};

void run_chunk(const ChannelSampler& sampler, const MmseEstimator& est, const SeStatisticsOptions& opts,
               const std::vector<double>& ue_powers, double noise_power, std::size_t M, std::size_t K,
               std::size_t draws, numeric::RngStream rng, Moments& out) {
  ChannelRealization h;
  std::vector<ComplexVector> h_hat, w;
  // g[(k * K + i) * M + m] = h_mk^H w_mi
  std::vector<numeric::cplx> g(K * K * M);
  for (std::size_t d = 0; d < draws; ++d) {
    sampler.sample_into(rng, h);
    est.estimate_into(h, rng, h_hat);
    if (opts.precoder == PrecoderKind::kMr)
      out.guards += mr_into(h_hat, w);
    else
      out.guards += rzf_into(h_hat, M, K, ue_powers, noise_power, w);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t i = 0; i < K; ++i)
        for (std::size_t m = 0; m < M; ++m) g[(k * K + i) * M + m] = h.at(m, k).dot(w[m * K + i]);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t m = 0; m < M; ++m) {
        const double v = g[(k * K + k) * M + m].real();
        out.a1[k](static_cast<Eigen::Index>(m)) += v;
        out.a2[k](static_cast<Eigen::Index>(m)) += v * v;
      }
      for (std::size_t i = 0; i < K; ++i) {
        const numeric::cplx* gk = &g[(k * K + i) * M];
        double* b1 = out.b1[k * K + i].data();
        double* b2 = out.b2[k * K + i].data();
        // Re(g_m conj(g_m')) = Re(h_mk^H w_mi w_m'i^H h_m'k); column-major storage.
        for (std::size_t c = 0; c < M; ++c)
          for (std::size_t r = 0; r < M; ++r) {
            const double v = gk[r].real() * gk[c].real() + gk[r].imag() * gk[c].imag();
            b1[c * M + r] += v;
            b2[c * M + r] += v * v;
          }
      }
    }
  }
  out.draws += draws;
}

}  // namespace

SeStatistics estimate_se_statistics(const CovarianceSet& cov, const PilotAssignment& pilots,
                                    const std::vector<double>& ue_powers, double noise_power,
                                    const SeStatisticsOptions& opts, numeric::RngStream& rng) {
  if (opts.draws < 2) throw std::invalid_argument("estimate_se_statistics: need at least two draws");
  const std::size_t M = cov.M, K = cov.K;
  const ChannelSampler sampler(cov);
  const MmseEstimator est(cov, pilots, ue_powers, noise_power);
  const std::uint64_t salt = rng();
  const std::size_t chunk = std::max<std::size_t>(opts.chunk, 1);
  const std::size_t chunks = (opts.draws + chunk - 1) / chunk;

  std::vector<Moments> parts(chunks, Moments(M, K));
  auto work = [&](std::size_t c) {
    const std::size_t n = std::min(chunk, opts.draws - c * chunk);
    run_chunk(sampler, est, opts, ue_powers, noise_power, M, K, n,
              numeric::RngStream(rng.seed(), numeric::mix64(salt + c)), parts[c]);
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(opts.threads, chunks));
  if (threads == 1) {
    for (std::size_t c = 0; c < chunks; ++c) work(c);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t c = t; c < chunks; c += threads) work(c);
      });
    for (auto& th : pool) th.join();
  }
  Moments total(M, K);
  for (const auto& p : parts) total.merge(p);

  SeStatistics s;
  s.M = M;
  s.K = K;
  s.mc_draws = total.draws;
  s.zero_guards = total.guards;
  const double n = static_cast<double>(total.draws);
  auto stderr_of = [n](double m1, double m2) {
    const double mean = m1 / n;
    const double var = std::max(0.0, m2 / n - mean * mean) * n / (n - 1.0);
    return std::sqrt(var / n);
  };
  for (std::size_t k = 0; k < K; ++k) {
    s.a.push_back(total.a1[k] / n);
    Eigen::VectorXd se(static_cast<Eigen::Index>(M));
    for (Eigen::Index m = 0; m < se.size(); ++m) se(m) = stderr_of(total.a1[k](m), total.a2[k](m));
    s.a_stderr.push_back(se);
  }
  for (std::size_t j = 0; j < K * K; ++j) {
    s.b.push_back(total.b1[j] / n);
    Eigen::MatrixXd se(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
    for (Eigen::Index r = 0; r < se.rows(); ++r)
      for (Eigen::Index c = 0; c < se.cols(); ++c) se(r, c) = stderr_of(total.b1[j](r, c), total.b2[j](r, c));
    s.b_stderr.push_back(se);
  }
  return s;
}

SinrResult compute_sinr(const SeStatistics& stats, const std::vector<Eigen::VectorXd>& mu, double noise_power) {
  const std::size_t K = stats.K;
  if (mu.size() != K) throw std::invalid_argument("compute_sinr: need one power vector per UE");
  for (const auto& v : mu) {
    if (static_cast<std::size_t>(v.size()) != stats.M) throw std::invalid_argument("compute_sinr: bad vector length");
    for (Eigen::Index m = 0; m < v.size(); ++m)
      if (!(v(m) >= 0.0)) throw std::invalid_argument("compute_sinr: power amplitudes must be nonnegative");
  }
  SinrResult r;
  r.sinr.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double sig = stats.a[k].dot(mu[k]);
    const double num = sig * sig;
    double interf = 0.0;
    for (std::size_t i = 0; i < K; ++i) interf += mu[i].dot(stats.B(k, i) * mu[i]);
    double den = interf - num + noise_power;
    if (den < 0.5 * noise_power) {
      den = 0.5 * noise_power;
      r.guard_triggered = true;
    }
    r.sinr[k] = num / den;
  }
  return r;
}

double compute_se(double sinr, std::size_t tau_p, std::size_t tau_c) {
  if (tau_p > tau_c) throw std::invalid_argument("compute_se: tau_p exceeds tau_c");
  if (sinr < 0.0) throw std::invalid_argument("compute_se: negative SINR");
  return (1.0 - static_cast<double>(tau_p) / static_cast<double>(tau_c)) * std::log2(1.0 + sinr);
}

}  // namespace cfmimo::phy
