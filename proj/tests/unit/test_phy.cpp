// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>

#include "cfmimo/phy/covariance.hpp"
#include "cfmimo/phy/estimation.hpp"
#include "cfmimo/phy/geometry.hpp"
#include "cfmimo/phy/pathloss.hpp"
#include "cfmimo/phy/pilots.hpp"
#include "cfmimo/phy/precoding.hpp"
#include "cfmimo/phy/se.hpp"
#include "doctest.h"

using namespace cfmimo;
using namespace cfmimo::phy;
using numeric::cplx;
using numeric::RngStream;

namespace {

CovarianceSet diag_cov(std::size_t M, std::size_t K, std::size_t N, const std::vector<double>& beta) {
  CovarianceSet c;
  c.M = M;
  c.K = K;
  c.N = N;
  c.beta = beta;
  c.diagonal = true;
  for (double b : beta) c.r.push_back(b * ComplexMatrix::Identity(N, N));
  return c;
}

ComplexMatrix sample_cov(const std::vector<ComplexVector>& xs) {
  ComplexMatrix acc = ComplexMatrix::Zero(xs[0].size(), xs[0].size());
  for (const auto& x : xs) acc += x * x.adjoint();
  return acc / static_cast<double>(xs.size());
}

}  // namespace

TEST_CASE("pathloss: default profile, clamp and monotonicity") {
  PathlossConfig def;
  CHECK(pathloss_db(1000.0, def) == doctest::Approx(140.7));
  CHECK(pathloss(1000.0, def) == doctest::Approx(std::pow(10.0, -14.07)).epsilon(1e-12));
  CHECK(pathloss(0.5, def) == pathloss(1.0, def));
  PathlossConfig wi;
  wi.model = PathlossModel::kCost231WalfischIkegami;
  PathlossConfig low_bs = wi;
  low_bs.bs_height_m = 8.0;
  for (const auto* cfg : {&def, &wi, &low_bs}) {
    CHECK(pathloss(100.0, *cfg) >= pathloss(200.0, *cfg));
    double prev = pathloss(1.0, *cfg);
    for (double d = 2.0; d < 3000.0; d *= 1.1) {
      const double cur = pathloss(d, *cfg);
      CHECK(cur <= prev);
      prev = cur;
    }
  }
}

TEST_CASE("distance: Euclidean, torus and coincident cases") {
  NetworkGeometry g;
  g.area_min = 0.0;
  g.area_max = 1000.0;
  g.wraparound = false;
  g.aps = {{0, 0}};
  g.ues = {{3, 4}};
  CHECK(distance(g, 0, 0) == 5.0);
  g.wraparound = true;
  g.aps = {{10, 0}};
  g.ues = {{990, 0}};
  CHECK(distance(g, 0, 0) == doctest::Approx(20.0));
  g.ues = {{10, 0}};
  CHECK(distance(g, 0, 0) == 0.0);
  RngStream rng(1);
  for (int i = 0; i < 500; ++i) {
    Point a{rng.uniform(0, 1000), rng.uniform(0, 1000)}, b{rng.uniform(0, 1000), rng.uniform(0, 1000)};
    CHECK(planar_distance(a, b, 1000.0, true) <= planar_distance(a, b, 1000.0, false));
  }
}

TEST_CASE("covariance: definition, trace normalization and local scattering PSD") {
  NetworkGeometry g;
  g.aps = {{100, 100}, {500, 800}};
  g.ues = {{120, 130}, {900, 50}, {400, 400}};
  PathlossConfig pl;
  for (auto model : {CovarianceModel::kUncorrelated, CovarianceModel::kLocalScattering}) {
    CovarianceConfig cc;
    cc.model = model;
    auto set = build_covariance(g, 8, pl, cc);
    for (std::size_t m = 0; m < 2; ++m)
      for (std::size_t k = 0; k < 3; ++k) {
        const double beta = set.b(m, k);
        CHECK(beta == pathloss(distance(g, m, k), pl));
        CHECK(std::abs(set.R(m, k).trace().real() / 8.0 - beta) <= 1e-9 * beta);
        CHECK(numeric::is_hermitian(set.R(m, k)));
        if (model == CovarianceModel::kUncorrelated) {
          CHECK((set.R(m, k) - beta * ComplexMatrix::Identity(8, 8)).norm() == 0.0);
        } else {
          ComplexMatrix off = set.R(m, k);
          off.diagonal().setZero();
          CHECK(off.norm() > 0.0);
          Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(set.R(m, k));
          CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * set.R(m, k).trace().real());
        }
      }
  }
  // Hand example: beta = 0.01, N = 2.
  auto c = diag_cov(1, 1, 2, {0.01});
  CHECK((c.R(0, 0) - 0.01 * ComplexMatrix::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("beta never decreases when an AP moves toward a UE") {
  PathlossConfig pl;
  NetworkGeometry g;
  g.ues = {{500, 500}};
  for (double x = 0.0; x < 500.0; x += 25.0) {
    g.aps = {{x, 500}};
    const double before = large_scale_gains(g, pl)[0];
    g.aps = {{x + 10.0, 500}};
    CHECK(large_scale_gains(g, pl)[0] >= before);
  }
}

TEST_CASE("pilot assignment: round robin and cosets") {
  auto p = assign_pilots(6, 6);
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(p.t[k] == k);
    CHECK(p.coset[k] == std::vector<std::size_t>{k});
  }
  auto q = assign_pilots(4, 2);
  CHECK(q.t == std::vector<std::size_t>{0, 1, 0, 1});
  CHECK(q.coset[0] == std::vector<std::size_t>{0, 2});
  for (std::size_t k = 0; k < 4; ++k)
    CHECK(std::find(q.coset[k].begin(), q.coset[k].end(), k) != q.coset[k].end());
}

TEST_CASE("channel sampling: zero gain, per-entry variance and cross-correlation") {
  RngStream rng(2);
  auto zero = diag_cov(1, 1, 3, {0.0});
  CHECK(sample_channels(zero, rng).at(0, 0).norm() == 0.0);

  auto cov = diag_cov(1, 2, 2, {2.0, 0.5});
  ChannelSampler s(cov);
  const int draws = 100000;
  double v0 = 0.0, v1 = 0.0;
  cplx cross = 0.0;
  for (int i = 0; i < draws; ++i) {
    auto h = s.sample(rng);
    v0 += std::norm(h.at(0, 0)(0));
    v1 += std::norm(h.at(0, 1)(1));
    cross += h.at(0, 0)(0) * std::conj(h.at(0, 1)(0));
  }
  v0 /= draws;
  v1 /= draws;
  CHECK(std::abs(v0 / 2.0 - 1.0) < 0.05);
  CHECK(std::abs(v1 / 0.5 - 1.0) < 0.05);
  CHECK(std::abs(cross / static_cast<double>(draws)) / std::sqrt(2.0 * 0.5) < 0.02);
}

TEST_CASE("MMSE estimate approaches the channel in the noise-free limit") {
  RngStream rng(3);
  auto cov = diag_cov(2, 3, 4, {1.0, 0.5, 2.0, 0.8, 1.5, 0.3});
  auto pilots = assign_pilots(3, 3);
  std::vector<double> p(3, 1.0);
  for (int t = 0; t < 20; ++t) {
    auto h = sample_channels(cov, rng);
    auto e = mmse_estimate(cov, pilots, h, p, 1e-12, rng);
    for (std::size_t i = 0; i < h.h.size(); ++i) CHECK((e.h_hat[i] - h.h[i]).norm() / h.h[i].norm() < 1e-4);
  }
}

TEST_CASE("MMSE error covariances are Hermitian PSD and Psi dominates the noise") {
  NetworkGeometry g;
  g.aps = {{100, 100}, {700, 300}};
  g.ues = {{150, 130}, {900, 50}, {420, 480}, {610, 700}};
  CovarianceConfig cc;
  cc.model = CovarianceModel::kLocalScattering;
  auto cov = build_covariance(g, 4, PathlossConfig{}, cc);
  auto pilots = assign_pilots(4, 2);
  const double noise = 3.98e-13;
  MmseEstimator est(cov, pilots, std::vector<double>(4, 0.1), noise);
  for (std::size_t m = 0; m < 2; ++m) {
    for (std::size_t t = 0; t < 2; ++t) {
      ComplexMatrix d = est.psi(m, t) - noise * ComplexMatrix::Identity(4, 4);
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(d);
      CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * std::abs(d.trace().real()));
    }
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& c = est.err_cov(m, k);
      CHECK(numeric::is_hermitian(c, 1e-9));
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(c);
      CHECK(eig.eigenvalues().minCoeff() >= -1e-9 * c.trace().real());
    }
  }
}

TEST_CASE("error covariance formula matches Monte Carlo and estimates are orthogonal to errors") {
  RngStream rng(4);
  // Scaled so that p_k tau_p = 1: there the literal sqrt(p tau) form and the
  // p tau form of the error covariance coincide, and both are checked.
  NetworkGeometry g;
  g.aps = {{300, 300}};
  g.ues = {{340, 330}, {600, 900}};
  CovarianceConfig cc;
  cc.model = CovarianceModel::kLocalScattering;
  auto cov = build_covariance(g, 4, PathlossConfig{}, cc);
  auto pilots = assign_pilots(2, 1);
  const double noise = 3.98e-13;
  std::vector<double> p = {1.0, 1.0};
  MmseEstimator est(cov, pilots, p, noise);
  ChannelSampler s(cov);
  const int draws = 100000;
  std::vector<ComplexVector> err;
  err.reserve(draws);
  cplx orth = 0.0;
  std::vector<ComplexVector> hh;
  auto h = s.sample(rng);
  for (int i = 0; i < draws; ++i) {
    s.sample_into(rng, h);
    est.estimate_into(h, rng, hh);
    err.push_back(h.at(0, 0) - hh[0]);
    orth += hh[0].dot(err.back());
  }
  const ComplexMatrix c_mc = sample_cov(err);
  const ComplexMatrix& R = cov.R(0, 0);
  const ComplexMatrix literal = R - 1.0 * R * numeric::hermitian_solve(est.psi(0, 0), R);
  CHECK((c_mc - est.err_cov(0, 0)).norm() / est.err_cov(0, 0).norm() < 0.05);
  CHECK((literal - est.err_cov(0, 0)).norm() <= 1e-9 * R.norm());
  CHECK(std::abs(orth / static_cast<double>(draws)) < 0.01 * 4 * cov.b(0, 0));
}

TEST_CASE("pilot sharing increases the total estimation error") {
  NetworkGeometry g;
  g.aps = {{100, 100}, {500, 500}, {800, 200}};
  g.ues = {{130, 150}, {520, 470}, {760, 260}, {300, 800}};
  auto cov = build_covariance(g, 4, PathlossConfig{}, CovarianceConfig{});
  std::vector<double> p(4, 0.1);
  auto trace_sum = [&](const PilotAssignment& pa) {
    MmseEstimator est(cov, pa, p, 3.98e-13);
    double t = 0.0;
    for (std::size_t m = 0; m < 3; ++m)
      for (std::size_t k = 0; k < 4; ++k) t += est.err_cov(m, k).trace().real();
    return t;
  };
  CHECK(trace_sum(assign_pilots(4, 2)) > trace_sum(assign_pilots(4, 4)));
}

TEST_CASE("MMSE never inflates channel energy") {
  RngStream rng(5);
  auto cov = diag_cov(1, 2, 3, {1e-11, 4e-12});
  auto pilots = assign_pilots(2, 1);
  MmseEstimator est(cov, pilots, {0.1, 0.1}, 3.98e-13);
  ChannelSampler s(cov);
  const int draws = 20000;
  double tr = 0.0, tr2 = 0.0;
  ChannelRealization h;
  std::vector<ComplexVector> hh;
  for (int i = 0; i < draws; ++i) {
    s.sample_into(rng, h);
    est.estimate_into(h, rng, hh);
    const double e = hh[0].squaredNorm();
    tr += e;
    tr2 += e * e;
  }
  const double mean = tr / draws;
  const double se = std::sqrt((tr2 / draws - mean * mean) / draws);
  CHECK(mean <= cov.R(0, 0).trace().real() + 3 * se);
}

TEST_CASE("MR precoders: normalization and alignment") {
  ChannelEstimate e;
  e.M = 1;
  e.K = 2;
  e.N = 2;
  ComplexVector a(2), b(2);
  a << cplx(3, 0), cplx(0, 4);
  b << cplx(2.5, 0), cplx(0, 0);
  e.h_hat = {a, b};
  auto w = precode_mr(e);
  CHECK(std::abs(w.at(0, 0).norm() - 1.0) < 1e-12);
  CHECK((w.at(0, 1) - ComplexVector::Unit(2, 0)).norm() < 1e-15);
  const cplx ip = w.at(0, 0).dot(a);
  CHECK(std::abs(ip.imag()) < 1e-12);
  CHECK(ip.real() == doctest::Approx(a.norm()).epsilon(1e-12));
  e.h_hat[1].setZero();
  CHECK(precode_mr(e).zero_guards == 1);
}

TEST_CASE("RZF reduces to MR in the single-UE, heavy-regularization and orthogonal cases") {
  RngStream rng(6);
  auto cosine = [](const ComplexVector& x, const ComplexVector& y) { return std::abs(x.dot(y)) / (x.norm() * y.norm()); };
  ChannelEstimate e;
  e.M = 1;
  e.K = 1;
  e.N = 4;
  ComplexVector h(4);
  for (int i = 0; i < 4; ++i) h(i) = rng.complex_normal();
  e.h_hat = {h};
  CHECK(cosine(precode_rzf(e, {0.7}, 0.1).at(0, 0), precode_mr(e).at(0, 0)) > 1 - 1e-9);

  e.K = 3;
  e.h_hat.clear();
  for (int k = 0; k < 3; ++k) {
    ComplexVector v(4);
    for (int i = 0; i < 4; ++i) v(i) = rng.complex_normal();
    e.h_hat.push_back(v);
  }
  double energy = 0.0;
  for (auto& v : e.h_hat) energy = std::max(energy, v.squaredNorm());
  auto rz = precode_rzf(e, {1.0, 1.0, 1.0}, 1e6 * energy);
  auto mr = precode_mr(e);
  for (std::size_t k = 0; k < 3; ++k) CHECK(cosine(rz.at(0, k), mr.at(0, k)) > 0.999);

  e.K = 2;
  ComplexVector u(4), v(4);
  u << 1, cplx(0, 1), 0, 0;
  v << 0, 0, cplx(2, 1), -1;
  e.h_hat = {u, v};
  auto rz2 = precode_rzf(e, {0.5, 2.0}, 0.3);
  auto mr2 = precode_mr(e);
  for (std::size_t k = 0; k < 2; ++k) CHECK(cosine(rz2.at(0, k), mr2.at(0, k)) > 1 - 1e-9);
}

TEST_CASE("scalar channel matches the analytic hardening statistics") {
  RngStream rng(7);
  const double beta = 1e-11, p = 0.1, noise = 3.98e-13;
  auto cov = diag_cov(1, 1, 1, {beta});
  SeStatisticsOptions o;
  o.draws = 100000;
  auto st = estimate_se_statistics(cov, assign_pilots(1, 1), {p}, noise, o, rng);
  // With N = 1, w = y / |y| and h = c y + independent error, so
  // a = sqrt(p) beta E|y| / (p beta + s2) with E|y| = sqrt(pi (p beta + s2)) / 2, and B = beta.
  const double a_exact = std::sqrt(std::numbers::pi * p) * beta / (2.0 * std::sqrt(p * beta + noise));
  CHECK(std::abs(st.a[0](0) - a_exact) <= 3.0 * st.a_stderr[0](0));
  CHECK(std::abs(st.B(0, 0)(0, 0) - beta) <= 3.0 * st.b_stderr[0](0, 0));
}

TEST_CASE("SE statistics: variance bound, symmetry and seed agreement") {
  NetworkGeometry g;
  g.aps = {{200, 200}, {700, 600}};
  g.ues = {{250, 260}, {650, 580}};
  auto cov = build_covariance(g, 2, PathlossConfig{}, CovarianceConfig{});
  auto pilots = assign_pilots(2, 2);
  SeStatisticsOptions o;
  o.draws = 20000;
  RngStream r1(100), r2(200);
  auto s1 = estimate_se_statistics(cov, pilots, {0.1, 0.1}, 3.98e-13, o, r1);
  auto s2 = estimate_se_statistics(cov, pilots, {0.1, 0.1}, 3.98e-13, o, r2);
  for (std::size_t k = 0; k < 2; ++k) {
    for (Eigen::Index m = 0; m < 2; ++m) {
      CHECK(s1.B(k, k)(m, m) >= s1.a[k](m) * s1.a[k](m) - 3 * s1.b_stderr[k * 2 + k](m, m));
      const double comb = std::hypot(s1.a_stderr[k](m), s2.a_stderr[k](m));
      CHECK(std::abs(s1.a[k](m) - s2.a[k](m)) <= 3 * comb);
    }
    for (std::size_t i = 0; i < 2; ++i) {
      const auto& b = s1.B(k, i);
      CHECK((b - b.transpose()).norm() <= 1e-12 * b.norm());
      for (Eigen::Index r = 0; r < 2; ++r)
        for (Eigen::Index c = 0; c < 2; ++c) {
          const double comb = std::hypot(s1.b_stderr[k * 2 + i](r, c), s2.b_stderr[k * 2 + i](r, c));
          CHECK(std::abs(b(r, c) - s2.B(k, i)(r, c)) <= 3 * comb);
        }
    }
  }
}

TEST_CASE("SE statistics do not depend on the thread count") {
  NetworkGeometry g;
  g.aps = {{200, 200}, {700, 600}, {100, 900}};
  g.ues = {{250, 260}, {650, 580}};
  auto cov = build_covariance(g, 2, PathlossConfig{}, CovarianceConfig{});
  SeStatisticsOptions o;
  o.draws = 3000;
  o.chunk = 400;
  RngStream a(9), b(9);
  auto s1 = estimate_se_statistics(cov, assign_pilots(2, 2), {0.1, 0.1}, 3.98e-13, o, a);
  o.threads = 3;
  auto s2 = estimate_se_statistics(cov, assign_pilots(2, 2), {0.1, 0.1}, 3.98e-13, o, b);
  for (std::size_t k = 0; k < 2; ++k) CHECK(s1.a[k] == s2.a[k]);
  for (std::size_t j = 0; j < 4; ++j) CHECK(s1.b[j] == s2.b[j]);
}

TEST_CASE("SINR and SE arithmetic") {
  SeStatistics st;
  st.M = 1;
  st.K = 1;
  const double alpha = 0.8, bb = 1.0, rho = 2.0, s2 = 0.5;
  st.a = {Eigen::VectorXd::Constant(1, alpha)};
  st.b = {Eigen::MatrixXd::Constant(1, 1, bb)};
  auto r = compute_sinr(st, {Eigen::VectorXd::Constant(1, std::sqrt(rho))}, s2);
  CHECK(r.sinr[0] == doctest::Approx(rho * alpha * alpha / (rho * (bb - alpha * alpha) + s2)));
  CHECK(compute_sinr(st, {Eigen::VectorXd::Zero(1)}, s2).sinr[0] == 0.0);
  CHECK_THROWS(compute_sinr(st, {Eigen::VectorXd::Constant(1, -1.0)}, s2));

  // Diagonal B, zero cross terms: SINR is non-decreasing in a common power scale.
  SeStatistics d;
  d.M = 2;
  d.K = 2;
  d.a = {Eigen::Vector2d(0.5, 0.2), Eigen::Vector2d(0.1, 0.7)};
  d.b = {Eigen::Vector2d(0.4, 0.1).asDiagonal(), Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2),
         Eigen::Vector2d(0.05, 0.6).asDiagonal()};
  std::vector<double> prev = {0.0, 0.0};
  for (double c = 0.1; c < 10.0; c *= 1.5) {
    auto s = compute_sinr(d, {std::sqrt(c) * Eigen::Vector2d(1, 1), std::sqrt(c) * Eigen::Vector2d(1, 1)}, 0.01);
    for (int k = 0; k < 2; ++k) {
      CHECK(s.sinr[k] >= prev[k]);
      prev[k] = s.sinr[k];
    }
  }
  CHECK(compute_se(0.0, 6, 200) == 0.0);
  CHECK(compute_se(3.0, 50, 200) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(compute_se(50.0, 200, 200) == 0.0);
}

TEST_CASE("denominator guard is flagged") {
  SeStatistics st;
  st.M = 1;
  st.K = 1;
  st.a = {Eigen::VectorXd::Constant(1, 1.0)};
  st.b = {Eigen::MatrixXd::Constant(1, 1, 0.5)};  // B < a^2: only possible through Monte-Carlo noise
  auto r = compute_sinr(st, {Eigen::VectorXd::Constant(1, 1.0)}, 0.1);
  CHECK(r.guard_triggered);
  CHECK(r.sinr[0] == doctest::Approx(1.0 / 0.05));
}
