// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <sstream>

#include "cfmimo/env/actions.hpp"
#include "cfmimo/env/baselines.hpp"
#include "cfmimo/env/environment.hpp"
#include "cfmimo/env/trajectory.hpp"
#include "doctest.h"

using namespace cfmimo;
using namespace cfmimo::env;
using numeric::RngStream;

namespace {

EnvConfig small_config() {
  EnvConfig c;
  c.M = 3;
  c.K = 2;
  c.N = 2;
  c.mc_draws_train = 300;
  c.mc_draws_eval = 300;
  return c;
}

phy::NetworkGeometry line_geometry(double ap_x, double ue_x) {
  phy::NetworkGeometry g;
  g.aps = {{ap_x, 100}};
  g.ues = {{ue_x, 100}};
  return g;
}

}  // namespace

TEST_CASE("reset: feasible placement, determinism, empty slot") {
  EnvConfig c;
  c.mc_draws_train = 200;
  Environment e(c);
  RngStream r1(11), r2(11);
  e.reset(r1);
  for (std::size_t m = 0; m < c.M; ++m)
    for (std::size_t k = 0; k < c.K; ++k) CHECK(phy::distance(e.state().geometry, m, k) >= c.d_min);
  CHECK(e.state().slot == 0);
  const auto first = e.state().geometry.aps;
  const auto obs1 = e.observations();
  e.reset(r2);
  CHECK(e.state().geometry.aps == first);
  CHECK(e.observations()[0].ue_rows == obs1[0].ue_rows);
}

TEST_CASE("reset reports infeasible placement as a configuration error") {
  EnvConfig c;
  c.d_min = 990.0;
  Environment e(c);
  RngStream r(3);
  CHECK_THROWS_AS(e.reset(r), ConfigError);
  EnvConfig bad;
  bad.d_min = 1000.0;
  CHECK_THROWS_AS(Environment{bad}, ConfigError);
}

TEST_CASE("projection truncates a move at the d_min boundary along its direction") {
  EnvConfig c;
  c.M = 1;
  c.K = 1;
  c.N = 2;
  auto g = line_geometry(100, 140);
  g.wraparound = false;
  c.wraparound = false;
  ActionVector a = ActionVector::idle(1, 2);
  a.mobility = {38.0 / 50.0, 0.0};  // would land 2 m from the UE
  auto p = project_action(a, 0, g, c);
  CHECK(p.move_truncated);
  CHECK(p.position.x == doctest::Approx(130.0).epsilon(1e-12));
  CHECK(p.position.y == 100.0);
  CHECK(phy::planar_distance(p.position, g.ues[0], g.side(), false) >= 10.0);

  // Wraparound: the UE across the seam blocks a move toward the edge.
  g = line_geometry(980, 5);
  c.wraparound = true;
  g.wraparound = true;
  a.mobility = {0.5, 0.0};
  p = project_action(a, 0, g, c);
  CHECK(p.position.x <= 1000.0);
  CHECK(phy::planar_distance(p.position, g.ues[0], 1000.0, true) >= 10.0);
  CHECK(p.position.x == doctest::Approx(995.0).epsilon(1e-12));
}

TEST_CASE("projection: simplex shares, antenna caps, clamping and NaN rejection") {
  EnvConfig c;
  c.M = 1;
  c.K = 2;
  c.N = 8;
  phy::NetworkGeometry g;
  g.aps = {{500, 500}};
  g.ues = {{100, 100}, {900, 900}};
  ActionVector a = ActionVector::idle(2, 8);
  a.power_split = {2.0, 2.0};
  a.ap_power = 1.0;
  auto p = project_action(a, 0, g, c);
  CHECK(p.action.power_split == std::vector<double>{0.5, 0.5});
  for (std::size_t n = 0; n < 8; ++n) CHECK(p.power.antenna_power(n) <= 1.0 / 8.0);
  CHECK(p.power.total() <= 1.0);

  a.antenna_weights.assign(8, 0.0);
  a.antenna_weights[3] = 1.0;  // all power on one antenna
  p = project_action(a, 0, g, c);
  CHECK(p.power_scaled);
  CHECK(p.power.antenna_power(3) <= 1.0 / 8.0);
  CHECK(p.power.total() == doctest::Approx(1.0 / 8.0));

  a = ActionVector::idle(2, 8);
  a.ap_power = 7.0;
  a.mobility = {-9.0, 3.0};
  a.power_split = {-1.0, 0.0};
  p = project_action(a, 0, g, c);
  CHECK(p.action.ap_power == 1.0);
  CHECK(p.action.power_split == std::vector<double>{0.5, 0.5});
  CHECK(p.action.mobility[0] == doctest::Approx(-1.0));

  a.mobility[1] = std::nan("");
  CHECK_THROWS_AS(project_action(a, 0, g, c), std::invalid_argument);
  a = ActionVector::idle(3, 8);
  CHECK_THROWS_AS(project_action(a, 0, g, c), std::invalid_argument);
}

TEST_CASE("projected random actions satisfy every constraint") {
  EnvConfig c = small_config();
  c.K = 4;
  c.N = 3;
  c.d_min = 40.0;
  c.max_step = 120.0;
  c.p_an_max = 0.2;  // tighter than P / N so both caps bind
  Environment e(c);
  RngStream r(17);
  e.reset(r);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<ActionVector> raw = random_actions(c.M, c.K, c.N, r);
    for (auto& a : raw) {
      for (double& v : a.mobility) v *= 3.0;
      a.ap_power = r.uniform(-0.5, 1.5);
      for (double& v : a.antenna_weights) v = r.uniform(-0.5, 1.5);
    }
    auto proj = project_actions(raw, e.state().geometry, c);
    phy::NetworkGeometry g = e.state().geometry;
    std::vector<PowerAllocation> power;
    for (std::size_t m = 0; m < c.M; ++m) {
      g.aps[m] = proj[m].position;
      power.push_back(proj[m].power);
    }
    const auto rep = check_constraints(g, power, c);
    REQUIRE(rep.all());
    // Occasionally rebuild a geometry with a UE right next to an AP path.
    if (trial % 100 == 0) e.reset(r);
  }
}

TEST_CASE("step: idle actions, reward identity and feasibility") {
  EnvConfig c = small_config();
  Environment e(c);
  RngStream r(5);
  e.reset(r);
  const auto before = e.state().geometry.aps;
  std::vector<ActionVector> idle(c.M, ActionVector::idle(c.K, c.N));
  auto s = e.step(idle, r);
  CHECK(s.sum_se == 0.0);
  CHECK(e.state().geometry.aps == before);
  CHECK(e.state().slot == 1);

  for (int t = 0; t < 5; ++t) {
    auto st = e.step(random_actions(c.M, c.K, c.N, r), r);
    double total = 0.0, ue = 0.0;
    for (double v : st.r_ex) total += v;
    for (double v : st.ue_se) ue += v;
    CHECK(std::abs(total - ue) <= 1e-9);
    CHECK(st.constraints.all());
    CHECK(st.observations.size() == c.M);
    for (std::size_t m = 0; m < c.M; ++m)
      for (std::size_t k = 0; k < c.K; ++k) {
        const double beta = phy::pathloss(phy::distance(e.state().geometry, m, k), c.pathloss);
        CHECK(e.state().cov.b(m, k) == beta);
      }
  }
}

TEST_CASE("episode ends after episode_length slots") {
  EnvConfig c = small_config();
  c.episode_length = 3;
  Environment e(c);
  RngStream r(6);
  e.reset(r);
  std::vector<ActionVector> idle(c.M, ActionVector::idle(c.K, c.N));
  CHECK_FALSE(e.step(idle, r).done);
  CHECK_FALSE(e.step(idle, r).done);
  CHECK(e.step(idle, r).done);
}

TEST_CASE("moving the single AP toward its UE raises beta and never lowers SE") {
  EnvConfig c;
  c.M = 1;
  c.K = 1;
  c.N = 2;
  c.wraparound = false;
  c.max_step = 40.0;
  Environment e(c);
  RngStream r(8);
  e.reset_with(line_geometry(600, 100), r);
  ActionVector toward = ActionVector::idle(1, 2);
  toward.mobility = {-1.0, 0.0};
  toward.ap_power = 1.0;
  double beta = e.state().cov.b(0, 0);
  double se = -1.0;
  for (int t = 0; t < 10; ++t) {
    auto st = e.step({toward}, r);
    CHECK(e.state().cov.b(0, 0) > beta);
    beta = e.state().cov.b(0, 0);
    // Common random numbers: the same Monte-Carlo stream at every position.
    RngStream crn(99);
    const double now = e.score({st.applied[0].power}, crn, 20000).sum_se;
    CHECK(now >= se);
    se = now;
  }
}

TEST_CASE("seeded steps are bit-reproducible") {
  EnvConfig c = small_config();
  auto run = [&] {
    Environment e(c);
    RngStream r(21);
    e.reset(r);
    std::vector<double> out;
    for (int t = 0; t < 4; ++t) {
      auto st = e.step(random_actions(c.M, c.K, c.N, r), r);
      out.insert(out.end(), st.ue_se.begin(), st.ue_se.end());
      for (const auto& o : st.observations) out.insert(out.end(), o.ue_rows.values().begin(), o.ue_rows.values().end());
    }
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("UE rows permute with the UEs and antenna rows do not change") {
  EnvConfig c = small_config();
  c.K = 4;
  c.N = 3;
  Environment e(c);
  RngStream r(31);
  e.reset(r);
  const auto& s = e.state();
  const std::vector<std::size_t> perm = {2, 0, 3, 1};
  phy::NetworkGeometry g = s.geometry;
  phy::CovarianceSet cov = s.cov;
  phy::ChannelEstimate est = s.estimates;
  for (std::size_t k = 0; k < 4; ++k) g.ues[k] = s.geometry.ues[perm[k]];
  for (std::size_t m = 0; m < c.M; ++m)
    for (std::size_t k = 0; k < 4; ++k) {
      cov.beta[m * 4 + k] = s.cov.b(m, perm[k]);
      cov.r[m * 4 + k] = s.cov.R(m, perm[k]);
      est.h_hat[m * 4 + k] = s.estimates.at(m, perm[k]);
    }
  for (std::size_t m = 0; m < c.M; ++m) {
    const auto a = build_observation(m, s.geometry, s.cov, s.estimates);
    const auto b = build_observation(m, g, cov, est);
    CHECK(a.ue_rows.cols() == Observation::ue_features(3));
    CHECK(a.flat_size() == 4 * 11 + 3 * 3);
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t f = 0; f < a.ue_rows.cols(); ++f) CHECK(b.ue_rows(k, f) == a.ue_rows(perm[k], f));
    CHECK(a.antenna_rows == b.antenna_rows);
  }
}

TEST_CASE("fractional baseline arithmetic") {
  auto w = fractional_split({3.0, 1.0}, 1.0);
  CHECK(w[0] == doctest::Approx(0.75));
  CHECK(w[1] == doctest::Approx(0.25));
  auto u = fractional_split({3.0, 1.0, 7.0}, 0.0);
  for (double v : u) CHECK(v == doctest::Approx(1.0 / 3.0));
  auto z = fractional_split({0.0, 0.0}, 1.0);
  CHECK(z == std::vector<double>{0.5, 0.5});

  EnvConfig c = small_config();
  Environment e(c);
  RngStream r(41);
  e.reset(r);
  auto acts = fractional_power_baseline(e.state());
  auto proj = project_actions(acts, e.state().geometry, c);
  for (const auto& p : proj) {
    CHECK(p.power.total() == doctest::Approx(c.p_ap_max).epsilon(1e-15));
    CHECK(p.position == e.state().geometry.aps[&p - proj.data()]);
  }
}

TEST_CASE("trajectory CSV schema") {
  EnvConfig c = small_config();
  Environment e(c);
  RngStream r(51);
  e.reset(r);
  TrajectoryRecorder rec(c.K);
  rec.record_initial(e.state());
  auto st = e.step(random_actions(c.M, c.K, c.N, r), r);
  rec.record(e.state(), st);
  std::ostringstream os;
  rec.write_csv(os);
  const std::string text = os.str();
  CHECK(text.rfind("slot,agent,x,y,ap_power,split_0,split_1,se_0,se_1\n", 0) == 0);
  CHECK(rec.rows() == 2 * c.M);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(2 * c.M + 1));
}
