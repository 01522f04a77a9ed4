// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/harness/selftest.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cfmimo/env/actions.hpp"
#include "cfmimo/env/environment.hpp"
#include "cfmimo/harness/experiment_config.hpp"
#include "cfmimo/harness/metrics.hpp"
#include "cfmimo/harness/runner.hpp"
#include "cfmimo/marl/critics.hpp"
#include "cfmimo/marl/reward_nets.hpp"
#include "cfmimo/marl/trainer.hpp"
#include "cfmimo/numeric/gradcheck.hpp"
#include "cfmimo/phy/covariance.hpp"
#include "cfmimo/phy/estimation.hpp"
#include "cfmimo/phy/geometry.hpp"
#include "cfmimo/phy/pilots.hpp"
#include "cfmimo/phy/se.hpp"
#include "cfmimo/policy/dhpn.hpp"
#include "cfmimo/policy/mlp_actor.hpp"

namespace cfmimo::harness {

namespace fs = std::filesystem;
using numeric::Graph;
using numeric::ParamStore;
using numeric::RealTensor;
using numeric::RngStream;
using numeric::Var;

namespace {

class Digest {
 public:
  void add(double v) { mix(std::bit_cast<std::uint64_t>(v)); }
  void add(std::uint64_t v) { mix(v); }
  void add(const std::string& s) {
    for (unsigned char c : s) mix(c);
  }
  void add(const std::vector<double>& v) {
    for (double x : v) add(x);
  }
  [[nodiscard]] std::uint64_t value() const { return h_; }

 private:
  void mix(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (v >> (8 * i)) & 0xff;
      h_ *= 1099511628211ull;
    }
  }
  std::uint64_t h_ = 14695981039346656037ull;
};

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

bool full(const SelftestOptions& o) { return o.mode == SuiteMode::kFull; }

void note(const SelftestOptions& o, const std::string& line) {
  if (o.log) *o.log << "  " << line << '\n' << std::flush;
}

// ---------------------------------------------------------------- gradient

env::Observation random_obs(std::size_t K, std::size_t N, RngStream& rng) {
  env::Observation o;
  o.ue_rows = RealTensor(K, env::Observation::ue_features(N));
  o.antenna_rows = RealTensor(N, env::Observation::kAntennaFeatures);
  for (auto& v : o.ue_rows.values()) v = rng.normal();
  for (auto& v : o.antenna_rows.values()) v = rng.uniform();
  return o;
}

policy::DhpnConfig desk_dhpn() {
  policy::DhpnConfig c;
  c.d_r = 32;
  c.hyper_hidden = 32;
  c.head_widths = {64, 32};
  return c;
}

// "p.sp.hyper.l0.w" -> "sp"; single-module stores map to their own label.
std::string module_of(const std::string& param, const std::string& label, bool split) {
  if (!split) return label;
  const auto a = param.find('.');
  const auto b = param.find('.', a + 1);
  return label + "/" + param.substr(a + 1, b - a - 1);
}

struct GradModule {
  std::string label;
  bool split_by_component;
  std::function<void(ParamStore&, RngStream&, numeric::LossBuilder&)> build;
};

CheckResult gradient_suite(const SelftestOptions& opts) {
  CheckResult r;
  constexpr std::size_t K = 3, N = 2, L = 3;
  constexpr std::size_t per_tensor_full = 20, per_tensor_quick = 4;
  const std::size_t per_tensor = full(opts) ? per_tensor_full : per_tensor_quick;
  constexpr double kTol = 1e-4;

  // Shared inputs; every builder captures its own copies.
  const std::size_t F = K * env::Observation::ue_features(N) + 3 * N, A = 2 + K + N;

  auto dhpn_module = [&](const std::string& label, policy::DhpnConfig cfg, bool train) {
    return GradModule{label, true, [=](ParamStore& s, RngStream& rng, numeric::LossBuilder& loss) {
      std::shared_ptr<policy::Dhpn> d = policy::Dhpn::create(s, "p", cfg, K, N, rng);
      std::vector<env::Observation> agents;
      for (std::size_t l = 0; l < L; ++l) agents.push_back(random_obs(K, N, rng));
      auto batch = std::make_shared<policy::EntityBatch>(policy::EntityBatch::from(agents));
      RealTensor hidden(L, d->hidden_width());
      for (auto& x : hidden.values()) x = rng.uniform();
      auto graph = gnn::CommGraph::empty(L, L);
      graph.neighbors = {{1, 2}, {0}, {1}};
      RealTensor probe(L, A), hprobe(L, d->hidden_width());
      for (auto& x : probe.values()) x = rng.normal();
      for (auto& x : hprobe.values()) x = rng.normal();
      const policy::ForwardOptions fo{train, 5, 0.8};
      loss = [=](Graph& g, ParamStore& st) {
        auto out = d->forward(g, st, *batch, hidden, graph, fo);
        Var l = numeric::sum(numeric::mul(numeric::tanh(out.mean), g.constant(probe)));
        if (d->hidden_width() > 0) l = numeric::add(l, numeric::sum(numeric::mul(out.hidden, g.constant(hprobe))));
        return l;
      };
    }};
  };

  std::vector<GradModule> modules;
  modules.push_back(dhpn_module("dhpn-hypernet", desk_dhpn(), false));
  {
    auto c = desk_dhpn();
    c.mode = policy::WeightMode::kFinitePool;
    modules.push_back(dhpn_module("dhpn-pool", c, true));
  }
  {
    auto c = desk_dhpn();
    c.use_gnn = true;
    c.gnn.encoder_width = 16;
    c.gnn.layer_widths = {16, 8};
    c.gnn.key_width = 8;
    c.gnn.threshold = 0.2;
    c.gnn.straight_through = false;
    modules.push_back(dhpn_module("dhpn-gnn", c, false));
  }
  {
    auto c = desk_dhpn();
    c.joint = false;
    modules.push_back(dhpn_module("dhpn-pi-only", c, false));
  }
  {
    auto c = desk_dhpn();
    c.recurrent = false;
    modules.push_back(dhpn_module("dhpn-feedforward", c, false));
  }

  // Critic and reward-net inputs: two samples of L agents.
  auto tensors = [&](RngStream& rng) {
    std::array<RealTensor, 4> t{RealTensor(2 * L, F), RealTensor(2 * L, A), RealTensor(2 * L, 1),
                                RealTensor(2 * L, 1)};
    for (auto& x : t) for (auto& v : x.values()) v = rng.normal();
    return t;
  };
  modules.push_back({"mixed-critics", false, [=](ParamStore& s, RngStream& rng, numeric::LossBuilder& loss) {
    auto c = marl::MixedCritics::create(s, "c", L, F, A, {32, 16}, rng);
    auto [obs, act, coef, r_ex] = tensors(rng);
    loss = [=](Graph& g, ParamStore& st) {
      return numeric::sum(numeric::mul(c(g, st, g.constant(obs), g.constant(act)), g.constant(coef)));
    };
  }});
  modules.push_back({"global-critic", false, [=](ParamStore& s, RngStream& rng, numeric::LossBuilder& loss) {
    auto c = marl::GlobalCritic::create(s, "g", L, F, A, {32, 16}, rng);
    auto [obs, act, coef, r_ex] = tensors(rng);
    loss = [=](Graph& g, ParamStore& st) {
      return numeric::sum(numeric::square(c(g, st, g.constant(obs), g.constant(act))));
    };
  }});
  modules.push_back({"arn", false, [=](ParamStore& s, RngStream& rng, numeric::LossBuilder& loss) {
    auto arn = marl::IntrinsicRewardNet::create(s, "arn", F + A, marl::RewardNetConfig{}, rng);
    RealTensor f(2 * L, F + A);
    for (auto& v : f.values()) v = rng.normal();
    auto [obs, act, coef, r_ex] = tensors(rng);
    loss = [=](Graph& g, ParamStore& st) {
      return numeric::sum(numeric::mul(arn(g, st, g.constant(f), L), g.constant(coef)));
    };
  }});
  modules.push_back({"hrn", false, [=](ParamStore& s, RngStream& rng, numeric::LossBuilder& loss) {
    auto mixer = marl::RewardMixer::create(s, "hrn", F + A, marl::RewardNetConfig{}, rng);
    RealTensor f(2 * L, F + A);
    for (auto& v : f.values()) v = rng.normal();
    auto [obs, act, coef, r_ex] = tensors(rng);
    loss = [=](Graph& g, ParamStore& st) {
      auto w = mixer.weights(g, st, g.constant(f), L);
      return numeric::sum(numeric::mul(marl::RewardMixer::mix(w, g.constant(coef), g.constant(r_ex)), g.constant(coef)));
    };
  }});

  Digest dg;
  bool ok = true;
  std::ostringstream detail;
  double worst = 0.0;
  std::size_t groups = 0, checked = 0;
  for (std::size_t i = 0; i < modules.size(); ++i) {
    const auto& m = modules[i];
    RngStream rng(2024, i);
    ParamStore store;
    numeric::LossBuilder loss;
    m.build(store, rng, loss);
    RngStream pick(99, i);
    const auto rep = numeric::check_gradients(store, loss, per_tensor * store.size(), pick);
    std::map<std::string, std::pair<std::size_t, double>> by_group;
    for (const auto& e : rep.entries) {
      auto& [n, err] = by_group[module_of(e.param, m.label, m.split_by_component)];
      ++n;
      err = std::max(err, e.rel_error);
      dg.add(e.analytic);
      dg.add(e.numeric);
    }
    for (const auto& [g, ne] : by_group) {
      const bool good = ne.first >= per_tensor && ne.second < kTol;
      note(opts, g + ": " + std::to_string(ne.first) + " entries, max rel error " + fmt(ne.second));
      if (!good) detail << g << " max rel error " << fmt(ne.second) << " over " << ne.first << " entries; ";
      ok = ok && good && (!full(opts) || ne.first >= 20);
    }
    if (!rep.dead_params.empty()) {
      ok = false;
      detail << m.label << " has dead parameters (" << rep.dead_params.front() << "); ";
    }
    worst = std::max(worst, rep.max_rel_error);
    groups += by_group.size();
    checked += rep.entries.size();
  }
  r.passed = ok;
  detail << groups << " module groups, " << checked << " entries, worst relative error " << fmt(worst)
         << " (tolerance 1e-4)";
  r.detail = detail.str();
  r.digest = dg.value();
  r.budget_seconds = 120;
  return r;
}

// ---------------------------------------------------------------- pi / pe

env::Observation permute(const env::Observation& o, const std::vector<std::size_t>& ue,
                         const std::vector<std::size_t>& ant) {
  env::Observation p = o;
  for (std::size_t k = 0; k < ue.size(); ++k)
    for (std::size_t f = 0; f < o.ue_rows.cols(); ++f) p.ue_rows(k, f) = o.ue_rows(ue[k], f);
  for (std::size_t n = 0; n < ant.size(); ++n)
    for (std::size_t f = 0; f < o.antenna_rows.cols(); ++f) p.antenna_rows(n, f) = o.antenna_rows(ant[n], f);
  return p;
}

std::vector<std::size_t> shuffled(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.index(i)]);
  return p;
}

struct ActorOutputs {
  RealTensor mobility, split, antenna;
};

ActorOutputs eval_actor(const policy::Actor& a, ParamStore& s, const std::vector<env::Observation>& agents,
                        const RealTensor& hidden, const gnn::CommGraph& graph) {
  Graph g(false);
  const auto batch = policy::EntityBatch::from(agents);
  const auto out = a.forward(g, s, batch, hidden, graph, policy::ForwardOptions{});
  return {out.mobility.value(), out.split.value(), out.antenna.value()};
}

CheckResult pi_pe_suite(const SelftestOptions& opts) {
  CheckResult r;
  constexpr std::size_t K = 6, N = 8, L = 3;
  const std::size_t n_obs = full(opts) ? 200 : 20, n_perm = full(opts) ? 20 : 5;
  struct Variant {
    std::string name;
    policy::DhpnConfig cfg;
  };
  std::vector<Variant> variants{{"hypernet", desk_dhpn()}};
  variants.push_back({"pool", desk_dhpn()});
  variants.back().cfg.mode = policy::WeightMode::kFinitePool;
  variants.push_back({"gnn", desk_dhpn()});
  variants.back().cfg.use_gnn = true;
  variants.back().cfg.gnn.encoder_width = 32;
  variants.back().cfg.gnn.layer_widths = {32, 16};
  variants.back().cfg.gnn.key_width = 8;
  variants.push_back({"pi-only", desk_dhpn()});
  variants.back().cfg.joint = false;

  Digest dg;
  bool ok = true;
  std::ostringstream detail;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    const auto& var = variants[v];
    const bool pe = var.cfg.joint;
    RngStream rng(77, v);
    ParamStore s;
    auto d = policy::Dhpn::create(s, "p", var.cfg, K, N, rng);
    std::size_t mob_bad = 0, sp_bad = 0, mp_bad = 0, visible = 0, cases = 0;
    for (std::size_t i = 0; i < n_obs; ++i) {
      std::vector<env::Observation> agents;
      for (std::size_t l = 0; l < L; ++l) agents.push_back(random_obs(K, N, rng));
      RealTensor hidden(L, d->hidden_width());
      for (auto& x : hidden.values()) x = rng.normal();
      auto graph = gnn::CommGraph::empty(L, L);
      graph.neighbors = {{1, 2}, {0, 2}, {0}};
      const auto base = eval_actor(*d, s, agents, hidden, graph);
      dg.add(base.mobility.values());
      dg.add(base.split.values());
      for (std::size_t t = 0; t < n_perm; ++t) {
        const auto pu = shuffled(K, rng), pa = shuffled(N, rng);
        auto moved = agents;
        moved[0] = permute(agents[0], pu, pa);
        const auto out = eval_actor(*d, s, moved, hidden, graph);
        ++cases;
        // Every agent's mobility is unchanged: agent 0's own and, through the
        // messages it sends, everyone else's.
        if (!(out.mobility == base.mobility)) ++mob_bad;
        for (std::size_t l = 1; l < L; ++l)
          for (std::size_t k = 0; k < K; ++k)
            if (out.split(l, k) != base.split(l, k)) ++sp_bad;
        bool changed = false;
        for (std::size_t k = 0; k < K; ++k) {
          const double want = pe ? base.split(0, pu[k]) : base.split(0, k);
          if (out.split(0, k) != want) ++sp_bad;
          changed = changed || base.split(0, pu[k]) != base.split(0, k);
        }
        for (std::size_t n = 0; n < N; ++n) {
          const double want = pe ? base.antenna(0, pa[n]) : base.antenna(0, n);
          if (out.antenna(0, n) != want) ++mp_bad;
        }
        if (changed) ++visible;
      }
    }
    const bool good = mob_bad == 0 && sp_bad == 0 && mp_bad == 0 && (pe || visible > 0);
    ok = ok && good;
    detail << var.name << (pe ? " (PE heads)" : " (heads on B_t only)") << ": " << cases << " cases, "
           << mob_bad + sp_bad + mp_bad << " mismatches";
    if (!pe) detail << ", invariant where equivariance would be visible in " << visible;
    detail << "; ";
    note(opts, var.name + ": mobility " + std::to_string(mob_bad) + ", split " + std::to_string(sp_bad) +
                   ", antenna " + std::to_string(mp_bad) + " mismatches");
  }
  r.passed = ok;
  r.detail = detail.str() + "comparisons are bitwise";
  r.digest = dg.value();
  r.budget_seconds = 60;
  return r;
}

// ---------------------------------------------------------------- estimation

CheckResult estimation_suite(const SelftestOptions& opts) {
  CheckResult r;
  const std::size_t draws = full(opts) ? 100000 : 10000;
  // Sample covariance error scales as sqrt(N / draws); quick widens accordingly.
  const double cov_tol = 0.05 * std::sqrt(100000.0 / static_cast<double>(draws));
  constexpr std::size_t N = 8;
  const double noise = 3.98e-13, p = 0.1;
  Digest dg;
  bool ok = true;
  std::ostringstream detail;

  // One AP, three UEs. UEs 0 and 2 share a pilot in the contaminated layout.
  phy::NetworkGeometry g;
  g.aps = {{400, 400}};
  g.ues = {{430, 450}, {700, 250}, {380, 330}};
  const auto cov = phy::build_covariance(g, N, phy::PathlossConfig{}, phy::CovarianceConfig{});
  const phy::ChannelSampler sampler(cov);
  for (const std::size_t tau : {std::size_t{3}, std::size_t{2}}) {
    const auto pilots = phy::assign_pilots(3, tau);
    const phy::MmseEstimator est(cov, pilots, std::vector<double>(3, p), noise);
    RngStream rng(31, tau);
    std::vector<numeric::ComplexMatrix> acc(3, numeric::ComplexMatrix::Zero(N, N));
    std::vector<numeric::cplx> orth(3, 0.0);
    phy::ChannelRealization h;
    std::vector<phy::ComplexVector> hh;
    for (std::size_t i = 0; i < draws; ++i) {
      sampler.sample_into(rng, h);
      est.estimate_into(h, rng, hh);
      for (std::size_t k = 0; k < 3; ++k) {
        const phy::ComplexVector e = h.at(0, k) - hh[k];
        acc[k] += e * e.adjoint();
        orth[k] += hh[k].dot(e);
      }
    }
    for (std::size_t k = 0; k < 3; ++k) {
      const numeric::ComplexMatrix mc = acc[k] / static_cast<double>(draws);
      const double rel = (mc - est.err_cov(0, k)).norm() / est.err_cov(0, k).norm();
      const double o = std::abs(orth[k] / static_cast<double>(draws));
      const double o_bound = 0.01 * static_cast<double>(N) * cov.b(0, k);
      dg.add(rel);
      dg.add(o);
      const bool good = rel < cov_tol && o < o_bound;
      ok = ok && good;
      if (!good || k == 0)
        detail << "tau_p=" << tau << " UE" << k << ": covariance mismatch " << fmt(100 * rel) << "%, |E h^H e| / (N beta) "
               << fmt(o / (N * cov.b(0, k))) << "; ";
    }
  }

  // Contamination: every layout, every pairing choice.
  RngStream geo(32);
  std::size_t layouts = 0, strict = 0;
  for (int t = 0; t < 20; ++t) {
    env::EnvConfig ec;
    env::Environment e(ec);
    e.reset(geo);
    const auto& c = e.state().cov;
    auto total = [&](std::size_t tau) {
      const phy::MmseEstimator est(c, phy::assign_pilots(ec.K, tau), std::vector<double>(ec.K, ec.pilot_power),
                                   ec.noise_power);
      double s = 0.0;
      for (std::size_t m = 0; m < ec.M; ++m)
        for (std::size_t k = 0; k < ec.K; ++k) s += est.err_cov(m, k).trace().real();
      return s;
    };
    const double orth_trace = total(ec.K);
    for (std::size_t tau = 1; tau < ec.K; ++tau) {
      const double shared = total(tau);
      dg.add(shared);
      ++layouts;
      if (shared > orth_trace) ++strict;
    }
  }
  ok = ok && strict == layouts;
  detail << "contamination raised the error trace in " << strict << "/" << layouts << " layouts; " << draws
         << " draws, covariance tolerance " << fmt(100 * cov_tol) << "%";
  r.passed = ok;
  r.detail = detail.str();
  r.digest = dg.value();
  r.budget_seconds = 180;
  return r;
}

// ---------------------------------------------------------------- SE oracle

phy::CovarianceSet scalar_cov(double beta) {
  phy::CovarianceSet c;
  c.M = c.K = c.N = 1;
  c.beta = {beta};
  c.diagonal = true;
  c.r.push_back(beta * phy::ComplexMatrix::Identity(1, 1));
  return c;
}

CheckResult se_oracle_suite(const SelftestOptions& opts) {
  CheckResult r;
  const std::size_t draws = full(opts) ? 100000 : 10000;
  const double tol = 0.02 * std::sqrt(100000.0 / static_cast<double>(draws));
  Digest dg;
  std::ostringstream detail;

  env::EnvConfig ec;  // M = 9, K = 6, N = 8
  env::Environment e(ec);
  RngStream geo(41);
  e.reset(geo);
  const std::vector<double> p(ec.K, ec.pilot_power);
  phy::SeStatisticsOptions so;
  so.draws = draws;
  RngStream h1(42, 1), h2(42, 2);
  const auto s1 = phy::estimate_se_statistics(e.state().cov, e.pilots(), p, ec.noise_power, so, h1);
  const auto s2 = phy::estimate_se_statistics(e.state().cov, e.pilots(), p, ec.noise_power, so, h2);
  std::vector<Eigen::VectorXd> mu(ec.K, Eigen::VectorXd::Constant(ec.M, std::sqrt(ec.p_ap_max / ec.K)));
  const auto a = phy::compute_sinr(s1, mu, ec.noise_power), b = phy::compute_sinr(s2, mu, ec.noise_power);
  double worst = 0.0;
  for (std::size_t k = 0; k < ec.K; ++k) {
    const double rel = std::abs(a.sinr[k] - b.sinr[k]) / std::max(a.sinr[k], b.sinr[k]);
    worst = std::max(worst, rel);
    dg.add(a.sinr[k]);
    dg.add(b.sinr[k]);
  }
  const bool halves_ok = worst < tol && !a.guard_triggered && !b.guard_triggered;
  detail << "M=9 K=6 N=8 MR: worst per-UE SINR disagreement " << fmt(100 * worst) << "% (limit " << fmt(100 * tol)
         << "%); ";

  // M = K = N = 1: w = y / |y| and h = c y + independent error give
  // a = sqrt(pi p) beta / (2 sqrt(p beta + s2)) and B = beta.
  const double beta = 1e-11, pp = 0.1;
  RngStream rs(43);
  const auto st = phy::estimate_se_statistics(scalar_cov(beta), phy::assign_pilots(1, 1), {pp}, ec.noise_power, so, rs);
  const double a_exact = std::sqrt(std::numbers::pi * pp) * beta / (2.0 * std::sqrt(pp * beta + ec.noise_power));
  const double za = std::abs(st.a[0](0) - a_exact) / st.a_stderr[0](0);
  const double zb = std::abs(st.B(0, 0)(0, 0) - beta) / st.b_stderr[0](0, 0);
  dg.add(st.a[0](0));
  dg.add(st.B(0, 0)(0, 0));
  const bool scalar_ok = za <= 3.0 && zb <= 3.0;
  detail << "scalar case: signal term " << fmt(za) << " and second moment " << fmt(zb) << " standard errors from exact; "
         << draws << " draws per half";
  r.passed = halves_ok && scalar_ok;
  r.detail = detail.str();
  r.digest = dg.value();
  r.budget_seconds = 300;
  return r;
}

// ---------------------------------------------------------------- constraints

CheckResult constraints_suite(const SelftestOptions& opts) {
  CheckResult r;
  const std::size_t rounds = full(opts) ? 10000 : 1000;
  env::EnvConfig c;  // P_ap,max = 1 W, per antenna 1/N W
  env::Environment e(c);
  RngStream rng(51);
  e.reset(rng);
  phy::NetworkGeometry g = e.state().geometry;
  Digest dg;
  std::size_t violations = 0, report_fail = 0, truncated = 0, scaled = 0;
  const double cap = c.antenna_cap();
  for (std::size_t t = 0; t < rounds; ++t) {
    std::vector<env::ActionVector> raw(c.M);
    for (auto& a : raw) {
      a.mobility = {3.0 * rng.normal(), 3.0 * rng.normal()};
      a.ap_power = rng.uniform(-0.5, 2.0);
      a.power_split.resize(c.K);
      for (double& v : a.power_split) v = rng.uniform(-0.5, 1.5);
      a.antenna_weights.resize(c.N);
      for (double& v : a.antenna_weights) v = rng.uniform(-0.5, 1.5);
    }
    const auto proj = env::project_actions(raw, g, c);
    std::vector<env::PowerAllocation> power;
    for (std::size_t m = 0; m < c.M; ++m) {
      g.aps[m] = proj[m].position;
      power.push_back(proj[m].power);
      truncated += proj[m].move_truncated;
      scaled += proj[m].power_scaled;
      const auto& pt = proj[m].position;
      bool ok = pt.x >= c.area_min && pt.x <= c.area_max && pt.y >= c.area_min && pt.y <= c.area_max;
      for (std::size_t k = 0; k < c.K; ++k)
        ok = ok && phy::planar_distance(pt, g.ues[k], g.side(), g.wraparound) >= c.d_min;
      ok = ok && proj[m].power.total() <= c.p_ap_max;
      for (std::size_t n = 0; n < c.N; ++n) ok = ok && proj[m].power.antenna_power(n) <= cap;
      violations += !ok;
      dg.add(pt.x);
      dg.add(pt.y);
      dg.add(proj[m].power.total());
    }
    report_fail += !env::check_constraints(g, power, c).all();
    // Fresh layouts keep APs from drifting into a single configuration.
    if (t % 200 == 199) {
      e.reset(rng);
      g = e.state().geometry;
    }
  }
  r.passed = violations == 0 && report_fail == 0;
  r.detail = std::to_string(rounds) + " joint actions (" + std::to_string(rounds * c.M) + " AP actions): " +
             std::to_string(violations) + " violations, " + std::to_string(report_fail) +
             " failed reports; moves truncated " + std::to_string(truncated) + ", powers scaled " +
             std::to_string(scaled) + "; no tolerance";
  r.digest = dg.value();
  r.budget_seconds = 60;
  return r;
}

// ---------------------------------------------------------------- learning runs

std::string executable_identity() {
  std::error_code ec;
  const fs::path exe = fs::read_symlink("/proc/self/exe", ec);
  if (ec) return {};
  const auto size = fs::file_size(exe, ec);
  if (ec) return {};
  const auto stamp = fs::last_write_time(exe, ec);
  if (ec) return {};
  return exe.string() + ":" + std::to_string(size) + ":" + std::to_string(stamp.time_since_epoch().count());
}

struct LearnRun {
  std::vector<double> curve;
  double seconds = 0.0;
  bool cached = false;
};

// One seed of a learner config. Results are cached per config + executable so
// the two suites that share runs do not train twice.
LearnRun learn(const ExperimentConfig& cfg, const SelftestOptions& opts) {
  const std::string identity = opts.cache_dir.empty() ? std::string() : executable_identity();
  const std::string key = to_json(cfg).dump() + "\n" + identity;
  Digest kd;
  kd.add(key);
  std::ostringstream name;
  name << std::hex << kd.value() << ".json";
  const fs::path file = fs::path(opts.cache_dir) / name.str();
  if (!identity.empty()) {
    std::ifstream f(file);
    if (f) {
      try {
        const auto doc = nlohmann::json::parse(f);
        if (doc.at("key").get<std::string>() == key)
          return {doc.at("curve").get<std::vector<double>>(), doc.at("seconds").get<double>(), true};
      } catch (const nlohmann::json::exception&) {
        // Unreadable entries are recomputed.
      }
    }
  }
  RunOptions ro;
  ro.write = false;
  const auto t0 = std::chrono::steady_clock::now();
  const auto bundle = run_experiment(cfg, ro);
  LearnRun run{bundle.seeds.at(0).episode_sum_se,
               std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), false};
  if (!identity.empty()) {
    std::error_code ec;
    fs::create_directories(opts.cache_dir, ec);
    std::ofstream f(file);
    f << std::setprecision(17) << nlohmann::json{{"key", key}, {"curve", run.curve}, {"seconds", run.seconds}}.dump();
  }
  return run;
}

constexpr std::uint64_t kLearnSeeds[] = {1, 2, 3};

ExperimentConfig learning_config(const SelftestOptions& opts, std::uint64_t seed) {
  ExperimentConfig c = preset(Algorithm::kSfMaddpg);
  c.seeds = {seed};
  c.episodes = full(opts) ? 300 : 12;
  c.eval_episodes = 0;
  c.output_dir.clear();
  return c;
}

double final_window(const std::vector<double>& curve) { return tail_mean(curve, 50); }

CheckResult learning_suite(const SelftestOptions& opts) {
  CheckResult r;
  Digest dg;
  std::ostringstream detail;
  if (!full(opts)) {
    const auto run = learn(learning_config(opts, 1), SelftestOptions{opts.mode, "", opts.log});
    const bool finite = std::all_of(run.curve.begin(), run.curve.end(), [](double v) { return std::isfinite(v); });
    dg.add(run.curve);
    r.passed = finite && run.curve.size() == 12;
    r.detail = "smoke: 12 episodes, final sum SE " + fmt(run.curve.back()) + " (the directional check needs --full)";
    r.digest = dg.value();
    return r;
  }
  std::size_t beats_random = 0, beats_fractional = 0;
  double seconds = 0.0;
  for (const auto seed : kLearnSeeds) {
    const auto cfg = learning_config(opts, seed);
    const auto run = learn(cfg, opts);
    seconds += run.seconds;
    // Baselines on the same geometries as the learner's last 50 episodes.
    const std::size_t first = cfg.episodes - 50;
    const auto streams = marl::EpisodeStreams::training(first);
    const double rnd = mean(marl::evaluate_random_policy(cfg.env, 50, seed, false, streams).episode_sum_se);
    const double frac = mean(marl::evaluate_fractional(cfg.env, 50, seed, false, 1.0, streams).episode_sum_se);
    const double own = final_window(run.curve);
    dg.add(run.curve);
    dg.add(rnd);
    dg.add(frac);
    beats_random += own >= 1.2 * rnd;
    beats_fractional += own > frac;
    detail << "seed " << seed << ": " << fmt(own, 4) << " vs random " << fmt(rnd, 4) << " (" << fmt(100 * (own / rnd - 1), 3)
           << "%), fractional " << fmt(frac, 4) << (run.cached ? " [cached]" : "") << "; ";
    note(opts, detail.str());
  }
  const std::size_t n = std::size(kLearnSeeds);
  r.passed = beats_random == n && beats_fractional >= 2;
  detail << "random +20% on " << beats_random << "/" << n << ", fractional beaten on " << beats_fractional << "/" << n
         << " (need 2); training " << fmt(seconds, 4) << " s";
  r.detail = detail.str();
  r.digest = dg.value();
  r.seconds = seconds;  // reported even when the runs came from the cache
  r.budget_seconds = 1800;
  return r;
}

double stdev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
}

CheckResult joint_vs_pi_suite(const SelftestOptions& opts) {
  CheckResult r;
  Digest dg;
  std::vector<double> joint, pi;
  const std::vector<std::uint64_t> seeds = full(opts) ? std::vector<std::uint64_t>(std::begin(kLearnSeeds), std::end(kLearnSeeds))
                                                      : std::vector<std::uint64_t>{1};
  double seconds = 0.0;
  for (const auto seed : seeds) {
    auto cfg = learning_config(opts, seed);
    const auto cache = full(opts) ? opts : SelftestOptions{opts.mode, "", opts.log};
    const auto a = learn(cfg, cache);
    cfg.features.joint = false;
    const auto b = learn(cfg, cache);
    seconds += a.seconds + b.seconds;
    joint.push_back(final_window(a.curve));
    pi.push_back(final_window(b.curve));
    dg.add(a.curve);
    dg.add(b.curve);
    note(opts, "seed " + std::to_string(seed) + ": joint " + fmt(joint.back(), 4) + ", PI-only " + fmt(pi.back(), 4));
  }
  std::ostringstream detail;
  const double mj = median(joint), mp = median(pi);
  detail << "median final-50 sum SE: joint " << fmt(mj, 4) << " (sd " << fmt(stdev(joint)) << "), PI-only " << fmt(mp, 4)
         << " (sd " << fmt(stdev(pi)) << ") over " << seeds.size() << " seed(s)";
  if (seeds.size() < 2) {
    r.passed = std::all_of(joint.begin(), joint.end(), [](double v) { return std::isfinite(v); }) &&
               std::all_of(pi.begin(), pi.end(), [](double v) { return std::isfinite(v); });
    detail << "; reported only";
  } else {
    r.passed = mj >= mp;
    detail << "; per seed";
    for (std::size_t i = 0; i < seeds.size(); ++i) detail << ' ' << fmt(joint[i], 4) << '/' << fmt(pi[i], 4);
  }
  r.detail = detail.str();
  r.digest = dg.value();
  r.seconds = seconds;
  return r;
}

// ---------------------------------------------------------------- compression

CheckResult compression_suite(const SelftestOptions& opts) {
  CheckResult r;
  constexpr std::size_t N = 2, kMaxL = 5;
  Digest dg;
  bool ok = true;
  std::ostringstream detail;
  for (std::size_t L = 1; L <= kMaxL; ++L) {
    RngStream rng(61, L);
    ParamStore sd, sm;
    auto d = policy::Dhpn::create(sd, "p", desk_dhpn(), L, N, rng);
    auto m = policy::MlpActor::create(sm, "m", L, N, rng);
    const auto o = random_obs(L, N, rng);
    std::vector<std::size_t> perm(L), ident(N);
    std::iota(perm.begin(), perm.end(), 0);
    std::iota(ident.begin(), ident.end(), 0);
    std::set<std::uint64_t> pi_hashes, mlp_hashes;
    std::size_t orderings = 0;
    const auto empty = gnn::CommGraph::empty(1, 1);
    do {
      const std::vector<env::Observation> po{permute(o, perm, ident)};
      const auto a = eval_actor(*d, sd, po, RealTensor(1, d->hidden_width()), empty);
      const auto b = eval_actor(*m, sm, po, RealTensor(1, m->hidden_width()), empty);
      pi_hashes.insert(policy::row_hash(a.mobility.values()));
      mlp_hashes.insert(policy::row_hash(b.mobility.values()));
      ++orderings;
    } while (std::next_permutation(perm.begin(), perm.end()));
    dg.add(static_cast<std::uint64_t>(pi_hashes.size()));
    dg.add(static_cast<std::uint64_t>(mlp_hashes.size()));
    const bool good = pi_hashes.size() == 1 && mlp_hashes.size() == orderings;
    ok = ok && good;
    detail << "L'=" << L << ": " << orderings << " orderings -> PI " << pi_hashes.size() << ", MLP " << mlp_hashes.size()
           << "; ";
  }
  r.passed = ok;
  r.detail = detail.str() + "mobility outputs hashed bitwise";
  r.digest = dg.value();
  (void)opts;
  return r;
}

// ---------------------------------------------------------------- determinism

CheckResult run_named(const std::string& name, const SelftestOptions& opts);

CheckResult determinism_suite(const SelftestOptions& opts) {
  CheckResult r;
  const SelftestOptions quick{SuiteMode::kQuick, "", nullptr};
  std::ostringstream detail;
  Digest dg;
  bool ok = true;
  for (const auto& s : suite_names()) {
    if (s == "determinism") continue;
    const auto a = run_named(s, quick), b = run_named(s, quick);
    const bool same = a.digest == b.digest && a.detail == b.detail;
    ok = ok && same;
    dg.add(a.digest);
    if (!same) detail << s << " differs between runs; ";
    note(opts, s + (same ? " reproduced" : " DIFFERS"));
  }
  // A 10-episode training run: logs and final weights, byte for byte.
  auto tc = preset(Algorithm::kSfMaddpg).trainer_config(5, "");
  tc.max_episodes = 10;
  tc.warmup_episodes = 2;
  const env::EnvConfig ec = preset(Algorithm::kSfMaddpg).env;
  std::string logs[2], weights[2];
  for (int i = 0; i < 2; ++i) {
    marl::Trainer tr(ec, tc);
    const auto res = tr.train();
    std::ostringstream os;
    marl::write_training_csv(os, res, ec.M);
    logs[i] = os.str();
    weights[i] = tr.learner().checkpoint().dump();
  }
  const bool train_same = logs[0] == logs[1] && weights[0] == weights[1];
  ok = ok && train_same;
  dg.add(logs[0]);
  detail << (ok ? "every quick suite reproduced its digest" : "digest mismatch") << "; 10-episode training log (" << logs[0].size()
         << " bytes) and checkpoint " << (train_same ? "identical" : "DIFFER");
  r.passed = ok;
  r.detail = detail.str();
  r.digest = dg.value();
  return r;
}

CheckResult run_named(const std::string& name, const SelftestOptions& opts) {
  if (name == "gradient") return gradient_suite(opts);
  if (name == "pi_pe") return pi_pe_suite(opts);
  if (name == "estimation") return estimation_suite(opts);
  if (name == "se_oracle") return se_oracle_suite(opts);
  if (name == "constraints") return constraints_suite(opts);
  if (name == "learning") return learning_suite(opts);
  if (name == "joint_vs_pi") return joint_vs_pi_suite(opts);
  if (name == "compression") return compression_suite(opts);
  if (name == "determinism") return determinism_suite(opts);
  throw std::invalid_argument("unknown suite '" + name + "'");
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"gradient", "pi_pe",       "estimation",  "se_oracle",  "constraints",
                                              "learning", "joint_vs_pi", "compression", "determinism"};
  return names;
}

CheckResult run_suite(const std::string& name, const SelftestOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r = run_named(name, opts);
  r.name = name;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  // Suites built on cached runs report the original training time.
  r.seconds = std::max(r.seconds, wall);
  if (!full(opts)) r.budget_seconds = 0.0;
  if (r.budget_seconds > 0.0 && r.seconds > r.budget_seconds) {
    r.passed = false;
    r.detail += "; over the " + fmt(r.budget_seconds, 4) + " s budget";
  }
  return r;
}

std::string format_result(const CheckResult& r) {
  std::ostringstream os;
  os << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << std::fixed << std::setprecision(1) << r.seconds << " s): "
     << r.detail;
  return os.str();
}

}  // namespace cfmimo::harness
