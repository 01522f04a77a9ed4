// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <set>

#include "cfmimo/numeric/autodiff.hpp"
#include "cfmimo/numeric/complex_linalg.hpp"
#include "cfmimo/numeric/gradcheck.hpp"
#include "cfmimo/numeric/layers.hpp"
#include "cfmimo/numeric/optim.hpp"
#include "cfmimo/numeric/params.hpp"
#include "cfmimo/numeric/rng.hpp"
#include "doctest.h"

using namespace cfmimo::numeric;

namespace {

ComplexMatrix random_pd(int n, RngStream& rng) {
  ComplexMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.complex_normal();
  return a * a.adjoint() + 0.1 * ComplexMatrix::Identity(n, n);
}

RealTensor random_tensor(std::size_t r, std::size_t c, RngStream& rng) {
  RealTensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

// Central finite differences over every entry of a single leaf.
double max_fd_error(const RealTensor& x0, const std::function<Var(Graph&, Var)>& f) {
  Graph g;
  Var x = g.leaf(x0);
  Var y = f(g, x);
  auto analytic = grad(y, {x})[0];
  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    RealTensor xp = x0, xm = x0;
    xp[i] += h;
    xm[i] -= h;
    Graph gp(false), gm(false);
    const double fp = f(gp, gp.constant(xp)).item();
    const double fm = f(gm, gm.constant(xm)).item();
    worst = std::max(worst, relative_error(analytic[i], (fp - fm) / (2 * h)));
  }
  return worst;
}

}  // namespace

TEST_CASE("rng streams replay bit for bit and children differ") {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a(), y = b(), z = c();
    CHECK(x == y);
    differs = differs || x != z;
  }
  CHECK(differs);
  RngStream p(5, 0);
  auto c1 = p.child(1), c1b = p.child(1), c2 = p.child(2);
  CHECK(c1() == c1b());
  CHECK(c1.uniform() != c2.uniform());
  RngStream u(1, 1);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    CHECK(u.index(7) < 7);
  }
}

TEST_CASE("zero covariance samples the zero vector") {
  RngStream rng(3);
  ComplexMatrix z = ComplexMatrix::Zero(2, 2);
  for (int i = 0; i < 10; ++i) CHECK(sample_complex_gaussian(z, rng).norm() == 0.0);
}

TEST_CASE("identity covariance is recovered from 1e5 draws") {
  RngStream rng(11);
  GaussianSampler s(ComplexMatrix::Identity(4, 4));
  ComplexMatrix acc = ComplexMatrix::Zero(4, 4);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    ComplexVector v = s.sample(rng);
    acc += v * v.adjoint();
  }
  acc /= draws;
  CHECK((acc - ComplexMatrix::Identity(4, 4)).norm() < 0.05);
}

TEST_CASE("diag(4,1) covariance: first-entry variance in [3.8, 4.2]") {
  RngStream rng(12);
  ComplexMatrix cov = ComplexMatrix::Zero(2, 2);
  cov(0, 0) = 4.0;
  cov(1, 1) = 1.0;
  double var = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) var += std::norm(sample_complex_gaussian(cov, rng)(0));
  var /= draws;
  CHECK(var >= 3.8);
  CHECK(var <= 4.2);
}

TEST_CASE("dense correlated covariance is sampled through the eigen factor") {
  RngStream rng(13);
  ComplexMatrix cov = random_pd(3, rng);
  GaussianSampler s(cov);
  ComplexMatrix acc = ComplexMatrix::Zero(3, 3);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    ComplexVector v = s.sample(rng);
    acc += v * v.adjoint();
  }
  acc /= draws;
  CHECK((acc - cov).norm() / cov.norm() < 0.03);
}

TEST_CASE("psd factor reconstructs its input and rejects indefinite matrices") {
  RngStream rng(14);
  for (int n : {1, 2, 5, 8}) {
    ComplexMatrix cov = random_pd(n, rng);
    ComplexMatrix l = psd_factor(cov);
    CHECK((l * l.adjoint() - cov).norm() <= 1e-10 * cov.norm());
  }
  // Rank-deficient but PSD: accepted.
  ComplexVector u(3);
  u << cplx(1, 0), cplx(0, 1), cplx(2, -1);
  ComplexMatrix rank1 = u * u.adjoint();
  ComplexMatrix l = psd_factor(rank1);
  CHECK((l * l.adjoint() - rank1).norm() <= 1e-10 * rank1.norm());

  ComplexMatrix bad = ComplexMatrix::Identity(2, 2);
  bad(1, 1) = -0.5;
  CHECK_THROWS_AS(psd_factor(bad), NumericError);
  CHECK_THROWS_AS(sample_complex_gaussian(bad, rng), NumericError);
}

TEST_CASE("hermitian solve: identity, diagonal and random PD systems") {
  ComplexVector b(3);
  b << 1.0, 2.0, 3.0;
  CHECK((hermitian_solve(ComplexMatrix::Identity(3, 3), b) - b).norm() < 1e-15);

  ComplexMatrix d = ComplexMatrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 4.0;
  ComplexVector b2(2);
  b2 << 2.0, 4.0;
  ComplexVector x2 = hermitian_solve(d, b2);
  CHECK(std::abs(x2(0) - 1.0) < 1e-15);
  CHECK(std::abs(x2(1) - 1.0) < 1e-15);

  RngStream rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    ComplexMatrix a = random_pd(6, rng);
    ComplexVector rhs(6);
    for (int i = 0; i < 6; ++i) rhs(i) = rng.complex_normal();
    ComplexVector x = hermitian_solve(a, rhs);
    CHECK((a * x - rhs).norm() <= 1e-9 * rhs.norm());
  }
  ComplexMatrix singular = ComplexMatrix::Zero(2, 2);
  singular(0, 0) = 1.0;
  try {
    hermitian_solve(singular, b2);
    FAIL("expected a failure");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("condition number") != std::string::npos);
  }
}

TEST_CASE("grad of x*x at 3 is 6") {
  Graph g;
  Var x = g.leaf(RealTensor::scalar(3.0));
  auto gx = grad(mul(x, x), {x});
  CHECK(gx[0][0] == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("grad of sum(W v) is v broadcast across rows") {
  Graph g;
  Var w = g.leaf(RealTensor::from_rows({{1, 2, 3}, {4, 5, 6}}));
  Var v = g.constant(RealTensor::from_rows({{0.5}, {-1.0}, {2.0}}));
  auto gw = grad(sum(matmul(w, v)), {w})[0];
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(gw(r, 0) == 0.5);
    CHECK(gw(r, 1) == -1.0);
    CHECK(gw(r, 2) == 2.0);
  }
}

TEST_CASE("non-scalar outputs are rejected and unreachable leaves get zeros") {
  Graph g;
  Var x = g.leaf(RealTensor(2, 2, 1.0));
  Var y = g.leaf(RealTensor(1, 1, 1.0));
  CHECK_THROWS(g.backward(x));
  auto gr = grad(sum(x), {x, y});
  CHECK(gr[1][0] == 0.0);
}

TEST_CASE("every primitive matches central differences") {
  RngStream rng(21);
  const double tol = 1e-4;
  auto m34 = random_tensor(3, 4, rng);
  auto w = random_tensor(4, 5, rng);
  auto row = random_tensor(1, 4, rng);
  auto pos = m34;
  for (auto& v : pos.values()) v = std::abs(v) + 0.5;
  const auto w38 = random_tensor(3, 8, rng);
  const auto kv64 = random_tensor(6, 4, rng);
  const auto q64 = random_tensor(6, 4, rng);

  struct Case {
    const char* name;
    RealTensor x;
    std::function<Var(Graph&, Var)> f;
  };
  std::vector<Case> cases = {
      {"matmul", m34, [&](Graph& g, Var x) { return sum(square(matmul(x, g.constant(w)))); }},
      {"matmul rhs", w, [&](Graph& g, Var x) { return sum(tanh(matmul(g.constant(m34), x))); }},
      {"add broadcast", row, [&](Graph& g, Var x) { return sum(square(add(g.constant(m34), x))); }},
      {"sub broadcast", m34, [&](Graph& g, Var x) { return sum(square(sub(g.constant(row), x))); }},
      {"mul broadcast", row, [&](Graph& g, Var x) { return sum(tanh(mul(g.constant(m34), x))); }},
      {"div", pos, [&](Graph& g, Var x) { return sum(div(g.constant(m34), x)); }},
      {"scale/add_scalar", m34, [](Graph&, Var x) { return sum(square(add_scalar(scale(x, 1.7), 0.3))); }},
      {"tanh", m34, [](Graph&, Var x) { return sum(tanh(x)); }},
      {"relu", m34, [](Graph&, Var x) { return sum(square(relu(x))); }},
      {"leaky relu", m34, [](Graph&, Var x) { return sum(square(leaky_relu(x, 0.01))); }},
      {"sigmoid", m34, [](Graph&, Var x) { return sum(sigmoid(x)); }},
      {"softplus", m34, [](Graph&, Var x) { return sum(square(softplus(x))); }},
      {"exp/log", pos, [](Graph&, Var x) { return sum(mul(exp(scale(x, 0.3)), log(x))); }},
      {"sqrt", pos, [](Graph&, Var x) { return sum(sqrt(x)); }},
      {"mean", m34, [](Graph&, Var x) { return mean(square(x)); }},
      {"sum_rows/cols", m34, [](Graph&, Var x) { return add(sum(square(sum_rows(x))), sum(square(sum_cols(x)))); }},
      {"group_sum", random_tensor(6, 3, rng), [](Graph&, Var x) { return sum(square(group_sum(x, 3))); }},
      {"group_max", random_tensor(6, 3, rng), [](Graph&, Var x) { return sum(square(group_max(x, 2))); }},
      {"segment_max", random_tensor(5, 3, rng),
       [](Graph&, Var x) { return sum(square(segment_max(x, {0, 2, 2, 5}))); }},
      {"segment_sum", random_tensor(5, 3, rng),
       [](Graph&, Var x) { return sum(square(segment_sum(x, {0, 1, 3, 5}))); }},
      {"repeat/gather", m34,
       [](Graph&, Var x) { return sum(square(gather_rows(repeat_rows(x, 2), {5, 0, 0, 3}))); }},
      {"concat", m34,
       [&](Graph& g, Var x) {
         Var c = concat_cols({x, g.constant(m34), square(x)});
         Var r = concat_rows({c, c});
         return sum(tanh(r));
       }},
      {"slice/reshape/transpose", m34,
       [](Graph&, Var x) {
         Var s = slice_rows(slice_cols(x, 1, 3), 1, 2);
         return sum(square(matmul(transpose(reshape(s, 3, 2)), reshape(x, 3, 4))));
       }},
      {"softmax", m34, [&](Graph& g, Var x) { return sum(mul(softmax_rows(x), g.constant(m34))); }},
      {"log_softmax", m34, [&](Graph& g, Var x) { return sum(mul(log_softmax_rows(x), g.constant(m34))); }},
      {"row_vecmat x", random_tensor(3, 2, rng),
       [&](Graph& g, Var x) { return sum(square(row_vecmat(x, g.constant(w38), 4))); }},
      {"row_vecmat w", random_tensor(3, 8, rng),
       [&](Graph& g, Var x) { return sum(square(row_vecmat(g.constant(RealTensor(3, 2, 0.7)), x, 4))); }},
      {"rowwise_dot", m34, [&](Graph& g, Var x) { return sum(square(rowwise_dot(x, tanh(x)))); }},
      {"group_gram", random_tensor(6, 3, rng), [](Graph&, Var x) { return sum(tanh(group_gram(x, 3))); }},
      {"attention q", random_tensor(6, 4, rng),
       [&](Graph& g, Var x) {
         Var kv = g.constant(kv64);
         return sum(square(group_attention(x, kv, kv, 3, 2)));
       }},
      {"attention kv", random_tensor(6, 4, rng),
       [&](Graph& g, Var x) {
         Var q = g.constant(q64);
         return sum(square(group_attention(q, x, tanh(x), 2, 2)));
       }},
      {"gumbel softmax at fixed noise", m34,
       [&](Graph& g, Var x) {
         RealTensor noise(3, 4);
         RngStream local(99);
         for (auto& v : noise.values()) v = local.gumbel();
         Var y = softmax_rows(scale(add(x, g.constant(noise)), 1.0 / 0.7));
         return sum(mul(y, g.constant(m34)));
       }},
  };
  for (auto& c : cases) {
    const double err = max_fd_error(c.x, c.f);
    INFO(std::string(c.name));
    CHECK(err < tol);
  }
}

TEST_CASE("straight-through forwards the hard value and routes the gradient to the soft input") {
  Graph g;
  Var soft = g.leaf(RealTensor::from_rows({{0.3, 0.8}}));
  Var hard = g.constant(RealTensor::from_rows({{0.0, 1.0}}));
  Var st = straight_through(hard, soft);
  CHECK(st.value()(0, 0) == 0.0);
  CHECK(st.value()(0, 1) == 1.0);
  auto gs = grad(sum(scale(st, 3.0)), {soft})[0];
  CHECK(gs(0, 0) == 3.0);
  CHECK(gs(0, 1) == 3.0);
  Graph g2;
  Var a = g2.leaf(RealTensor::scalar(2.0));
  CHECK(grad(sum(mul(stop_gradient(a), a)), {a})[0][0] == 2.0);
}

TEST_CASE("gradient is linear in the loss") {
  RngStream rng(31);
  auto x0 = random_tensor(3, 3, rng);
  auto f = [](Var x) { return sum(tanh(matmul(x, x))); };
  auto h = [](Var x) { return sum(square(sigmoid(x))); };
  const double a = 0.7, b = -2.3;
  Graph g1, g2, g3;
  Var x1 = g1.leaf(x0), x2 = g2.leaf(x0), x3 = g3.leaf(x0);
  auto gf = grad(f(x1), {x1})[0];
  auto gh = grad(h(x2), {x2})[0];
  auto gc = grad(add(scale(f(x3), a), scale(h(x3), b)), {x3})[0];
  for (std::size_t i = 0; i < x0.size(); ++i) CHECK(std::abs(gc[i] - (a * gf[i] + b * gh[i])) <= 1e-10);
}

TEST_CASE("group_sum is bit-identical under row reordering") {
  RngStream rng(41);
  auto x = random_tensor(5, 7, rng);
  Graph g(false);
  auto ref = group_sum(g.constant(x), 5).value();
  std::vector<std::size_t> perm = {0, 1, 2, 3, 4};
  for (int t = 0; t < 30; ++t) {
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    auto y = group_sum(gather_rows(g.constant(x), perm), 5).value();
    CHECK(y == ref);
  }
}

TEST_CASE("segments with no rows pool to zero") {
  Graph g(false);
  Var x = g.constant(RealTensor::from_rows({{-3, -4}, {-1, -2}}));
  auto m = segment_max(x, {0, 0, 2}).value();
  CHECK(m(0, 0) == 0.0);
  CHECK(m(1, 0) == -1.0);
  CHECK(m(1, 1) == -2.0);
}

TEST_CASE("parameter store checkpoints round-trip and reject mismatches") {
  RngStream rng(51);
  ParamStore s;
  auto mlp = Mlp::create(s, "net", {3, 4, 2}, rng);
  auto doc = to_checkpoint(s);
  ParamStore t;
  RngStream other(52);
  Mlp::create(t, "net", {3, 4, 2}, other);
  load_checkpoint(t, doc);
  CHECK(t.flat_values() == s.flat_values());
  ParamStore wrong;
  Mlp::create(wrong, "net", {3, 5, 2}, other);
  CHECK_THROWS(load_checkpoint(wrong, doc));
  auto parsed = nlohmann::json::parse(doc.dump());
  load_checkpoint(t, parsed);
  CHECK(t.flat_values() == s.flat_values());
  (void)mlp;
}

TEST_CASE("gradient clipping, polyak tracking and Adam descent") {
  ParamStore s;
  s.add("a", RealTensor::from_rows({{3.0, 4.0}}));
  s[0].grad = RealTensor::from_rows({{3.0, 4.0}});
  const double pre = clip_grad_norm(s, 0.5);
  CHECK(pre == doctest::Approx(5.0));
  CHECK(s.grad_norm() == doctest::Approx(0.5).epsilon(1e-12));

  ParamStore online, target;
  online.add("w", RealTensor::from_rows({{1.0, -2.0}}));
  target.add("w", RealTensor::from_rows({{0.0, 0.0}}));
  const double tau = 0.01;
  const double d0 = std::sqrt(5.0);
  for (int u = 1; u <= 50; ++u) {
    polyak_update(target, online, tau);
    double d = 0.0;
    for (std::size_t j = 0; j < 2; ++j) d += std::pow(target[0].value[j] - online[0].value[j], 2);
    CHECK(std::abs(std::sqrt(d) - d0 * std::pow(1.0 - tau, u)) < 1e-9);
  }

  ParamStore q;
  q.add("x", RealTensor::from_rows({{2.0, -1.0}}));
  Adam opt(q, 0.05);
  double last = 1e9;
  for (int i = 0; i < 200; ++i) {
    q.zero_grad();
    Graph g;
    Var l = sum(square(g.param(q, 0)));
    last = l.item();
    g.backward(l);
    opt.step(q);
  }
  CHECK(last < 1e-3);
}

TEST_CASE("a small MLP passes the finite-difference checker") {
  RngStream rng(61);
  ParamStore s;
  auto mlp = Mlp::create(s, "m", {4, 6, 3}, rng, Activation::kTanh);
  auto cell = ReluRnnCell::create(s, "rnn", 3, 5, rng);
  auto x = random_tensor(7, 4, rng);
  auto loss = [&](Graph& g, ParamStore& st) {
    Var h0 = g.constant(RealTensor(7, 5, 0.0));
    Var h1 = cell(g, st, mlp(g, st, g.constant(x)), h0);
    Var h2 = cell(g, st, mlp(g, st, g.constant(x)), h1);
    return mean(square(h2));
  };
  auto report = check_gradients(s, loss, 25, rng);
  CHECK(report.entries.size() == 25);
  CHECK(report.passed(1e-4));
}
