// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/numeric/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cfmimo::numeric {

const RealTensor& Var::value() const { return g->value_of(id); }

double Var::item() const {
  const auto& v = value();
  if (v.size() != 1) throw std::invalid_argument("Var::item: not a scalar");
  return v[0];
}

Var Graph::constant(RealTensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::param(ParamStore& store, std::size_t index) {
  Node n;
  n.value = store[index].value;
  n.requires_grad = track_;
  n.store = &store;
  n.param_index = index;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::param(ParamStore& store, const std::string& name) {
  for (std::size_t i = 0; i < store.size(); ++i)
    if (store[i].name == name) return param(store, i);
  throw std::out_of_range("Graph::param: no parameter " + name);
}

Var Graph::leaf(RealTensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = track_;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::push(RealTensor value, std::vector<std::size_t> parents, Backward fn) {
  Node n;
  n.value = std::move(value);
  if (track_) {
    for (auto p : parents)
      if (nodes_[p].requires_grad) n.requires_grad = true;
    if (n.requires_grad) n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

RealTensor& Graph::grad_slot(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape()) n.grad = RealTensor(n.value.shape(), 0.0);
  return n.grad;
}

void Graph::backward(Var out, bool accumulate) {
  if (out.g != this) throw std::invalid_argument("Graph::backward: variable from another graph");
  if (nodes_[out.id].value.size() != 1) throw std::invalid_argument("Graph::backward: output is not a scalar");
  for (auto& n : nodes_) n.grad = RealTensor();
  if (!nodes_[out.id].requires_grad) return;
  grad_slot(out.id)[0] = 1.0;
  for (std::size_t i = out.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
  }
  if (!accumulate) return;
  for (auto& n : nodes_) {
    if (n.store == nullptr || n.grad.size() == 0) continue;
    auto& dst = (*n.store)[n.param_index].grad;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += n.grad[j];
  }
}

const RealTensor& Graph::grad_of(Var v) const { return nodes_[v.id].grad; }

std::vector<RealTensor> grad(Var out, const std::vector<Var>& wrt) {
  out.g->backward(out, false);
  std::vector<RealTensor> result;
  result.reserve(wrt.size());
  for (auto v : wrt) {
    const auto& gv = out.g->grad_of(v);
    result.push_back(gv.size() == v.value().size() ? gv : RealTensor(v.value().shape(), 0.0));
  }
  return result;
}

namespace {

struct Broadcast {
  std::size_t rows, cols;
  std::size_t ar, ac, br, bc;
};

Broadcast broadcast_shape(const RealTensor& a, const RealTensor& b, const char* op) {
  Broadcast s{0, 0, a.rows(), a.cols(), b.rows(), b.cols()};
  auto merge = [&](std::size_t x, std::size_t y) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw std::invalid_argument(std::string(op) + ": incompatible shapes");
  };
  s.rows = merge(s.ar, s.br);
  s.cols = merge(s.ac, s.bc);
  return s;
}

inline std::size_t bidx(std::size_t r, std::size_t c, std::size_t R, std::size_t C) {
  return (R == 1 ? 0 : r) * C + (C == 1 ? 0 : c);
}

template <typename F, typename DA, typename DB>
Var binary(Var a, Var b, const char* name, F f, DA da, DB db) {
  Graph& g = *a.g;
  const RealTensor& av = a.value();
  const RealTensor& bv = b.value();
  const Broadcast s = broadcast_shape(av, bv, name);
  RealTensor out(s.rows, s.cols);
  const bool same = s.ar == s.br && s.ac == s.bc;
  if (same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
  } else {
    for (std::size_t r = 0; r < s.rows; ++r)
      for (std::size_t c = 0; c < s.cols; ++c)
        out(r, c) = f(av[bidx(r, c, s.ar, s.ac)], bv[bidx(r, c, s.br, s.bc)]);
  }
  const std::size_t ia = a.id, ib = b.id;
  return g.push(std::move(out), {ia, ib}, [ia, ib, s, da, db](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    const RealTensor& av = gr.value_of(ia);
    const RealTensor& bv = gr.value_of(ib);
    const bool need_a = gr.requires_grad(ia), need_b = gr.requires_grad(ib);
    RealTensor* ga = need_a ? &gr.grad_slot(ia) : nullptr;
    RealTensor* gb = need_b ? &gr.grad_slot(ib) : nullptr;
    for (std::size_t r = 0; r < s.rows; ++r)
      for (std::size_t c = 0; c < s.cols; ++c) {
        const std::size_t o = r * s.cols + c;
        const std::size_t xa = bidx(r, c, s.ar, s.ac), xb = bidx(r, c, s.br, s.bc);
        if (ga) (*ga)[xa] += go[o] * da(av[xa], bv[xb]);
        if (gb) (*gb)[xb] += go[o] * db(av[xa], bv[xb]);
      }
  });
}

// Elementwise unary op whose derivative is expressed through input x and output y.
template <typename F, typename D>
Var unary(Var a, F f, D d) {
  Graph& g = *a.g;
  const RealTensor& av = a.value();
  RealTensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  const std::size_t ia = a.id;
  return g.push(std::move(out), {ia}, [ia, d](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    const RealTensor& x = gr.value_of(ia);
    const RealTensor& y = gr.value_of(self);
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += go[i] * d(x[i], y[i]);
  });
}

void check_same_graph(Var a, Var b) {
  if (a.g != b.g) throw std::invalid_argument("autodiff: operands live on different graphs");
}

}  // namespace

Var matmul(Var a, Var b) {
  check_same_graph(a, b);
  RealTensor out = matmul(a.value(), b.value());
  const std::size_t ia = a.id, ib = b.id;
  return a.g->push(std::move(out), {ia, ib}, [ia, ib](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    const RealTensor& av = gr.value_of(ia);
    const RealTensor& bv = gr.value_of(ib);
    if (gr.requires_grad(ia)) matmul_nt_accumulate(go, bv, gr.grad_slot(ia));
    if (gr.requires_grad(ib)) matmul_tn_accumulate(av, go, gr.grad_slot(ib));
  });
}

Var add(Var a, Var b) {
  check_same_graph(a, b);
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  check_same_graph(a, b);
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  check_same_graph(a, b);
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var div(Var a, Var b) {
  check_same_graph(a, b);
  return binary(
      a, b, "div", [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var softplus(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](double x, double) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sqrt(Var a) {
  return unary(a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var sum(Var a) {
  const RealTensor& av = a.value();
  double s = 0.0;
  for (double v : av.values()) s += v;
  const std::size_t ia = a.id;
  return a.g->push(RealTensor::scalar(s), {ia}, [ia](Graph& gr, std::size_t self) {
    const double go = gr.upstream(self)[0];
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go;
  });
}

Var mean(Var a) {
  const auto n = a.value().size();
  if (n == 0) throw std::invalid_argument("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var sum_rows(Var a) {
  const RealTensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  RealTensor out(1, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += av(i, j);
  const std::size_t ia = a.id;
  return a.g->push(std::move(out), {ia}, [ia, r, c](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga(i, j) += go[j];
  });
}

Var sum_cols(Var a) {
  const RealTensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  RealTensor out(r, 1);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i] += av(i, j);
  const std::size_t ia = a.id;
  return a.g->push(std::move(out), {ia}, [ia, r, c](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga(i, j) += go[i];
  });
}

Var group_sum(Var a, std::size_t group) {
  const RealTensor& av = a.value();
  if (group == 0 || av.rows() % group != 0) throw std::invalid_argument("group_sum: rows not divisible by group");
  const std::size_t n = av.rows() / group, c = av.cols();
  RealTensor out(n, c);
  std::vector<std::size_t> order(group);
  for (std::size_t s = 0; s < n; ++s) {
    std::iota(order.begin(), order.end(), s * group);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      auto rx = av.row_span(x), ry = av.row_span(y);
      return std::lexicographical_compare(rx.begin(), rx.end(), ry.begin(), ry.end());
    });
    for (std::size_t r : order)
      for (std::size_t j = 0; j < c; ++j) out(s, j) += av(r, j);
  }
  const std::size_t ia = a.id;
  return a.g->push(std::move(out), {ia}, [ia, group, c](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t j = 0; j < c; ++j) ga(r, j) += go(r / group, j);
  });
}

Var group_max(Var a, std::size_t group) {
  const RealTensor& av = a.value();
  if (group == 0 || av.rows() % group != 0) throw std::invalid_argument("group_max: rows not divisible by group");
  std::vector<std::size_t> offsets(av.rows() / group + 1);
  for (std::size_t s = 0; s < offsets.size(); ++s) offsets[s] = s * group;
  return segment_max(a, offsets);
}

Var segment_sum(Var a, const std::vector<std::size_t>& offsets) {
  const RealTensor& av = a.value();
  if (offsets.empty() || offsets.back() > av.rows()) throw std::invalid_argument("segment_sum: bad offsets");
  const std::size_t n = offsets.size() - 1, c = av.cols();
  RealTensor out(n, c);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r)
      for (std::size_t j = 0; j < c; ++j) out(s, j) += av(r, j);
  const std::size_t ia = a.id;
  return a.g->push(std::move(out), {ia}, [ia, offsets, c](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s)
      for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r)
        for (std::size_t j = 0; j < c; ++j) ga(r, j) += go(s, j);
  });
}

Var segment_max(Var a, const std::vector<std::size_t>& offsets) {
  const RealTensor& av = a.value();
  if (offsets.empty() || offsets.back() > av.rows()) throw std::invalid_argument("segment_max: bad offsets");
  const std::size_t n = offsets.size() - 1, c = av.cols();
  RealTensor out(n, c);
  // argmax row per (segment, column); the first maximal row wins ties.
  std::vector<std::size_t> arg(n * c, static_cast<std::size_t>(-1));
  for (std::size_t s = 0; s < n; ++s) {
    if (offsets[s] == offsets[s + 1]) continue;
    for (std::size_t j = 0; j < c; ++j) {
      std::size_t best = offsets[s];
      for (std::size_t r = offsets[s] + 1; r < offsets[s + 1]; ++r)
        if (av(r, j) > av(best, j)) best = r;
      out(s, j) = av(best, j);
      arg[s * c + j] = best;
    }
  }
  const std::size_t ia = a.id;
  return a.g->push(std::move(out), {ia}, [ia, arg = std::move(arg), c](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t i = 0; i < arg.size(); ++i)
      if (arg[i] != static_cast<std::size_t>(-1)) ga(arg[i], i % c) += go[i];
  });
}

Var repeat_rows(Var a, std::size_t times) {
  const RealTensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  RealTensor out(r * times, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t t = 0; t < times; ++t)
      std::copy_n(av.data() + i * c, c, out.data() + (i * times + t) * c);
  const std::size_t ia = a.id;
  return a.g->push(std::move(out), {ia}, [ia, times, c](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t o = 0; o < go.rows(); ++o)
      for (std::size_t j = 0; j < c; ++j) ga(o / times, j) += go(o, j);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  std::vector<std::size_t> ids, widths;
  for (auto p : parts) {
    check_same_graph(parts[0], p);
    if (p.rows() != r) throw std::invalid_argument("concat_cols: row counts differ");
    ids.push_back(p.id);
    widths.push_back(p.cols());
    c += p.cols();
  }
  RealTensor out(r, c);
  std::size_t off = 0;
  for (auto p : parts) {
    const RealTensor& v = p.value();
    for (std::size_t i = 0; i < r; ++i) std::copy_n(v.data() + i * v.cols(), v.cols(), out.data() + i * c + off);
    off += v.cols();
  }
  return parts[0].g->push(std::move(out), ids, [ids, widths, r, c](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (gr.requires_grad(ids[k])) {
        RealTensor& gk = gr.grad_slot(ids[k]);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) gk(i, j) += go(i, off + j);
      }
      off += widths[k];
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  std::vector<std::size_t> ids, heights;
  for (auto p : parts) {
    check_same_graph(parts[0], p);
    if (p.cols() != c) throw std::invalid_argument("concat_rows: column counts differ");
    ids.push_back(p.id);
    heights.push_back(p.rows());
    r += p.rows();
  }
  RealTensor out(r, c);
  std::size_t off = 0;
  for (auto p : parts) {
    std::copy(p.value().values().begin(), p.value().values().end(), out.data() + off * c);
    off += p.rows();
  }
  return parts[0].g->push(std::move(out), ids, [ids, heights, c](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (gr.requires_grad(ids[k])) {
        RealTensor& gk = gr.grad_slot(ids[k]);
        for (std::size_t i = 0; i < heights[k] * c; ++i) gk[i] += go[off * c + i];
      }
      off += heights[k];
    }
  });
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  const RealTensor& av = a.value();
  if (start + count > av.cols()) throw std::invalid_argument("slice_cols: out of range");
  const std::size_t r = av.rows();
  RealTensor out(r, count);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = av(i, start + j);
  const std::size_t ia = a.id;
  return a.g->push(std::move(out), {ia}, [ia, start, count, r](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < count; ++j) ga(i, start + j) += go(i, j);
  });
}

Var slice_rows(Var a, std::size_t start, std::size_t count) {
  const RealTensor& av = a.value();
  if (start + count > av.rows()) throw std::invalid_argument("slice_rows: out of range");
  const std::size_t c = av.cols();
  RealTensor out(count, c);
  std::copy_n(av.data() + start * c, count * c, out.data());
  const std::size_t ia = a.id;
  return a.g->push(std::move(out), {ia}, [ia, start, count, c](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t i = 0; i < count * c; ++i) ga[start * c + i] += go[i];
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  RealTensor out = a.value().reshaped({rows, cols});
  const std::size_t ia = a.id;
  return a.g->push(std::move(out), {ia}, [ia](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
  });
}

Var transpose(Var a) {
  RealTensor out = transpose(a.value());
  const std::size_t ia = a.id;
  return a.g->push(std::move(out), {ia}, [ia](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t i = 0; i < go.rows(); ++i)
      for (std::size_t j = 0; j < go.cols(); ++j) ga(j, i) += go(i, j);
  });
}

Var gather_rows(Var a, const std::vector<std::size_t>& index) {
  const RealTensor& av = a.value();
  const std::size_t c = av.cols();
  RealTensor out(index.size(), c);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= av.rows()) throw std::invalid_argument("gather_rows: index out of range");
    std::copy_n(av.data() + index[i] * c, c, out.data() + i * c);
  }
  const std::size_t ia = a.id;
  return a.g->push(std::move(out), {ia}, [ia, index, c](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t i = 0; i < index.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) ga(index[i], j) += go(i, j);
  });
}

Var softmax_rows(Var a) {
  const RealTensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  RealTensor out(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double mx = av(i, 0);
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, av(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += out(i, j) = std::exp(av(i, j) - mx);
    for (std::size_t j = 0; j < c; ++j) out(i, j) /= s;
  }
  const std::size_t ia = a.id;
  return a.g->push(std::move(out), {ia}, [ia, r, c](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    const RealTensor& y = gr.value_of(self);
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += go(i, j) * y(i, j);
      for (std::size_t j = 0; j < c; ++j) ga(i, j) += y(i, j) * (go(i, j) - dot);
    }
  });
}

Var log_softmax_rows(Var a) {
  const RealTensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  RealTensor out(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double mx = av(i, 0);
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, av(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(av(i, j) - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < c; ++j) out(i, j) = av(i, j) - lse;
  }
  const std::size_t ia = a.id;
  return a.g->push(std::move(out), {ia}, [ia, r, c](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    const RealTensor& y = gr.value_of(self);
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t i = 0; i < r; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j) s += go(i, j);
      for (std::size_t j = 0; j < c; ++j) ga(i, j) += go(i, j) - std::exp(y(i, j)) * s;
    }
  });
}

Var row_vecmat(Var x, Var w, std::size_t d) {
  check_same_graph(x, w);
  const RealTensor& xv = x.value();
  const RealTensor& wv = w.value();
  const std::size_t n = xv.rows(), f = xv.cols();
  if (wv.rows() != n || wv.cols() != f * d) throw std::invalid_argument("row_vecmat: weight shape mismatch");
  RealTensor out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.data() + i * d;
    const double* wr = wv.data() + i * f * d;
    for (std::size_t p = 0; p < f; ++p) {
      const double xp = xv(i, p);
      const double* wp = wr + p * d;
      for (std::size_t j = 0; j < d; ++j) o[j] += xp * wp[j];
    }
  }
  const std::size_t ix = x.id, iw = w.id;
  return x.g->push(std::move(out), {ix, iw}, [ix, iw, n, f, d](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    const RealTensor& xv = gr.value_of(ix);
    const RealTensor& wv = gr.value_of(iw);
    RealTensor* gx = gr.requires_grad(ix) ? &gr.grad_slot(ix) : nullptr;
    RealTensor* gw = gr.requires_grad(iw) ? &gr.grad_slot(iw) : nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      const double* gor = go.data() + i * d;
      for (std::size_t p = 0; p < f; ++p) {
        if (gx) {
          const double* wp = wv.data() + i * f * d + p * d;
          double s = 0.0;
          for (std::size_t j = 0; j < d; ++j) s += gor[j] * wp[j];
          (*gx)(i, p) += s;
        }
        if (gw) {
          const double xp = xv(i, p);
          double* gwp = gw->data() + i * f * d + p * d;
          for (std::size_t j = 0; j < d; ++j) gwp[j] += xp * gor[j];
        }
      }
    }
  });
}

Var rowwise_dot(Var a, Var b) {
  check_same_graph(a, b);
  const RealTensor& av = a.value();
  const RealTensor& bv = b.value();
  if (av.shape() != bv.shape()) throw std::invalid_argument("rowwise_dot: shapes differ");
  const std::size_t n = av.rows(), d = av.cols();
  RealTensor out(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += av(i, j) * bv(i, j);
    out[i] = s;
  }
  const std::size_t ia = a.id, ib = b.id;
  return a.g->push(std::move(out), {ia, ib}, [ia, ib, n, d](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    const RealTensor& av = gr.value_of(ia);
    const RealTensor& bv = gr.value_of(ib);
    if (gr.requires_grad(ia)) {
      RealTensor& ga = gr.grad_slot(ia);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) ga(i, j) += go[i] * bv(i, j);
    }
    if (gr.requires_grad(ib)) {
      RealTensor& gb = gr.grad_slot(ib);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) gb(i, j) += go[i] * av(i, j);
    }
  });
}

Var group_gram(Var a, std::size_t group) {
  const RealTensor& av = a.value();
  if (group == 0 || av.rows() % group != 0) throw std::invalid_argument("group_gram: rows not divisible by group");
  const std::size_t n = av.rows(), c = av.cols();
  RealTensor out(n, group);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t base = (i / group) * group;
    for (std::size_t j = 0; j < group; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < c; ++p) s += av(i, p) * av(base + j, p);
      out(i, j) = s;
    }
  }
  const std::size_t ia = a.id;
  return a.g->push(std::move(out), {ia}, [ia, group, n, c](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    const RealTensor& av = gr.value_of(ia);
    RealTensor& ga = gr.grad_slot(ia);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t base = (i / group) * group;
      for (std::size_t j = 0; j < group; ++j) {
        const double gij = go(i, j);
        if (gij == 0.0) continue;
        for (std::size_t p = 0; p < c; ++p) {
          ga(i, p) += gij * av(base + j, p);
          ga(base + j, p) += gij * av(i, p);
        }
      }
    }
  });
}

Var group_attention(Var q, Var k, Var v, std::size_t group, std::size_t heads) {
  check_same_graph(q, k);
  check_same_graph(q, v);
  const RealTensor& qv = q.value();
  const RealTensor& kv = k.value();
  const RealTensor& vv = v.value();
  const std::size_t n = qv.rows(), d = qv.cols();
  if (kv.shape() != qv.shape() || vv.shape() != qv.shape()) throw std::invalid_argument("group_attention: shapes differ");
  if (group == 0 || n % group != 0 || heads == 0 || d % heads != 0)
    throw std::invalid_argument("group_attention: bad group or head count");
  const std::size_t dh = d / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  // probs[(i * heads + h) * group + j]
  std::vector<double> probs(n * heads * group);
  RealTensor out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t base = (i / group) * group;
    for (std::size_t h = 0; h < heads; ++h) {
      double* pr = probs.data() + (i * heads + h) * group;
      double mx = -INFINITY;
      for (std::size_t j = 0; j < group; ++j) {
        double s = 0.0;
        for (std::size_t p = h * dh; p < (h + 1) * dh; ++p) s += qv(i, p) * kv(base + j, p);
        pr[j] = s * inv;
        mx = std::max(mx, pr[j]);
      }
      double z = 0.0;
      for (std::size_t j = 0; j < group; ++j) z += pr[j] = std::exp(pr[j] - mx);
      for (std::size_t j = 0; j < group; ++j) pr[j] /= z;
      for (std::size_t j = 0; j < group; ++j)
        for (std::size_t p = h * dh; p < (h + 1) * dh; ++p) out(i, p) += pr[j] * vv(base + j, p);
    }
  }
  const std::size_t iq = q.id, ik = k.id, iv = v.id;
  return q.g->push(
      std::move(out), {iq, ik, iv},
      [iq, ik, iv, group, heads, n, dh, inv, probs = std::move(probs)](Graph& gr, std::size_t self) {
        const RealTensor& go = gr.upstream(self);
        const RealTensor& qv = gr.value_of(iq);
        const RealTensor& kv = gr.value_of(ik);
        const RealTensor& vv = gr.value_of(iv);
        RealTensor* gq = gr.requires_grad(iq) ? &gr.grad_slot(iq) : nullptr;
        RealTensor* gk = gr.requires_grad(ik) ? &gr.grad_slot(ik) : nullptr;
        RealTensor* gv = gr.requires_grad(iv) ? &gr.grad_slot(iv) : nullptr;
        std::vector<double> dp(group);
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t base = (i / group) * group;
          for (std::size_t h = 0; h < heads; ++h) {
            const double* pr = probs.data() + (i * heads + h) * group;
            double dot = 0.0;
            for (std::size_t j = 0; j < group; ++j) {
              double s = 0.0;
              for (std::size_t p = h * dh; p < (h + 1) * dh; ++p) {
                s += go(i, p) * vv(base + j, p);
                if (gv) (*gv)(base + j, p) += pr[j] * go(i, p);
              }
              dp[j] = s;
              dot += pr[j] * s;
            }
            for (std::size_t j = 0; j < group; ++j) {
              const double ds = pr[j] * (dp[j] - dot) * inv;
              if (ds == 0.0) continue;
              for (std::size_t p = h * dh; p < (h + 1) * dh; ++p) {
                if (gq) (*gq)(i, p) += ds * kv(base + j, p);
                if (gk) (*gk)(base + j, p) += ds * qv(i, p);
              }
            }
          }
        }
      });
}

Var straight_through(Var hard, Var soft) {
  check_same_graph(hard, soft);
  if (hard.value().shape() != soft.value().shape()) throw std::invalid_argument("straight_through: shapes differ");
  RealTensor out = hard.value();
  const std::size_t is = soft.id;
  return hard.g->push(std::move(out), {is}, [is](Graph& gr, std::size_t self) {
    const RealTensor& go = gr.upstream(self);
    RealTensor& gs = gr.grad_slot(is);
    for (std::size_t i = 0; i < go.size(); ++i) gs[i] += go[i];
  });
}

Var stop_gradient(Var a) { return a.g->constant(a.value()); }

}  // namespace cfmimo::numeric
