// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "cfmimo/numeric/params.hpp"
#include "cfmimo/numeric/tensor.hpp"

namespace cfmimo::numeric {

class Graph;

/// Handle to a node on a Graph tape. Cheap to copy; only valid while the graph lives.
struct Var {
  Graph* g = nullptr;
  std::size_t id = 0;

  [[nodiscard]] const RealTensor& value() const;
  [[nodiscard]] std::size_t rows() const { return value().rows(); }
  [[nodiscard]] std::size_t cols() const { return value().cols(); }
  [[nodiscard]] double item() const;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so walking the
/// tape backwards is a valid topological order. A graph built with
/// track = false records values only (no closures, no gradients).
class Graph {
 public:
  explicit Graph(bool track = true) : track_(track) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(RealTensor value);
  /// Leaf bound to a stored parameter; backward() adds its gradient into the store.
  Var param(ParamStore& store, std::size_t index);
  Var param(ParamStore& store, const std::string& name);
  /// Differentiable leaf that is not part of any store (used by tests and probes).
  Var leaf(RealTensor value);

  [[nodiscard]] bool tracking() const { return track_; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  /// out must be 1x1. When accumulate is set, parameter leaves add their
  /// gradient into the owning ParamStore.
  void backward(Var out, bool accumulate = true);
  [[nodiscard]] const RealTensor& grad_of(Var v) const;

  // Internal interface used by the op implementations.
  using Backward = std::function<void(Graph&, std::size_t)>;
  Var push(RealTensor value, std::vector<std::size_t> parents, Backward fn);
  [[nodiscard]] bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  RealTensor& grad_slot(std::size_t id);
  [[nodiscard]] const RealTensor& value_of(std::size_t id) const { return nodes_[id].value; }
  [[nodiscard]] const RealTensor& upstream(std::size_t id) const { return nodes_[id].grad; }

 private:
  struct Node {
    RealTensor value;
    RealTensor grad;
    bool requires_grad = false;
    Backward backward;
    ParamStore* store = nullptr;
    std::size_t param_index = 0;
  };
  bool track_;
  std::vector<Node> nodes_;
};

/// Gradients of a scalar with respect to the given nodes (zeros where unreachable).
std::vector<RealTensor> grad(Var out, const std::vector<Var>& wrt);

// Linear algebra and broadcasting arithmetic. Binary elementwise ops accept
// operands whose extents are equal or 1 in each dimension.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var neg(Var a);
inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

// Elementwise nonlinearities.
Var tanh(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope);
Var sigmoid(Var a);
Var softplus(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var sqrt(Var a);

// Reductions.
Var sum(Var a);
Var mean(Var a);
/// [r, c] -> [1, c].
Var sum_rows(Var a);
/// [r, c] -> [r, 1].
Var sum_cols(Var a);
/// Sums consecutive groups of `group` rows: [n*group, c] -> [n, c]. Each group
/// is summed in lexicographic order of its rows, so the result is bit-identical
/// under any reordering of rows within a group.
Var group_sum(Var a, std::size_t group);
/// Elementwise max over consecutive groups of rows.
Var group_max(Var a, std::size_t group);
/// Segment s covers rows [offsets[s], offsets[s+1]). Empty segments yield zero rows.
Var segment_sum(Var a, const std::vector<std::size_t>& offsets);
Var segment_max(Var a, const std::vector<std::size_t>& offsets);

// Structural ops.
/// Row i of the input becomes rows i*times .. i*times + times - 1.
Var repeat_rows(Var a, std::size_t times);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, std::size_t start, std::size_t count);
Var slice_rows(Var a, std::size_t start, std::size_t count);
Var reshape(Var a, std::size_t rows, std::size_t cols);
Var transpose(Var a);
Var gather_rows(Var a, const std::vector<std::size_t>& index);

Var softmax_rows(Var a);
Var log_softmax_rows(Var a);

/// y_i = x_i^T W_i where row i of w holds an f x d matrix in row-major order.
Var row_vecmat(Var x, Var w, std::size_t d);
/// [n, d] x [n, d] -> [n, 1].
Var rowwise_dot(Var a, Var b);
/// Within each group of rows, out(i, j) = a_i . a_(group start + j).  [n, c] -> [n, group].
Var group_gram(Var a, std::size_t group);
/// Multi-head scaled dot-product self-attention within consecutive row groups.
Var group_attention(Var q, Var k, Var v, std::size_t group, std::size_t heads);

/// Forward value of `hard`, gradient routed to `soft` (shapes must match).
Var straight_through(Var hard, Var soft);
Var stop_gradient(Var a);

}  // namespace cfmimo::numeric
