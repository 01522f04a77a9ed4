// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/numeric/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace cfmimo::numeric {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport check_gradients(ParamStore& store, const LossBuilder& loss, std::size_t samples, RngStream& rng,
                                double step) {
  GradCheckReport report;
  store.zero_grad();
  {
    Graph g;
    Var out = loss(g, store);
    g.backward(out);
  }
  for (const auto& p : store) {
    bool any = false;
    for (double v : p.grad.values()) any = any || v != 0.0;
    if (!any) report.dead_params.push_back(p.name);
  }

  // Round-robin over tensors so small bias vectors are sampled too.
  std::vector<std::size_t> order(store.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

  auto eval = [&]() {
    Graph g(false);
    return loss(g, store).item();
  };
  for (std::size_t s = 0; s < samples && !order.empty(); ++s) {
    auto& p = store[order[s % order.size()]];
    const std::size_t off = rng.index(p.value.size());
    const double orig = p.value[off];
    p.value[off] = orig + step;
    const double fp = eval();
    p.value[off] = orig - step;
    const double fm = eval();
    p.value[off] = orig;
    GradCheckEntry e{p.name, off, p.grad[off], (fp - fm) / (2.0 * step), 0.0};
    e.rel_error = relative_error(e.analytic, e.numeric);
    report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
    report.entries.push_back(e);
  }
  return report;
}

}  // namespace cfmimo::numeric
