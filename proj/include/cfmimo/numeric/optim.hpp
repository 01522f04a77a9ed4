// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "cfmimo/numeric/params.hpp"

namespace cfmimo::numeric {

/// Rescales all gradients so their joint L2 norm is at most max_norm. Returns the pre-clip norm.
double clip_grad_norm(ParamStore& store, double max_norm);

/// target <- (1 - tau) target + tau online. Stores must have identical layouts.
void polyak_update(ParamStore& target, const ParamStore& online, double tau);

class Adam {
 public:
  explicit Adam(const ParamStore& store, double lr = 0.01, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  /// Descends along the stored gradients.
  void step(ParamStore& store);
  [[nodiscard]] double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  [[nodiscard]] long steps() const { return t_; }

 private:
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Plain gradient step: value -= lr * grad.
void sgd_step(ParamStore& store, double lr);

}  // namespace cfmimo::numeric
