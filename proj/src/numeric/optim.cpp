// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/numeric/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace cfmimo::numeric {

double clip_grad_norm(ParamStore& store, double max_norm) {
  const double norm = store.grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& p : store)
      for (auto& g : p.grad.values()) g *= s;
  }
  return norm;
}

void polyak_update(ParamStore& target, const ParamStore& online, double tau) {
  if (target.size() != online.size()) throw std::invalid_argument("polyak_update: layouts differ");
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto& t = target[i].value;
    const auto& o = online[i].value;
    if (t.shape() != o.shape()) throw std::invalid_argument("polyak_update: shape mismatch at " + target[i].name);
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = (1.0 - tau) * t[j] + tau * o[j];
  }
}

Adam::Adam(const ParamStore& store, double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
  for (const auto& p : store) {
    m_.emplace_back(p.value.size(), 0.0);
    v_.emplace_back(p.value.size(), 0.0);
  }
}

void Adam::step(ParamStore& store) {
  if (store.size() != m_.size()) throw std::invalid_argument("Adam: store layout changed");
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store[i];
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m[j] = b1_ * m[j] + (1.0 - b1_) * g;
      v[j] = b2_ * v[j] + (1.0 - b2_) * g * g;
      p.value[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
    }
  }
}

void sgd_step(ParamStore& store, double lr) {
  for (auto& p : store)
    for (std::size_t j = 0; j < p.value.size(); ++j) p.value[j] -= lr * p.grad[j];
}

}  // namespace cfmimo::numeric
