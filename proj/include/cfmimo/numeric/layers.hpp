// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cfmimo/numeric/autodiff.hpp"
#include "cfmimo/numeric/params.hpp"
#include "cfmimo/numeric/rng.hpp"

namespace cfmimo::numeric {

enum class Activation { kNone, kRelu, kLeakyRelu, kTanh, kSigmoid };

Var activate(Var x, Activation act, double leaky_slope = 0.01);

/// y = x W + b. Layers hold parameter indices, not values, so any copy of the
/// owning ParamStore (for example a target network) can be evaluated.
struct Linear {
  std::size_t w = 0, b = 0;
  std::size_t in = 0, out = 0;
  bool bias = true;

  static Linear create(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, RngStream& rng,
                       bool bias = true, double gain = 1.0);
  Var operator()(Graph& g, ParamStore& store, Var x) const;
};

struct Mlp {
  std::vector<Linear> layers;
  Activation hidden = Activation::kRelu;
  Activation output = Activation::kNone;
  double leaky_slope = 0.01;

  /// widths = {in, h1, ..., out}.
  static Mlp create(ParamStore& store, const std::string& name, const std::vector<std::size_t>& widths,
                    RngStream& rng, Activation hidden = Activation::kRelu, Activation output = Activation::kNone,
                    double leaky_slope = 0.01);
  Var operator()(Graph& g, ParamStore& store, Var x) const;
  [[nodiscard]] std::size_t in() const { return layers.front().in; }
  [[nodiscard]] std::size_t out() const { return layers.back().out; }
};

/// Elman cell h' = relu(x Wx + h Wh + b).
struct ReluRnnCell {
  Linear input;
  Linear recurrent;
  std::size_t width = 0;

  static ReluRnnCell create(ParamStore& store, const std::string& name, std::size_t in, std::size_t width,
                            RngStream& rng);
  Var operator()(Graph& g, ParamStore& store, Var x, Var h) const;
};

}  // namespace cfmimo::numeric
