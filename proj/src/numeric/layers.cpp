// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/numeric/layers.hpp"

#include <stdexcept>

namespace cfmimo::numeric {

Var activate(Var x, Activation act, double leaky_slope) {
  switch (act) {
    case Activation::kNone: return x;
    case Activation::kRelu: return relu(x);
    case Activation::kLeakyRelu: return leaky_relu(x, leaky_slope);
    case Activation::kTanh: return tanh(x);
    case Activation::kSigmoid: return sigmoid(x);
  }
  return x;
}

Linear Linear::create(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, RngStream& rng,
                      bool bias, double gain) {
  Linear l;
  l.in = in;
  l.out = out;
  l.bias = bias;
  l.w = store.add_xavier(name + ".w", in, out, rng, gain);
  if (bias) l.b = store.add_zeros(name + ".b", 1, out);
  return l;
}

Var Linear::operator()(Graph& g, ParamStore& store, Var x) const {
  if (x.cols() != in) throw std::invalid_argument("Linear: input width mismatch");
  Var y = matmul(x, g.param(store, w));
  return bias ? add(y, g.param(store, b)) : y;
}

Mlp Mlp::create(ParamStore& store, const std::string& name, const std::vector<std::size_t>& widths, RngStream& rng,
                Activation hidden, Activation output, double leaky_slope) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
  Mlp m;
  m.hidden = hidden;
  m.output = output;
  m.leaky_slope = leaky_slope;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i)
    m.layers.push_back(Linear::create(store, name + ".l" + std::to_string(i), widths[i], widths[i + 1], rng));
  return m;
}

Var Mlp::operator()(Graph& g, ParamStore& store, Var x) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = layers[i](g, store, x);
    x = activate(x, i + 1 == layers.size() ? output : hidden, leaky_slope);
  }
  return x;
}

ReluRnnCell ReluRnnCell::create(ParamStore& store, const std::string& name, std::size_t in, std::size_t width,
                                RngStream& rng) {
  ReluRnnCell c;
  c.width = width;
  c.input = Linear::create(store, name + ".in", in, width, rng);
  // Small recurrent gain keeps the ReLU recurrence from blowing up over an episode.
  c.recurrent = Linear::create(store, name + ".rec", width, width, rng, false, 0.5);
  return c;
}

Var ReluRnnCell::operator()(Graph& g, ParamStore& store, Var x, Var h) const {
  return relu(add(input(g, store, x), recurrent(g, store, h)));
}

}  // namespace cfmimo::numeric
