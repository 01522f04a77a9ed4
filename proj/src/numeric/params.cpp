// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/numeric/params.hpp"

#include <cmath>
#include <stdexcept>

namespace cfmimo::numeric {

std::size_t ParamStore::add(const std::string& name, RealTensor init) {
  if (index_.contains(name)) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
  Parameter p{name, std::move(init), {}};
  p.grad = RealTensor(p.value.shape(), 0.0);
  params_.push_back(std::move(p));
  index_[name] = params_.size() - 1;
  return params_.size() - 1;
}

std::size_t ParamStore::add_xavier(const std::string& name, std::size_t rows, std::size_t cols, RngStream& rng,
                                   double gain) {
  RealTensor t(rows, cols);
  const double a = gain * std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-a, a);
  return add(name, std::move(t));
}

std::size_t ParamStore::add_zeros(const std::string& name, std::size_t rows, std::size_t cols) {
  return add(name, RealTensor(rows, cols, 0.0));
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter " + name);
  return params_[it->second];
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter " + name);
  return params_[it->second];
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

double ParamStore::grad_norm() const {
  double s = 0.0;
  for (const auto& p : params_) s += p.grad.squared_norm();
  return std::sqrt(s);
}

bool ParamStore::grads_finite() const {
  for (const auto& p : params_)
    if (!p.grad.all_finite()) return false;
  return true;
}

std::vector<double> ParamStore::flat_values() const {
  std::vector<double> out;
  out.reserve(scalar_count());
  for (const auto& p : params_) out.insert(out.end(), p.value.values().begin(), p.value.values().end());
  return out;
}

void ParamStore::set_flat_values(const std::vector<double>& flat) {
  if (flat.size() != scalar_count()) throw std::invalid_argument("ParamStore::set_flat_values: size mismatch");
  std::size_t o = 0;
  for (auto& p : params_)
    for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = flat[o++];
}

std::vector<double> ParamStore::flat_grads() const {
  std::vector<double> out;
  out.reserve(scalar_count());
  for (const auto& p : params_) out.insert(out.end(), p.grad.values().begin(), p.grad.values().end());
  return out;
}

void ParamStore::append(const std::string& prefix, const ParamStore& other) {
  for (const auto& p : other) add(prefix + "/" + p.name, p.value);
}

nlohmann::json to_checkpoint(const ParamStore& store) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& p : store) {
    params[p.name] = {{"shape", p.value.shape()}, {"values", p.value.values()}};
  }
  return {{"format", "cfmimo-params"}, {"version", kCheckpointVersion}, {"params", params}};
}

void load_checkpoint(ParamStore& store, const nlohmann::json& doc) {
  if (doc.value("format", "") != "cfmimo-params") throw std::invalid_argument("checkpoint: unknown format");
  if (doc.value("version", 0) != kCheckpointVersion) throw std::invalid_argument("checkpoint: unsupported version");
  const auto& params = doc.at("params");
  if (params.size() != store.size()) throw std::invalid_argument("checkpoint: parameter count mismatch");
  for (auto& p : store) {
    if (!params.contains(p.name)) throw std::invalid_argument("checkpoint: missing parameter " + p.name);
    const auto& entry = params.at(p.name);
    auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    if (shape != p.value.shape()) throw std::invalid_argument("checkpoint: shape mismatch for " + p.name);
    auto values = entry.at("values").get<std::vector<double>>();
    if (values.size() != p.value.size()) throw std::invalid_argument("checkpoint: value count mismatch for " + p.name);
    p.value.values() = std::move(values);
  }
}

}  // namespace cfmimo::numeric
