// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "cfmimo/numeric/rng.hpp"
#include "cfmimo/numeric/tensor.hpp"

namespace cfmimo::numeric {

struct Parameter {
  std::string name;
  RealTensor value;
  RealTensor grad;
};

/// Ordered, named parameter collection. Indices are stable, so copying a store
/// (for example into a target network) keeps every layer's handles valid.
class ParamStore {
 public:
  std::size_t add(const std::string& name, RealTensor init);
  /// Uniform(-a, a) with a = gain * sqrt(6 / (fan_in + fan_out)).
  std::size_t add_xavier(const std::string& name, std::size_t rows, std::size_t cols, RngStream& rng,
                         double gain = 1.0);
  std::size_t add_zeros(const std::string& name, std::size_t rows, std::size_t cols);

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  [[nodiscard]] bool contains(const std::string& name) const { return index_.contains(name); }
  [[nodiscard]] std::size_t size() const { return params_.size(); }
  [[nodiscard]] std::size_t scalar_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  [[nodiscard]] double grad_norm() const;
  [[nodiscard]] bool grads_finite() const;

  /// Flattened views used by optimizers and meta-gradient code.
  [[nodiscard]] std::vector<double> flat_values() const;
  void set_flat_values(const std::vector<double>& flat);
  [[nodiscard]] std::vector<double> flat_grads() const;

  /// Appends another store's parameters under "prefix/name".
  void append(const std::string& prefix, const ParamStore& other);

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

/// Versioned checkpoint document: {"format", "version", "params": {name: {shape, values}}}.
nlohmann::json to_checkpoint(const ParamStore& store);
/// Loads values into an existing store; names and shapes must match exactly.
void load_checkpoint(ParamStore& store, const nlohmann::json& doc);

inline constexpr int kCheckpointVersion = 1;

}  // namespace cfmimo::numeric
