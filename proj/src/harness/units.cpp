// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/harness/units.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string_view>

namespace cfmimo::harness {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Splits "12.5 mW" into 12.5 and "mW".
std::pair<double, std::string_view> split_quantity(const std::string& text) {
  const std::string_view s = trim(text);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end == s.data() || !std::isfinite(value))
    throw std::invalid_argument("not a number with a unit: '" + text + "'");
  return {value, trim(std::string_view(end, static_cast<std::size_t>(s.data() + s.size() - end)))};
}

}  // namespace

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

double parse_power(const std::string& text) {
  const auto [v, unit] = split_quantity(text);
  if (unit.empty() || unit == "W") return v;
  if (unit == "mW") return v * 1e-3;
  if (unit == "dBm") return dbm_to_watts(v);
  if (unit == "dBW") return std::pow(10.0, v / 10.0);
  throw std::invalid_argument("unknown power unit '" + std::string(unit) + "' in '" + text + "' (W, mW, dBW, dBm)");
}

double parse_length(const std::string& text) {
  const auto [v, unit] = split_quantity(text);
  if (unit.empty() || unit == "m") return v;
  if (unit == "km") return v * 1e3;
  throw std::invalid_argument("unknown length unit '" + std::string(unit) + "' in '" + text + "' (m, km)");
}

}  // namespace cfmimo::harness
