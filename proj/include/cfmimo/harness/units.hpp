// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace cfmimo::harness {

/// Power given as "<number><unit>" with unit W, mW, dBW or dBm (whitespace
/// between number and unit is allowed). A bare number is watts.
/// Returns watts; throws std::invalid_argument with the offending text.
double parse_power(const std::string& text);

/// Length with unit m or km; a bare number is meters.
double parse_length(const std::string& text);

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

}  // namespace cfmimo::harness
