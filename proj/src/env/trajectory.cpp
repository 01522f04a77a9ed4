// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/env/trajectory.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace cfmimo::env {

void TrajectoryRecorder::record_initial(const EnvState& state) {
  for (std::size_t m = 0; m < state.geometry.num_aps(); ++m) {
    const auto& p = state.geometry.aps[m];
    rows_.push_back({state.slot, m, p.x, p.y, 0.0, std::vector<double>(K_, 0.0), std::vector<double>(K_, 0.0)});
  }
}

void TrajectoryRecorder::record(const EnvState& state, const StepResult& step) {
  for (std::size_t m = 0; m < state.geometry.num_aps(); ++m) {
    const auto& p = state.geometry.aps[m];
    const auto& a = step.applied.at(m).action;
    rows_.push_back({state.slot, m, p.x, p.y, a.ap_power, a.power_split, step.ue_se});
  }
}

std::string TrajectoryRecorder::header() const {
  std::string h = "slot,agent,x,y,ap_power";
  for (std::size_t k = 0; k < K_; ++k) h += ",split_" + std::to_string(k);
  for (std::size_t k = 0; k < K_; ++k) h += ",se_" + std::to_string(k);
  return h;
}

void TrajectoryRecorder::write_csv(std::ostream& os) const {
  os << header() << '\n' << std::setprecision(17);
  for (const auto& r : rows_) {
    os << r.slot << ',' << r.agent << ',' << r.x << ',' << r.y << ',' << r.ap_power;
    for (double v : r.split) os << ',' << v;
    for (double v : r.se) os << ',' << v;
    os << '\n';
  }
}

void TrajectoryRecorder::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  write_csv(f);
}

}  // namespace cfmimo::env
