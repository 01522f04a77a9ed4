// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/env/actions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfmimo::env {

using phy::Point;

ActionVector ActionVector::idle(std::size_t K, std::size_t N) {
  ActionVector a;
  a.power_split.assign(K, 1.0 / static_cast<double>(K));
  a.antenna_weights.assign(N, 1.0);
  return a;
}

double PowerAllocation::total() const {
  double s = 0.0;
  for (double r : rho) s += r;
  return s;
}

double PowerAllocation::antenna_power(std::size_t n) const { return total() * antenna_profile[n]; }

void validate_raw_action(const ActionVector& a, std::size_t K, std::size_t N) {
  if (a.power_split.size() != K) throw std::invalid_argument("action: power_split must have K entries");
  if (a.antenna_weights.size() != N) throw std::invalid_argument("action: antenna_weights must have N entries");
  auto finite = [](double v) { return std::isfinite(v); };
  bool ok = finite(a.mobility[0]) && finite(a.mobility[1]) && finite(a.ap_power);
  ok = ok && std::all_of(a.power_split.begin(), a.power_split.end(), finite);
  ok = ok && std::all_of(a.antenna_weights.begin(), a.antenna_weights.end(), finite);
  if (!ok) throw std::invalid_argument("action: non-finite entry");
}

bool position_feasible(const Point& p, const phy::NetworkGeometry& geom, double d_min) {
  if (!geom.in_bounds(p)) return false;
  for (const auto& u : geom.ues)
    if (phy::planar_distance(p, u, geom.side(), geom.wraparound) < d_min) return false;
  return true;
}

namespace {

// Largest t in [0, 1] for which p0 + t * d stays in the box.
double box_limit(const Point& p0, const Point& d, double lo, double hi) {
  double t = 1.0;
  auto axis = [&](double x, double dx) {
    if (dx > 0.0) t = std::min(t, (hi - x) / dx);
    if (dx < 0.0) t = std::min(t, (lo - x) / dx);
  };
  axis(p0.x, d.x);
  axis(p0.y, d.y);
  return std::max(t, 0.0);
}

// First t >= 0 at which the segment p0 + t d enters the disk of radius r around c.
double disk_entry(const Point& p0, const Point& d, const Point& c, double r) {
  const double ox = p0.x - c.x, oy = p0.y - c.y;
  const double a = d.x * d.x + d.y * d.y;
  const double b = ox * d.x + oy * d.y;
  const double cc = ox * ox + oy * oy - r * r;
  if (a == 0.0 || b >= 0.0) return std::numeric_limits<double>::infinity();
  const double disc = b * b - a * cc;
  if (disc <= 0.0) return std::numeric_limits<double>::infinity();
  return std::max(0.0, (-b - std::sqrt(disc)) / a);
}

Point along(const Point& p0, const Point& d, double t) { return {p0.x + t * d.x, p0.y + t * d.y}; }

PowerAllocation allocate(double total, const std::vector<double>& split, const std::vector<double>& profile) {
  PowerAllocation p;
  p.antenna_profile = profile;
  p.rho.resize(split.size());
  for (std::size_t k = 0; k < split.size(); ++k) p.rho[k] = total * split[k];
  return p;
}

bool power_ok(const PowerAllocation& p, const EnvConfig& cfg) {
  const double t = p.total();
  if (t > cfg.p_ap_max) return false;
  for (std::size_t n = 0; n < p.antenna_profile.size(); ++n)
    if (t * p.antenna_profile[n] > cfg.antenna_cap()) return false;
  return true;
}

}  // namespace

ProjectedAction project_action(const ActionVector& raw, std::size_t m, const phy::NetworkGeometry& geom,
                               const EnvConfig& cfg) {
  validate_raw_action(raw, cfg.K, cfg.N);
  ProjectedAction out;
  ActionVector& a = out.action;
  a = raw;

  // Mobility.
  const Point p0 = geom.aps.at(m);
  for (double& v : a.mobility) v = std::clamp(v, -1.0, 1.0);
  const Point d{cfg.max_step * a.mobility[0], cfg.max_step * a.mobility[1]};
  double t = box_limit(p0, d, geom.area_min, geom.area_max);
  const double side = geom.side();
  for (const auto& u : geom.ues) {
    const int span = geom.wraparound ? 1 : 0;
    for (int i = -span; i <= span; ++i)
      for (int j = -span; j <= span; ++j)
        t = std::min(t, disk_entry(p0, d, {u.x + i * side, u.y + j * side}, cfg.d_min));
  }
  // Rounding can leave the endpoint a hair inside a disk or outside the box;
  // back off by growing multiples of an ulp until the checker agrees.
  Point p = along(p0, d, t);
  double back = std::numeric_limits<double>::epsilon();
  while (t > 0.0 && !position_feasible(p, geom, cfg.d_min)) {
    t = std::max(0.0, t - back);
    back *= 2.0;
    p = along(p0, d, t);
  }
  if (t == 0.0) p = p0;
  out.move_truncated = t < 1.0 && (d.x != 0.0 || d.y != 0.0);
  out.position = p;
  if (cfg.max_step > 0.0) a.mobility = {(p.x - p0.x) / cfg.max_step, (p.y - p0.y) / cfg.max_step};

  // Shares.
  double s = 0.0;
  for (double& v : a.power_split) s += (v = std::max(v, 0.0));
  for (double& v : a.power_split) v = s > 0.0 ? v / s : 1.0 / static_cast<double>(cfg.K);
  std::vector<double> profile(cfg.N);
  double w = 0.0;
  for (double& v : a.antenna_weights) w += (v = std::clamp(v, 0.0, 1.0));
  for (std::size_t n = 0; n < cfg.N; ++n)
    profile[n] = w > 0.0 ? a.antenna_weights[n] / w : 1.0 / static_cast<double>(cfg.N);

  // Power.
  a.ap_power = std::clamp(a.ap_power, 0.0, 1.0);
  double total = a.ap_power * cfg.p_ap_max;
  const double peak = *std::max_element(profile.begin(), profile.end());
  if (total * peak > cfg.antenna_cap()) {
    total = cfg.antenna_cap() / peak;
    out.power_scaled = true;
  }
  out.power = allocate(total, a.power_split, profile);
  back = std::numeric_limits<double>::denorm_min();
  while (!power_ok(out.power, cfg)) {
    total = std::max(0.0, std::nextafter(total, 0.0) - back);
    back = std::max(back * 2.0, total * std::numeric_limits<double>::epsilon());
    out.power = allocate(total, a.power_split, profile);
    out.power_scaled = true;
  }
  a.ap_power = total / cfg.p_ap_max;
  return out;
}

std::vector<ProjectedAction> project_actions(const std::vector<ActionVector>& raw, const phy::NetworkGeometry& geom,
                                             const EnvConfig& cfg) {
  if (raw.size() != geom.num_aps()) throw std::invalid_argument("project_actions: one action per AP required");
  std::vector<ProjectedAction> out;
  out.reserve(raw.size());
  for (std::size_t m = 0; m < raw.size(); ++m) out.push_back(project_action(raw[m], m, geom, cfg));
  return out;
}

ConstraintReport check_constraints(const phy::NetworkGeometry& geom, const std::vector<PowerAllocation>& power,
                                   const EnvConfig& cfg) {
  ConstraintReport r;
  for (std::size_t m = 0; m < geom.num_aps(); ++m) {
    r.bounds_ok = r.bounds_ok && geom.in_bounds(geom.aps[m]);
    for (std::size_t k = 0; k < geom.num_ues(); ++k) r.distance_ok = r.distance_ok && phy::distance(geom, m, k) >= cfg.d_min;
  }
  for (const auto& p : power) {
    const double t = p.total();
    r.ap_power_ok = r.ap_power_ok && t <= cfg.p_ap_max;
    for (std::size_t n = 0; n < p.antenna_profile.size(); ++n)
      r.antenna_power_ok = r.antenna_power_ok && t * p.antenna_profile[n] <= cfg.antenna_cap();
  }
  return r;
}

}  // namespace cfmimo::env
