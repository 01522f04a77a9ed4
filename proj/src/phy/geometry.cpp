// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/phy/geometry.hpp"

#include <cmath>

namespace cfmimo::phy {

Point displacement(const Point& a, const Point& b, double side, bool wraparound) {
  Point best{b.x - a.x, b.y - a.y};
  if (!wraparound) return best;
  double best_d2 = best.x * best.x + best.y * best.y;
  for (int sx = -1; sx <= 1; ++sx)
    for (int sy = -1; sy <= 1; ++sy) {
      const double dx = b.x + sx * side - a.x;
      const double dy = b.y + sy * side - a.y;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best_d2) {
        best_d2 = d2;
        best = {dx, dy};
      }
    }
  return best;
}

double planar_distance(const Point& a, const Point& b, double side, bool wraparound) {
  const Point d = displacement(a, b, side, wraparound);
  return std::hypot(d.x, d.y);
}

double distance(const NetworkGeometry& geom, std::size_t m, std::size_t k) {
  return planar_distance(geom.aps.at(m), geom.ues.at(k), geom.side(), geom.wraparound);
}

}  // namespace cfmimo::phy
