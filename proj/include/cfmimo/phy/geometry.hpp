// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace cfmimo::phy {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

/// Square deployment area [a_min, a_max]^2 in meters.
struct NetworkGeometry {
  std::vector<Point> aps;
  std::vector<Point> ues;
  double area_min = 0.0;
  double area_max = 1000.0;
  bool wraparound = true;

  [[nodiscard]] std::size_t num_aps() const { return aps.size(); }
  [[nodiscard]] std::size_t num_ues() const { return ues.size(); }
  [[nodiscard]] double side() const { return area_max - area_min; }
  [[nodiscard]] bool in_bounds(const Point& p) const {
    return p.x >= area_min && p.x <= area_max && p.y >= area_min && p.y <= area_max;
  }
};

/// Shortest displacement from a to b; with wraparound this is the minimum over
/// the nine shifted copies of b.
Point displacement(const Point& a, const Point& b, double side, bool wraparound);
double planar_distance(const Point& a, const Point& b, double side, bool wraparound);
/// Distance between AP m and UE k.
double distance(const NetworkGeometry& geom, std::size_t m, std::size_t k);

}  // namespace cfmimo::phy
