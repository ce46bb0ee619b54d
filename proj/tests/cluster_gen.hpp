#pragma once

// Point-set generators shared by the clustering tests and the acceptance run.

#include <cmath>
#include <numbers>
#include <vector>

#include "cnndc/geometry.hpp"
#include "cnndc/rng.hpp"

namespace gen {

// n uniform points in a square whose side keeps the expected density
// around the threshold scale, so sets mix singletons and long chains.
inline std::vector<cnndc::Point2> uniform_points(cnndc::Rng& rng, std::size_t n, double th) {
  const double side = th * std::sqrt(static_cast<double>(n)) * rng.uniform(0.5, 2.0);
  std::vector<cnndc::Point2> pts(n);
  for (auto& p : pts) p = {rng.uniform(0, side), rng.uniform(0, side)};
  return pts;
}

struct Clouds {
  std::vector<cnndc::Point2> points;
  std::size_t cloud_count = 0;
};

// Star-shaped clouds for th = 20: a hub plus up to five satellites at radius
// 5..15 spread roughly 72 degrees apart, so every satellite's nearest point
// is the hub and every seed set contains the hub. Clouds sit on a 100 px
// grid and the points are shuffled.
inline Clouds star_clouds(cnndc::Rng& rng, std::size_t clouds) {
  Clouds out;
  out.cloud_count = clouds;
  for (std::size_t c = 0; c < clouds; ++c) {
    const cnndc::Point2 hub{100.0 * static_cast<double>(c % 8) + rng.uniform(-5, 5),
                            100.0 * static_cast<double>(c / 8) + rng.uniform(-5, 5)};
    out.points.push_back(hub);
    const std::size_t satellites = rng.below(6);
    const double radius = rng.uniform(5, 15);
    const double phase = rng.uniform(0, 2 * std::numbers::pi);
    for (std::size_t s = 0; s < satellites; ++s) {
      const double a = phase + 2 * std::numbers::pi * static_cast<double>(s) / 5.0 +
                       rng.uniform(-0.08, 0.08);
      out.points.push_back({hub.x + radius * std::cos(a), hub.y + radius * std::sin(a)});
    }
  }
  rng.shuffle(std::span<cnndc::Point2>(out.points));
  return out;
}

}  // namespace gen
