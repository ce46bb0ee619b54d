#pragma once

#include <cmath>

namespace cnndc {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// Integer pixel position; x is the column, y the row.
struct Pixel {
  int x = 0;
  int y = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
  Point2 to_point() const { return {static_cast<double>(x), static_cast<double>(y)}; }
};

}  // namespace cnndc
