#pragma once

#include <algorithm>
#include <cmath>
#include <compare>

namespace bdet {

struct Point {
  int x = 0;
  int y = 0;

  friend constexpr bool operator==(const Point&, const Point&) = default;
};

struct PointD {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned box given by its edge coordinates. Boxes derived from pixel
/// chains use the extreme pixel coordinates, so a chain spanning x = 2..5 has
/// left = 2, right = 5 and width 3.
struct BBox {
  double left = 0.0;
  double top = 0.0;
  double right = 0.0;
  double bottom = 0.0;

  [[nodiscard]] constexpr double width() const { return right - left; }
  [[nodiscard]] constexpr double height() const { return bottom - top; }
  [[nodiscard]] constexpr double area() const {
    return valid() ? width() * height() : 0.0;
  }
  [[nodiscard]] constexpr bool valid() const { return left < right && top < bottom; }
  [[nodiscard]] constexpr PointD center() const {
    return {(left + right) / 2.0, (top + bottom) / 2.0};
  }

  friend constexpr bool operator==(const BBox&, const BBox&) = default;
};

/// Intersection over union; 0 when either box is degenerate.
inline double iou(const BBox& a, const BBox& b) {
  const double ix = std::min(a.right, b.right) - std::max(a.left, b.left);
  const double iy = std::min(a.bottom, b.bottom) - std::max(a.top, b.top);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// Angular distance between two orientations in degrees, modulo 180.
inline double angular_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), 180.0);
  return std::min(d, 180.0 - d);
}

}  // namespace bdet
