#pragma once

#include <cmath>
#include <numbers>

namespace draco {

// 2-D finger pose. (x, y) is the finger center offset in pixels at 500 ppi,
// theta the finger direction in degrees, kept in [-180, 180).
//
// Direction convention: theta = 0 points toward the fingertip along -y of the
// image (up); the unit direction vector is (sin theta, -cos theta) in image
// coordinates with y pointing down.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  friend bool operator==(const Pose&, const Pose&) = default;
};

inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Maps any finite angle into [-180, 180).
inline double normalize_degrees(double deg) {
  double r = std::fmod(deg + 180.0, 360.0);
  if (r < 0.0) r += 360.0;
  r -= 180.0;
  // fmod can round up to exactly 180 for inputs just below a multiple of 360.
  return r >= 180.0 ? r - 360.0 : r;
}

// Signed angular difference wrapped into (-180, 180].
inline double wrap_difference(double deg) {
  double r = normalize_degrees(deg);
  return r == -180.0 ? 180.0 : r;
}

// |wrap_difference(a - b)| computed so that swapping a and b gives the same
// bits.
inline double angular_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

// Rotates (x, y) by `deg` degrees using the standard rotation matrix.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 rotate(Vec2 v, double deg) {
  const double c = std::cos(deg * kDegToRad);
  const double s = std::sin(deg * kDegToRad);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

}  // namespace draco
