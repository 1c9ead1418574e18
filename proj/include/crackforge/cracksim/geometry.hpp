#pragma once

#include <algorithm>
#include <cmath>

namespace crackforge::cracksim {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  [[nodiscard]] double operator[](int a) const { return a == 0 ? x : (a == 1 ? y : z); }
  double& operator[](int a) { return a == 0 ? x : (a == 1 ? y : z); }

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend Vec3 operator*(Vec3 a, double s) { return s * a; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

[[nodiscard]] inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
[[nodiscard]] inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
[[nodiscard]] inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
[[nodiscard]] inline double norm_inf(Vec3 a) {
  return std::max({std::abs(a.x), std::abs(a.y), std::abs(a.z)});
}

/// Axis-aligned observation window.
struct Box {
  Vec3 lo{0.0, 0.0, 0.0};
  Vec3 hi{1.0, 1.0, 1.0};

  [[nodiscard]] Vec3 extent() const { return hi - lo; }
  [[nodiscard]] double volume() const {
    const Vec3 e = extent();
    return e.x * e.y * e.z;
  }
  [[nodiscard]] double diameter() const { return norm(extent()); }
  [[nodiscard]] bool valid() const { return hi.x > lo.x && hi.y > lo.y && hi.z > lo.z; }
};

}  // namespace crackforge::cracksim
