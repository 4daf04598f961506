#pragma once

#include <cmath>
#include <iosfwd>

namespace tether {

/// 3-component world-frame vector. The z axis points opposite to gravity.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double a) const { return {x * a, y * a, z * a}; }
  constexpr Vec3 operator/(double a) const { return {x / a, y / a, z / a}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  Vec3& operator*=(double a) {
    x *= a;
    y *= a;
    z *= a;
    return *this;
  }

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  constexpr double squared_norm() const { return dot(*this); }

  /// Copy with the z component zeroed (horizontal part).
  constexpr Vec3 horizontal() const { return {x, y, 0.0}; }

  bool is_finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

constexpr inline Vec3 operator*(double a, const Vec3& v) { return v * a; }

constexpr inline bool operator==(const Vec3& a, const Vec3& b) {
  return a.x == b.x && a.y == b.y && a.z == b.z;
}

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

constexpr inline Vec3 unit_z() { return {0.0, 0.0, 1.0}; }

/// Diagonal 3x3 matrix, stored as its diagonal. Used for damping, virtual
/// inertia, and the horizontal-only proportional gain.
struct Diag3 {
  Vec3 d;

  constexpr Diag3() = default;
  constexpr explicit Diag3(const Vec3& diag) : d(diag) {}
  constexpr Diag3(double a, double b, double c) : d(a, b, c) {}

  static constexpr Diag3 uniform(double a) { return Diag3(a, a, a); }

  constexpr Vec3 operator*(const Vec3& v) const { return {d.x * v.x, d.y * v.y, d.z * v.z}; }
  constexpr Diag3 inverse() const { return Diag3(1.0 / d.x, 1.0 / d.y, 1.0 / d.z); }
  constexpr double trace() const { return d.x + d.y + d.z; }
  constexpr bool positive() const { return d.x > 0.0 && d.y > 0.0 && d.z > 0.0; }
  /// Quadratic form v' * D * v.
  constexpr double quadratic(const Vec3& v) const {
    return d.x * v.x * v.x + d.y * v.y * v.y + d.z * v.z * v.z;
  }
};

std::ostream& operator<<(std::ostream& os, const Vec3& v);

}  // namespace tether
