#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace contactnet {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x; y += o.y; z += o.z;
    return *this;
  }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  double& operator()(int r, int c) { return m[r * 3 + c]; }
  double operator()(int r, int c) const { return m[r * 3 + c]; }

  static Mat3 identity() { return Mat3{}; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }

  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
  }

  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }
};

// Proper rigid motion x -> R*x + t.
struct RigidTransform {
  Mat3 rotation;
  Vec3 translation;

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  // this after other: (this ∘ other)(x) = R2*(R1*x + t1) + t2
  RigidTransform compose(const RigidTransform& other) const {
    RigidTransform r;
    r.rotation = rotation * other.rotation;
    r.translation = rotation * other.translation + translation;
    return r;
  }

  // det(R) = +1 and R^T R = I within tol.
  bool valid(double tol = 1e-6) const {
    if (std::abs(rotation.det() - 1.0) > tol) return false;
    Mat3 rtr = rotation.transposed() * rotation;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double expect = (i == j) ? 1.0 : 0.0;
        if (std::abs(rtr(i, j) - expect) > tol) return false;
      }
    return true;
  }
};

inline Mat3 rotation_x(double a) {
  Mat3 r;
  double c = std::cos(a), s = std::sin(a);
  r.m = {1, 0, 0, 0, c, -s, 0, s, c};
  return r;
}

inline Mat3 rotation_y(double a) {
  Mat3 r;
  double c = std::cos(a), s = std::sin(a);
  r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
  return r;
}

inline Mat3 rotation_z(double a) {
  Mat3 r;
  double c = std::cos(a), s = std::sin(a);
  r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
  return r;
}

// Intrinsic Z-Y-X Euler angles: R = Rz(a) * Ry(b) * Rx(c).
inline Mat3 euler_zyx(double a, double b, double c) {
  return rotation_z(a) * rotation_y(b) * rotation_x(c);
}

}  // namespace contactnet
