#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace fingeo {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

inline constexpr double kPi = std::numbers::pi;

// Points of S^2 are unit vectors of R^3; tangent vectors at x are vectors
// orthogonal to x. These aliases document intent at API boundaries.
using SpherePoint = Vec3;

struct TangentVector {
  SpherePoint base;
  Vec3 vec;
};

inline SpherePoint normalize_point(const Vec3& p) { return p / p.norm(); }

inline Vec3 project_tangent(const Vec3& x, const Vec3& v) { return v - v.dot(x) * x; }

// Positive rotation by pi/2 in T_x S^2 for the round metric.
inline Vec3 rotate_j(const Vec3& x, const Vec3& v) { return x.cross(v); }

// Round-metric distance between unit vectors, accurate near 0 and pi.
inline double round_distance(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

// Orthonormal basis (e1, e2) of T_x S^2 with e1 x e2 = x/|x|.
inline Mat32 tangent_basis(const Vec3& x) {
  const Vec3 xn = x / x.norm();
  Eigen::Index k = 0;
  xn.cwiseAbs().minCoeff(&k);
  Vec3 a = Vec3::Zero();
  a[k] = 1.0;
  const Vec3 e1 = xn.cross(a).normalized();
  const Vec3 e2 = xn.cross(e1);
  Mat32 e;
  e.col(0) = e1;
  e.col(1) = e2;
  return e;
}

// Round exponential map.
inline Vec3 round_exp(const Vec3& x, const Vec3& v) {
  const double t = v.norm();
  if (t == 0.0) return x;
  return std::cos(t) * x + std::sin(t) * (v / t);
}

// Round logarithm (tangent vector at x pointing to y with length = angle).
inline Vec3 round_log(const Vec3& x, const Vec3& y) {
  const Vec3 w = project_tangent(x, y);
  const double n = w.norm();
  if (n == 0.0) return Vec3::Zero();
  return round_distance(x, y) * (w / n);
}

}  // namespace fingeo
