#pragma once

#include <fingeo/metric.hpp>

namespace fingeo {

// Stereographic projection from the antipode of `pole`. Coordinates are taken
// in the orthonormal tangent basis E = tangent_basis(pole):
//   map(x)   = E^T (x - (x.p) p) / (1 + x.p)
//   unmap(y) = ((1 - |y|^2) p + 2 E y) / (1 + |y|^2)
class Chart {
 public:
  explicit Chart(const Vec3& pole);

  const Vec3& pole() const { return pole_; }
  const Mat32& basis() const { return basis_; }

  Vec2 map(const Vec3& x) const;
  Vec3 unmap(const Vec2& y) const;
  // True when x is inside the working region x.pole > min_dot.
  bool contains(const Vec3& x, double min_dot = 0.2) const { return x.dot(pole_) > min_dot; }

  // dP/dy (3x2).
  Mat32 differential(const Vec2& y) const;
  // d^2P/dy_k dy_l w_l.
  Vec3 second_differential(const Vec2& y, int k, const Vec2& w) const;
  // Chart vector whose image under dP is the tangent vector v at unmap(y).
  Vec2 pull_vector(const Vec2& y, const Vec3& v) const;

  // Derivatives of the chart Lagrangian F^(y, w) = F(P(y), dP(y) w).
  Vec2 fiber_gradient(const FinslerMetric& metric, const Vec2& y, const Vec2& w) const;
  Vec2 base_gradient(const FinslerMetric& metric, const Vec2& y, const Vec2& w) const;

 private:
  Vec3 pole_;
  Mat32 basis_;
};

}  // namespace fingeo
