#include <fingeo/chart.hpp>

namespace fingeo {

Chart::Chart(const Vec3& pole) : pole_(normalize_point(pole)), basis_(tangent_basis(pole_)) {}

Vec2 Chart::map(const Vec3& x) const {
  const double c = x.dot(pole_);
  return basis_.transpose() * (x - c * pole_) / (1.0 + c);
}

Vec3 Chart::unmap(const Vec2& y) const {
  const double r2 = y.squaredNorm();
  return ((1.0 - r2) * pole_ + 2.0 * basis_ * y) / (1.0 + r2);
}

Mat32 Chart::differential(const Vec2& y) const {
  const double den = 1.0 + y.squaredNorm();
  const Vec3 base = pole_ + basis_ * y;
  Mat32 d;
  for (int k = 0; k < 2; ++k) {
    d.col(k) = -4.0 * y[k] / (den * den) * base + (2.0 / den) * basis_.col(k);
  }
  return d;
}

Vec3 Chart::second_differential(const Vec2& y, int k, const Vec2& w) const {
  const double den = 1.0 + y.squaredNorm();
  const double den2 = den * den;
  const Vec3 base = pole_ + basis_ * y;
  Vec3 out = Vec3::Zero();
  for (int l = 0; l < 2; ++l) {
    const double delta = (k == l) ? 1.0 : 0.0;
    const Vec3 d2 = (-4.0 * delta / den2 + 16.0 * y[k] * y[l] / (den2 * den)) * base -
                    4.0 * y[k] / den2 * basis_.col(l) - 4.0 * y[l] / den2 * basis_.col(k);
    out += w[l] * d2;
  }
  return out;
}

Vec2 Chart::pull_vector(const Vec2& y, const Vec3& v) const {
  const Mat32 d = differential(y);
  return (d.transpose() * d).ldlt().solve(d.transpose() * v);
}

Vec2 Chart::fiber_gradient(const FinslerMetric& metric, const Vec2& y, const Vec2& w) const {
  const Mat32 d = differential(y);
  return d.transpose() * metric.Fv(unmap(y), d * w);
}

Vec2 Chart::base_gradient(const FinslerMetric& metric, const Vec2& y, const Vec2& w) const {
  const Mat32 d = differential(y);
  const Vec3 x = unmap(y);
  const MetricJet j = metric.jet(x, d * w);
  Vec2 g;
  for (int k = 0; k < 2; ++k) g[k] = j.Fx.dot(d.col(k)) + j.Fv.dot(second_differential(y, k, w));
  return g;
}

}  // namespace fingeo
