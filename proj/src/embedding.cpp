#include <fingeo/curveflow.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

namespace fingeo {

namespace {

struct CellKey {
  long i, j, k;
  bool operator==(const CellKey& o) const { return i == o.i && j == o.j && k == o.k; }
};

struct CellHash {
  std::size_t operator()(const CellKey& c) const {
    std::size_t h = static_cast<std::size_t>(c.i) * 73856093u;
    h ^= static_cast<std::size_t>(c.j) * 19349663u;
    h ^= static_cast<std::size_t>(c.k) * 83492791u;
    return h;
  }
};

double cross2(const Vec2& a, const Vec2& b) { return a[0] * b[1] - a[1] * b[0]; }

// Great-circle arcs a-b and c-d meet iff their gnomonic images meet.
bool arcs_intersect(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 p = (a + b + c + d).normalized();
  if (!(a.dot(p) > 0.0 && b.dot(p) > 0.0 && c.dot(p) > 0.0 && d.dot(p) > 0.0)) return false;
  const Mat32 e = tangent_basis(p);
  auto proj = [&](const Vec3& q) { return Vec2(e.transpose() * (q / q.dot(p))); };
  const Vec2 A = proj(a), B = proj(b), C = proj(c), D = proj(d);
  const double scale = std::max({(B - A).norm(), (D - C).norm()});
  const double tiny = 1e-13 * scale * scale;
  auto orient = [&](const Vec2& o, const Vec2& u, const Vec2& v) {
    const double s = cross2(u - o, v - o);
    return std::abs(s) < tiny ? 0.0 : s;
  };
  const double o1 = orient(A, B, C), o2 = orient(A, B, D);
  const double o3 = orient(C, D, A), o4 = orient(C, D, B);
  if (o1 == 0.0 && o2 == 0.0) {
    // Collinear: overlap of the parameter intervals along AB.
    const Vec2 dir = B - A;
    const double l2 = dir.squaredNorm();
    double t0 = (C - A).dot(dir) / l2;
    double t1 = (D - A).dot(dir) / l2;
    if (t0 > t1) std::swap(t0, t1);
    return t1 >= 0.0 && t0 <= 1.0;
  }
  return o1 * o2 <= 0.0 && o3 * o4 <= 0.0;
}

// Euclidean distance between segments [p0, p1] and [q0, q1].
double segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  const Vec3 u = p1 - p0, v = q1 - q0, w = p0 - q0;
  const double a = u.dot(u), b = u.dot(v), c = v.dot(v), d = u.dot(w), e = v.dot(w);
  const double den = a * c - b * b;
  double sn, sd = den, tn, td = den;
  if (den < 1e-14 * a * c) {
    sn = 0.0;
    sd = 1.0;
    tn = e;
    td = c;
  } else {
    sn = b * e - c * d;
    tn = a * e - b * d;
    if (sn < 0.0) {
      sn = 0.0;
      tn = e;
      td = c;
    } else if (sn > sd) {
      sn = sd;
      tn = e + b;
      td = c;
    }
  }
  if (tn < 0.0) {
    tn = 0.0;
    if (-d < 0.0) {
      sn = 0.0;
    } else if (-d > a) {
      sn = sd;
    } else {
      sn = -d;
      sd = a;
    }
  } else if (tn > td) {
    tn = td;
    if (-d + b < 0.0) {
      sn = 0.0;
    } else if (-d + b > a) {
      sn = sd;
    } else {
      sn = -d + b;
      sd = a;
    }
  }
  const double sc = std::abs(sn) < 1e-300 ? 0.0 : sn / sd;
  const double tc = std::abs(tn) < 1e-300 ? 0.0 : tn / td;
  return (w + sc * u - tc * v).norm();
}

}  // namespace

EmbeddingReport check_embedded(const Loop& loop) {
  EmbeddingReport rep;
  const std::size_t n = loop.size();
  if (n < 4) {
    rep.embedded = false;
    return rep;
  }
  const auto& x = loop.samples;
  double max_chord = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = (x[(i + 1) % n] - x[i]).norm();
    max_chord = std::max(max_chord, c);
    sum += c;
  }
  rep.mean_spacing = sum / static_cast<double>(n);
  const double cell = 2.0 * max_chord;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid;
  auto key_of = [&](const Vec3& m) {
    return CellKey{static_cast<long>(std::floor(m[0] / cell)), static_cast<long>(std::floor(m[1] / cell)),
                   static_cast<long>(std::floor(m[2] / cell))};
  };
  for (std::size_t i = 0; i < n; ++i) grid[key_of(0.5 * (x[i] + x[(i + 1) % n]))].push_back(i);

  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = x[i];
    const Vec3& b = x[(i + 1) % n];
    const CellKey k = key_of(0.5 * (a + b));
    for (long di = -1; di <= 1; ++di) {
      for (long dj = -1; dj <= 1; ++dj) {
        for (long dk = -1; dk <= 1; ++dk) {
          const auto it = grid.find({k.i + di, k.j + dj, k.k + dk});
          if (it == grid.end()) continue;
          for (std::size_t j : it->second) {
            if (j <= i) continue;
            const std::size_t gap = std::min(j - i, n - (j - i));
            if (gap < 2) continue;
            const Vec3& c = x[j];
            const Vec3& d = x[(j + 1) % n];
            rep.min_separation = std::min(rep.min_separation, segment_distance(a, b, c, d));
            if (arcs_intersect(a, b, c, d)) rep.embedded = false;
          }
        }
      }
    }
  }
  rep.proximity_warning = rep.min_separation < 0.25 * rep.mean_spacing;
  return rep;
}

}  // namespace fingeo
