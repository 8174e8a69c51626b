#pragma once

#include <fingeo/geodesic.hpp>

#include <array>
#include <complex>
#include <optional>
#include <vector>

namespace fingeo {

// Unit section of ker F_v(x, v) in T_x S^2, oriented so that it pairs
// positively with the round normal x cross v.
Vec3 kernel_normal(const FinslerMetric& metric, const Vec3& x, const Vec3& v);

// Normal coefficient f of a Jacobi field: dx = c v + f mu with mu the kernel normal.
double normal_component(const FinslerMetric& metric, const Vec3& x, const Vec3& v, const Vec3& dx);

struct JacobiSolution {
  GeodesicArc along;            // arc the field lives on
  double t0 = 0.0;              // base time on `along`
  std::vector<double> times;    // elapsed time since t0, at accepted steps
  std::vector<double> f;        // normal coefficient at `times`
  std::vector<double> zeros;    // elapsed times of sign changes, bracketed to 1e-10
  std::vector<double> fdot_at_zeros;
};

struct JacobiOptions {
  double tol = 1e-12;
  double zero_tol = 1e-10;
  std::size_t max_zeros = 0;  // 0: no limit
};

// Jacobi field with dx(0) = 0, dv(0) = kernel normal, integrated along the
// geodesic through `start` for `horizon`. The initial zero is not recorded.
JacobiSolution jacobi_from(const FinslerMetric& metric, const GeodesicState& start, double horizon,
                           const JacobiOptions& opt = {});
// Same with an arbitrary initial variation (dx, dv).
JacobiSolution jacobi_from(const FinslerMetric& metric, const GeodesicState& start, const Vec3& dx0,
                           const Vec3& dv0, double horizon, const JacobiOptions& opt = {});

// Vertical field based at time t0 of `arc`, integrated for horizon (default: arc duration).
JacobiSolution jacobi_field(const FinslerMetric& metric, const GeodesicArc& arc, double t0, double horizon = 0.0);

// Elapsed times of the first zeros of the vertical field from `start`.
std::vector<double> jacobi_zeros(const FinslerMetric& metric, const GeodesicState& start, double horizon,
                                 std::size_t max_zeros = 0);

struct ConjugateTimes {
  std::vector<double> forward;   // t_1 < t_2 < ... (absolute times on the arc)
  std::vector<double> backward;  // t_-1 > t_-2 > ...
};

// Conjugate times of gamma(t0) within horizon in both directions. Backward
// times come from the reversed geodesic (x, -v). horizon <= 10 arc lengths.
ConjugateTimes conjugate_times(const FinslerMetric& metric, const GeodesicArc& arc, double t0, double horizon);

struct OmegaIndex {
  int ind_omega = 0;
  int nul_omega = 0;
};

// Interior zeros of the vertical field based at gamma(t) over m periods, and
// whether it vanishes at the end (|f| < 1e-8). Throws DegenerateIndex when a
// zero sits within 1e-7 of the endpoint but |f(m l)| is not below 1e-8.
OmegaIndex index_omega(const FinslerMetric& metric, const GeodesicArc& closed, double t, int m);

struct Monodromy {
  Mat2 matrix = Mat2::Identity();  // linearized return map on the contact plane
  std::array<std::complex<double>, 2> eigs{};
  double det = 1.0;
};

// Linearized flow over one period restricted to xi, in the basis
// e1 = (0, mu), e2 = (mu, w) with w chosen so that e2 is tangent to the unit
// bundle and in ker alpha. Throws SymplecticityError when |det - 1| > 1e-4.
Monodromy monodromy(const FinslerMetric& metric, const GeodesicArc& closed);

// dim ker(M^m - I) by singular values: below 1e-6 counts, inside [1e-6, 1e-4]
// the answer is Unknown (nullopt).
std::optional<int> nullity(const Mat2& m_power);

struct FloquetResult {
  std::optional<int> nul;
  std::array<std::complex<double>, 2> eigs{};
  double det = 1.0;
};
FloquetResult floquet(const FinslerMetric& metric, const GeodesicArc& closed);

struct IndexReport {
  int m = 1;
  int ind_omega = 0;
  int nul_omega = 0;
  std::optional<int> nul;
  std::optional<int> ind;  // set when the relations pin a single value
  int ind_lo = 0;
  int ind_hi = 0;
  std::array<std::complex<double>, 2> floquet_eigs{};  // of the m-th power
  double monodromy_det = 1.0;
};

// Reports for gamma^1 .. gamma^M, cross-checked against the iteration and
// comparison relations. Throws RelationViolation on any inconsistency.
std::vector<IndexReport> index_table(const FinslerMetric& metric, const GeodesicArc& closed, int M);
IndexReport index_report(const FinslerMetric& metric, const GeodesicArc& closed, int m);

struct SturmCheck {
  std::vector<double> zeros_vertical;    // includes the base zero at 0
  std::vector<double> zeros_horizontal;  // field with dx(0) = mu, dF = 0
  bool interlaced = false;
};

SturmCheck sturm_check(const FinslerMetric& metric, const GeodesicState& start, double horizon);

}  // namespace fingeo
