#pragma once

#include <fingeo/geodesic.hpp>
#include <fingeo/jacobi.hpp>

#include <optional>
#include <vector>

namespace fingeo {

// Annulus coordinates (t, s) in (R / l Z) x (-1, 1) over a simple closed
// geodesic gamma of length l. A point (t, s) is the unit vector nu(t, s) at
// gamma(t) pointing into the side B0 of gamma (the side of x cross gamma')
// with s = F_v(gamma(t), nu) . gamma'(t).
class AnnulusChart {
 public:
  AnnulusChart(FinslerMetric metric, const GeodesicArc& base, int n_samples = 4096);

  const FinslerMetric& metric() const { return metric_; }
  const GeodesicArc& base() const { return base_; }
  double period() const { return period_; }

  // Quintic Hermite interpolation of the base geodesic, t taken mod l.
  Vec3 point(double t) const;
  Vec3 velocity(double t) const;
  double wrap(double t) const;

  // Outward side normal x cross gamma' / |gamma'|.
  Vec3 side_normal(double t) const;

  // Unit vector nu(t, s) and its inverse s_of.
  Vec3 nu(double t, double s) const;
  double s_of(double t, const Vec3& v) const;
  GeodesicState coord(double t, double s) const;

  // Parameter of the point of gamma nearest to p, and the signed side
  // (p - gamma(t)) . N(t) (positive in B0).
  double nearest(const Vec3& p) const;
  double side(const Vec3& p) const;

 private:
  FinslerMetric metric_;
  GeodesicArc base_;
  double period_ = 0.0;
  double h_ = 0.0;
  std::vector<Vec3> x_, v_, a_;
};

// Builds the chart and checks that gamma is embedded and that s is strictly
// decreasing along every sampled fiber arc (64 x 65 grid). Throws ChartError.
AnnulusChart build_chart(const FinslerMetric& metric, const GeodesicArc& gamma);

enum class ReturnStatus { Ok, NoReturn, Grazing };

struct ReturnRecord {
  ReturnStatus status = ReturnStatus::Ok;
  double t = 0.0, s = 0.0;    // start
  double t1 = 0.0, s1 = 0.0;  // first crossing (into the opposite side)
  double tau1 = 0.0;
  double t_hit = 0.0, s_hit = 0.0;  // second crossing, back into B0
  double tau = 0.0;                 // total flight time
  int crossings = 0;
};

struct ReturnOptions {
  double t_cap = 0.0;           // <= 0: 20 l
  double grazing_tol = 1e-6;    // |s'| > 1 - tol flags Grazing; 0 disables
  double event_tol = 1e-10;     // crossing time bracket
};

// First return map psi of the section. Crossings are sign changes of the
// side function, bracketed in flight time.
ReturnRecord return_map(const AnnulusChart& chart, double t, double s, const ReturnOptions& opt = {});

// Reversibility defect |I psi I psi (z) - z| with the involution
// I = rho psi_0, rho(t, s) = (t, -s). The t component is wrapped.
double reversibility_defect(const AnnulusChart& chart, double t, double s);

struct BoundaryExtension {
  double period = 0.0;
  std::vector<double> t, t2, tm2;
  bool no_conjugate_points = false;
};

// t_{+2}(t) and t_{-2}(t) on a uniform grid of n_t times from the conjugate
// times within 3 l. Throws ExtensionError if either fails to be nondecreasing
// by more than 1e-6.
BoundaryExtension boundary_extension(const AnnulusChart& chart, int n_t = 64);

struct TwistOptions {
  int n_t = 64;
  int n_s = 65;
  double delta = 1e-3;
  double boundary_standoff = 1e-6;
  bool check_index = true;
};

struct TwistReport {
  double period = 0.0;
  std::vector<double> t;
  std::vector<double> t2, tm2;
  std::vector<double> lift_top, lift_bottom;  // a(t, 1 - delta), a(t, -1 + delta)
  double margin_top = 0.0;     // min_t (t - a(t, 1)) = min_t (l - (t2 - t))
  double margin_bottom = 0.0;  // min_t (a(t, -1) - t) = min_t (l - (t - tm2))
  bool twist = false;
  bool no_conjugate_points = false;
  double boundary_limit_error = 0.0;  // vs. t2 - l and tm2 + l
  std::vector<int> ind_omega;         // at each grid t, when check_index
  bool index_consistent = true;
  int lift_refinements = 0;
};

// Tracks the lift a(t, s) in s from 1 - delta to -1 + delta at every grid t,
// anchored at t2 - l, and compares the boundary values with the extension.
// Throws LiftError when the lift jumps by more than 0.45 l after refinement.
TwistReport twist_check(const AnnulusChart& chart, const TwistOptions& opt = {});

struct PeriodicPoint {
  double t = 0.0, s = 0.0;
  double residual = 0.0;   // |D| at convergence
  double flight_time = 0.0;
  double closure = 0.0;    // phase-space closure of the shot geodesic
  int q = 0;               // rotation class from the lift
};

struct PeriodicPointsResult {
  std::vector<PeriodicPoint> points;
  bool continuum = false;  // Newton Jacobian singular at every converged seed
};

struct PeriodicOptions {
  std::vector<std::pair<double, double>> seeds;  // empty: 16 t x {-0.6, -0.3, 0, 0.3, 0.6}
  double tol = 1e-8;
  double dedupe = 1e-6;
  int max_iterations = 30;
  bool parallel = true;
};

// Zeros of the wrapped displacement psi^p(t, s) - (t, s), classified by the
// rotation q of the lift; only points with the requested q are returned.
PeriodicPointsResult periodic_points(const AnnulusChart& chart, int p, int q, const PeriodicOptions& opt = {});

// Integral of (psi* alpha - alpha) around the ellipse (t0 + rt cos th,
// s0 + rs sin th), K points, derivatives by FFT.
double exactness_defect(const AnnulusChart& chart, double t0, double s0, double rt, double rs, int K = 64);

// det D psi by central differences with step h.
double jacobian_det(const AnnulusChart& chart, double t, double s, double h = 1e-4);

}  // namespace fingeo
