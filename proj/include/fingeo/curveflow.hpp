#pragma once

#include <fingeo/geodesic.hpp>
#include <fingeo/metric.hpp>

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace fingeo {

// Closed curve sampled at u_i = i / N, u in [0, 1).
struct Loop {
  std::vector<Vec3> samples;

  std::size_t size() const { return samples.size(); }
};

// Circle {x : x.axis = lambda} traversed positively around `axis`.
Loop circle(const Vec3& axis, double lambda, int n);
Loop great_circle(const Vec3& axis, int n);
Loop latitude_circle(const Vec3& axis, double colatitude, int n);
// Great circle with a small centrally symmetric normal perturbation built from
// odd Fourier modes 1, 3, 5 (max amplitude about `amplitude`), then rotated by
// a uniformly random rotation.
Loop perturbed_great_circle(int n, double amplitude, std::mt19937_64& rng);
// n samples of a closed geodesic, uniform in time.
Loop loop_from_arc(const FinslerMetric& metric, const GeodesicArc& arc, int n);
Loop reversed(const Loop& loop);
Loop shifted(const Loop& loop, int k);  // samples[i] -> samples[i + k]

struct LoopGeometry {
  std::vector<Vec3> velocity;  // d gamma / du (4th-order periodic differences)
  std::vector<Vec3> normal;    // x cross unit tangent
  std::vector<double> speed;   // |d gamma / du|
  std::vector<double> kappa;   // round geodesic curvature
  std::vector<double> A;       // F_vv(x, tau)[N, N]
  std::vector<double> w;       // normal velocity A kappa + B
  double length = 0.0;         // F-length, periodic trapezoid rule
  double max_abs_w = 0.0;
  double min_spacing = 0.0;    // min chord between consecutive samples
  double mean_spacing = 0.0;
};

// Geometry and normal velocity from the extrinsic formula
//   w = A kappa + B,  B = -F_vv[x, N] + N^T F_vx tau - F_x . N.
LoopGeometry analyze_loop(const FinslerMetric& metric, const Loop& loop);

double loop_length(const FinslerMetric& metric, const Loop& loop);

// Normal velocity from the Euler-Lagrange covector in a stereographic chart
// centred at every sample.
std::vector<double> normal_velocity_chart(const FinslerMetric& metric, const Loop& loop);

struct VelocityField {
  std::vector<double> w;
  double discrepancy = 0.0;  // max |w_extrinsic - w_chart|
  bool warning = false;      // discrepancy above 1e-5 (1 + max|w|)
};

// Extrinsic normal velocity, cross-checked against the chart computation.
// Throws VelocityInconsistency above 1e-4 (1 + max|w|).
VelocityField normal_velocity(const FinslerMetric& metric, const Loop& loop);

struct EmbeddingReport {
  bool embedded = true;
  bool proximity_warning = false;
  double min_separation = std::numeric_limits<double>::infinity();  // non-adjacent chords
  double mean_spacing = 0.0;
};

// Segment intersection test with spatial hashing; segments are compared in a
// gnomonic projection centred on the pair. Non-adjacent chords closer than a
// quarter of the mean spacing raise the proximity warning.
EmbeddingReport check_embedded(const Loop& loop);

// Periodic cubic spline through the samples on chord-length knots, resampled
// at uniform chord length and projected back to the sphere. The offset of the
// new grid is the mean offset of the old knots, so index shifts commute.
Loop redistribute(const Loop& loop);

// Smooth monotone cutoff: 0 below rho0, 1 above 2 rho0 (quintic smootherstep).
double cutoff(double length, double rho0);

struct StepOptions {
  double rho0 = 0.0;
  int max_halvings = 8;
};

struct StepOutcome {
  Loop loop;
  double dt = 0.0;  // step actually taken
  int halvings = 0;
  bool proximity_warning = false;
};

// Largest stable explicit step 0.4 h^2 / max(chi A); infinity when chi = 0.
double dt_max(const LoopGeometry& g, double rho0);

// x <- normalize(x + dt chi(L) w N), then redistribute. On embeddedness loss
// the step is retried with dt halved up to max_halvings times.
StepOutcome step_detailed(const FinslerMetric& metric, const Loop& loop, const LoopGeometry& g, double dt,
                          const StepOptions& opt);
Loop step(const FinslerMetric& metric, const Loop& loop, double dt, double rho0);

struct TraceRecord {
  double t = 0.0;
  double length = 0.0;
  double max_v = 0.0;
  double dissipation = 0.0;      // chi sum w^2 |gamma'| du at time t
  double dissipation_cum = 0.0;  // trapezoid integral of the above
};

struct FlowTrace {
  std::vector<TraceRecord> records;
  std::vector<std::string> events;
};

struct FlowParams {
  double rho0 = 0.0;
  double eps = 1e-3;
  double ell_floor = -1.0;  // negative: 2 rho0
  double t_max = 50.0;
  double dt_fraction = 0.5;  // of dt_max
  double dt_cap = 0.05;
};

enum class FlowStatus { Converged, BelowFloor, Elapsed };

struct FlowResult {
  Loop loop;
  FlowTrace trace;
  FlowStatus status = FlowStatus::Elapsed;
  double ell = 0.0;  // limit length estimate (Converged) or final length
  double max_v = 0.0;
  long steps = 0;
};

class FlowTimeout : public Error {
 public:
  FlowTimeout(const std::string& what, FlowTrace trace, Loop last)
      : Error(ErrorCode::Timeout, what), trace_(std::move(trace)), last_(std::move(last)) {}
  const FlowTrace& trace() const { return trace_; }
  const Loop& last() const { return last_; }

 private:
  FlowTrace trace_;
  Loop last_;
};

// Runs the flow until the loop enters U(l, eps) (max|w| < eps and
// |L - l| < eps^2 with l extrapolated from the decay of the dissipation), or
// falls below the floor. Throws FlowTimeout at t_max.
FlowResult evolve(const FinslerMetric& metric, const Loop& loop, const FlowParams& params);

// Runs the flow for a fixed time; status is BelowFloor if that happened first.
FlowResult evolve_for(const FinslerMetric& metric, const Loop& loop, const FlowParams& params, double duration);

// |Delta L - int D dt| / Delta L over the trace; 0 when both are below 1e-10.
double dissipation_check(const FlowTrace& trace);

}  // namespace fingeo
