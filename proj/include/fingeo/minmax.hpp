#pragma once

#include <fingeo/curveflow.hpp>
#include <fingeo/jacobi.hpp>

#include <optional>
#include <string>
#include <vector>

namespace fingeo {

struct FamilyMember {
  Vec3 axis = Vec3::UnitZ();
  double lambda = 0.0;
};

// Round circles {x : x.axis = lambda}. dim 1 fixes the axis e3; dim 2 uses
// axes (0, sin t, cos t); dim 3 covers a hemisphere of axes. Members are
// identified up to (axis, lambda) ~ (-axis, -lambda).
struct CircleFamily {
  int dim = 1;
  int resolution = 2;
  int n_samples = 64;
  std::vector<FamilyMember> members;

  Loop member(std::size_t i) const;
};

// lambda runs over 2r + 1 values in [-1 + delta, 1 - delta] with delta = 1e-3,
// including 0. Axes: dim 2 at angles k pi / (2r), k < 2r; dim 3 at polar
// angles k pi / (2r), k = 0..r, azimuths multiples of pi / (2r) (only [0, pi)
// on the equator, a single axis at the pole).
CircleFamily family(int dim, int resolution, int n_samples = 64);

struct MinmaxParams {
  FlowParams flow;
  double epoch = 0.05;
  int max_epochs = 400;
  double rel_tol = 1e-5;
  bool parallel = true;
};

struct MinmaxResult {
  double ell = 0.0;  // limiting family max
  Loop witness;
  std::size_t witness_index = 0;
  double witness_max_v = 0.0;
  std::vector<double> epoch_max;  // family max after each epoch (index 0: initial)
  int epochs = 0;
};

// Flows every member with a shared schedule of fixed-length epochs and tracks
// the family max length. Members that fall below the floor are dropped.
// Throws Timeout if the max has not stabilized within max_epochs.
MinmaxResult minmax_value(const FinslerMetric& metric, const CircleFamily& fam, const MinmaxParams& params);

struct BrokenLoop {
  std::vector<Vec3> vertices;
};

double broken_energy(const FinslerMetric& metric, const BrokenLoop& loop);

struct DescentOptions {
  double tol = 1e-8;           // gradient norm
  double energy_floor = 1e-14;  // point curves
  int max_iterations = 2000;
  double injrad = 0.0;  // <= 0: injectivity_radius_estimate
};

struct DescentResult {
  BrokenLoop loop;
  double energy = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  std::vector<double> energies;
};

// Projected gradient descent of E_k = k sum d(x_i, x_{i+1})^2 with Armijo
// backtracking from a Barzilai-Borwein step. Throws DomainExit when a
// segment reaches the injectivity radius bound.
DescentResult descend_broken(const FinslerMetric& metric, const BrokenLoop& seed, const DescentOptions& opt = {});

// k = ceil(4 L / injrad) vertices sampled from a loop.
BrokenLoop broken_from_loop(const FinslerMetric& metric, const Loop& loop, double injrad);

struct ClosedGeodesic {
  GeodesicArc arc;
  Loop witness;
  int family_dim = 0;
  double level = 0.0;  // min-max value of the family
  bool simple = false;
  std::optional<IndexReport> index;
  std::string index_error;
};

struct ThreeGeodesics {
  std::vector<ClosedGeodesic> geodesics;  // distinct, in order of discovery
  std::vector<double> levels;             // the three min-max values
  bool degenerate = false;
};

struct ThreeGeodesicsOptions {
  MinmaxParams minmax;
  int resolution = 2;
  int n_samples = 64;
  int index_iterations = 1;
};

// Same geodesic: lengths within 1e-4 l and round Hausdorff distance of the
// traces below 1e-3.
bool same_geodesic(const FinslerMetric& metric, const GeodesicArc& a, const GeodesicArc& b);

ThreeGeodesics three_geodesics(const FinslerMetric& metric, const ThreeGeodesicsOptions& opt);

}  // namespace fingeo
