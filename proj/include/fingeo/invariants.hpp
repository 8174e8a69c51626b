#pragma once

#include <fingeo/metric.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace fingeo {

struct InvariantCheck {
  std::string name;
  double value = 0.0;      // measured defect (or margin, for convexity)
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
};

struct InvariantReport {
  std::string metric;
  std::vector<InvariantCheck> checks;
  bool all_passed() const;
};

struct InvariantOptions {
  int n_states = 200;  // random unit states for the pointwise metric checks
  int convexity_points = 100;
  int convexity_dirs = 100;
  int loop_samples = 96;
  std::uint64_t seed = 1;
};

// Pointwise metric identities (homogeneity, reversibility, Euler identity,
// fiber Hessian kernel, derivative consistency, convexity grid), geodesic
// flow checks (speed, time reversal), curve flow equivariance and oddness of
// the normal velocity under reversal, Sturm interlacing and symplecticity of
// the monodromy of the closed geodesic near the x3 = 0 great circle.
// Failures of the numerical machinery are reported as failed checks; a metric
// that is not strongly convex throws ConvexityViolation before any check runs.
InvariantReport run_invariants(const FinslerMetric& metric, const InvariantOptions& opt = {});

}  // namespace fingeo
