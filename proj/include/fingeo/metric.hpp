#pragma once

#include <fingeo/sphere.hpp>

#include <functional>
#include <memory>
#include <string>

namespace fingeo {

// Value and derivatives of a fiberwise 1-homogeneous extension of F to
// R^3 x R^3. Fvx(i, j) = d^2 F / dv_i dx_j.
struct MetricJet {
  double F = 0.0;
  Vec3 Fv = Vec3::Zero();
  Vec3 Fx = Vec3::Zero();
  Mat3 Fvv = Mat3::Zero();
  Mat3 Fvx = Mat3::Zero();

  // G = F^2 / 2 and its derivatives.
  double G() const { return 0.5 * F * F; }
  Vec3 Gv() const { return F * Fv; }
  Vec3 Gx() const { return F * Fx; }
  Mat3 Gvv() const { return Fv * Fv.transpose() + F * Fvv; }
  Mat3 Gvx() const { return Fv * Fx.transpose() + F * Fvx; }
};

class MetricModel {
 public:
  virtual ~MetricModel() = default;
  virtual double eval(const Vec3& x, const Vec3& v) const = 0;
  virtual MetricJet jet(const Vec3& x, const Vec3& v) const = 0;
  virtual Vec3 fiber_gradient(const Vec3& x, const Vec3& v) const { return jet(x, v).Fv; }
  virtual bool analytic() const { return true; }
  virtual std::string name() const = 0;
};

// Immutable, cheaply copyable handle. Safe to share between threads.
class FinslerMetric {
 public:
  explicit FinslerMetric(std::shared_ptr<const MetricModel> model);

  double F(const Vec3& x, const Vec3& v) const { return model_->eval(x, v); }
  // Throws ZeroSection for v = 0.
  MetricJet jet(const Vec3& x, const Vec3& v) const;
  Vec3 Fv(const Vec3& x, const Vec3& v) const;

  bool has_analytic_derivatives() const { return model_->analytic(); }
  std::string name() const { return model_->name(); }
  const MetricModel& model() const { return *model_; }

 private:
  std::shared_ptr<const MetricModel> model_;
};

// A(x, v) = F_vv(x, v)[Jv, Jv].
double convexity_A(const FinslerMetric& metric, const Vec3& x, const Vec3& v);

struct ConvexityReport {
  double a0 = 0.0;  // minimum of A over the grid of round-unit vectors
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();
};

// n_points Fibonacci points times n_dirs directions.
ConvexityReport convexity_grid(const FinslerMetric& metric, int n_points = 100, int n_dirs = 100);

// Quadratic bump b(x) = x^T Q x + q.x + q0.
struct QuadraticBump {
  Mat3 Q = Mat3::Zero();
  Vec3 q = Vec3::Zero();
  double q0 = 0.0;

  static QuadraticBump x3_squared();
  double operator()(const Vec3& x) const { return x.dot(Q * x) + q.dot(x) + q0; }
  Vec3 gradient(const Vec3& x) const { return (Q + Q.transpose()) * x + q; }
};

using ScalarField = std::function<double(const Vec3&)>;
using GradientField = std::function<Vec3(const Vec3&)>;
using FinslerFunction = std::function<double(const Vec3&, const Vec3&)>;

FinslerMetric make_round();

// Pullback of the Euclidean metric under x -> (a x1, b x2, c x3).
FinslerMetric make_ellipsoid(double a, double b, double c);

// F = (1 + eps b(x)) |v|, |eps| < 0.3.
FinslerMetric make_perturbed_riemannian(double eps, const QuadraticBump& bump = QuadraticBump::x3_squared());
// Without a gradient the base derivative of the bump is taken by central differences.
FinslerMetric make_perturbed_riemannian(double eps, ScalarField bump, GradientField gradient = {});

// F = (|v|^4 + eps q(x, v))^(1/4) with
//   q(x, v) = (1 + x3^2 / 2) (v1^4 + v2^4 + v3^4 - 3/5 |v|^4).
// The v-part is a harmonic quartic, so q averages to zero on every circle of
// directions and F is not Riemannian for eps > 0. Construction runs
// convexity_grid and throws ConvexityViolation if A <= 0 anywhere.
FinslerMetric make_quartic(double eps);

// c F, used for homothety checks.
FinslerMetric make_scaled(const FinslerMetric& metric, double c);

// Derivative stack by central differences in ambient coordinates of the
// extension F(x/|x|, v - (v.x)x/|x|^2). First derivatives use h = 1e-5 s,
// second derivatives nested differences with h = 1e-4 s, s = max(|v|, 1e-3).
FinslerMetric finite_difference_derivatives(FinslerFunction f, std::string name = "finite-difference");

}  // namespace fingeo
