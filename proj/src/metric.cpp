#include <fingeo/metric.hpp>

#include <fingeo/errors.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace fingeo {

namespace {

std::string fmt_state(const Vec3& x, const Vec3& v) {
  std::ostringstream os;
  os.precision(6);
  os << "x=(" << x[0] << "," << x[1] << "," << x[2] << ") v=(" << v[0] << "," << v[1] << "," << v[2] << ")";
  return os.str();
}

class RoundModel final : public MetricModel {
 public:
  double eval(const Vec3&, const Vec3& v) const override { return v.norm(); }
  Vec3 fiber_gradient(const Vec3&, const Vec3& v) const override { return v / v.norm(); }
  MetricJet jet(const Vec3&, const Vec3& v) const override {
    MetricJet j;
    const double r = v.norm();
    const Vec3 u = v / r;
    j.F = r;
    j.Fv = u;
    j.Fvv = (Mat3::Identity() - u * u.transpose()) / r;
    return j;
  }
  std::string name() const override { return "round"; }
};

class EllipsoidModel final : public MetricModel {
 public:
  explicit EllipsoidModel(const Vec3& axes) : d2_(axes.cwiseProduct(axes)), axes_(axes) {}
  double eval(const Vec3&, const Vec3& v) const override { return axes_.cwiseProduct(v).norm(); }
  Vec3 fiber_gradient(const Vec3& x, const Vec3& v) const override {
    return d2_.cwiseProduct(v) / eval(x, v);
  }
  MetricJet jet(const Vec3& x, const Vec3& v) const override {
    MetricJet j;
    j.F = eval(x, v);
    j.Fv = d2_.cwiseProduct(v) / j.F;
    j.Fvv = (Mat3(d2_.asDiagonal()) - j.Fv * j.Fv.transpose()) / j.F;
    return j;
  }
  std::string name() const override {
    std::ostringstream os;
    os << "ellipsoid(" << axes_[0] << "," << axes_[1] << "," << axes_[2] << ")";
    return os.str();
  }

 private:
  Vec3 d2_;
  Vec3 axes_;
};

class ConformalModel final : public MetricModel {
 public:
  ConformalModel(double eps, ScalarField bump, GradientField gradient, std::string label)
      : eps_(eps), bump_(std::move(bump)), gradient_(std::move(gradient)), label_(std::move(label)) {}

  double eval(const Vec3& x, const Vec3& v) const override { return phi(x) * v.norm(); }
  Vec3 fiber_gradient(const Vec3& x, const Vec3& v) const override { return phi(x) * v / v.norm(); }
  MetricJet jet(const Vec3& x, const Vec3& v) const override {
    MetricJet j;
    const double r = v.norm();
    const Vec3 u = v / r;
    const double p = phi(x);
    const Vec3 dphi = eps_ * grad(x);
    j.F = p * r;
    j.Fv = p * u;
    j.Fx = r * dphi;
    j.Fvv = p * (Mat3::Identity() - u * u.transpose()) / r;
    j.Fvx = u * dphi.transpose();
    return j;
  }
  std::string name() const override { return label_; }

 private:
  double phi(const Vec3& x) const { return 1.0 + eps_ * bump_(x); }
  Vec3 grad(const Vec3& x) const {
    if (gradient_) return gradient_(x);
    const double h = 1e-5;
    Vec3 g;
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e[k] = h;
      g[k] = (bump_(x + e) - bump_(x - e)) / (2.0 * h);
    }
    return g;
  }

  double eps_;
  ScalarField bump_;
  GradientField gradient_;
  std::string label_;
};

class QuarticModel final : public MetricModel {
 public:
  explicit QuarticModel(double eps) : eps_(eps) {}

  double eval(const Vec3& x, const Vec3& v) const override {
    const double r2 = v.squaredNorm();
    return std::pow(r2 * r2 + eps_ * coef(x) * harmonic(v, r2), 0.25);
  }

  MetricJet jet(const Vec3& x, const Vec3& v) const override {
    const double r2 = v.squaredNorm();
    const double c = coef(x);
    const Vec3 dc(0.0, 0.0, x[2]);
    const double h = harmonic(v, r2);
    const Vec3 v3 = v.cwiseProduct(v).cwiseProduct(v);
    const Vec3 hv = 4.0 * v3 - 2.4 * r2 * v;
    const Mat3 hvv = Mat3(12.0 * v.cwiseProduct(v).asDiagonal()) -
                     2.4 * (r2 * Mat3::Identity() + 2.0 * v * v.transpose());

    const double Q = r2 * r2 + eps_ * c * h;
    const Vec3 Qv = 4.0 * r2 * v + eps_ * c * hv;
    const Mat3 Qvv = 4.0 * r2 * Mat3::Identity() + 8.0 * v * v.transpose() + eps_ * c * hvv;
    const Vec3 Qx = eps_ * h * dc;
    const Mat3 Qvx = eps_ * hv * dc.transpose();

    MetricJet j;
    j.F = std::pow(Q, 0.25);
    const double q34 = j.F * j.F * j.F;  // Q^(3/4)
    const double q74 = q34 * Q;          // Q^(7/4)
    j.Fv = Qv / (4.0 * q34);
    j.Fx = Qx / (4.0 * q34);
    j.Fvv = Qvv / (4.0 * q34) - (3.0 / 16.0) * Qv * Qv.transpose() / q74;
    j.Fvx = Qvx / (4.0 * q34) - (3.0 / 16.0) * Qv * Qx.transpose() / q74;
    return j;
  }

  std::string name() const override {
    std::ostringstream os;
    os << "quartic(" << eps_ << ")";
    return os.str();
  }

 private:
  static double coef(const Vec3& x) { return 1.0 + 0.5 * x[2] * x[2]; }
  static double harmonic(const Vec3& v, double r2) {
    const Vec3 v2 = v.cwiseProduct(v);
    return v2.squaredNorm() - 0.6 * r2 * r2;
  }

  double eps_;
};

class ScaledModel final : public MetricModel {
 public:
  ScaledModel(FinslerMetric base, double c) : base_(std::move(base)), c_(c) {}
  double eval(const Vec3& x, const Vec3& v) const override { return c_ * base_.F(x, v); }
  Vec3 fiber_gradient(const Vec3& x, const Vec3& v) const override { return c_ * base_.Fv(x, v); }
  MetricJet jet(const Vec3& x, const Vec3& v) const override {
    MetricJet j = base_.jet(x, v);
    j.F *= c_;
    j.Fv *= c_;
    j.Fx *= c_;
    j.Fvv *= c_;
    j.Fvx *= c_;
    return j;
  }
  bool analytic() const override { return base_.has_analytic_derivatives(); }
  std::string name() const override {
    std::ostringstream os;
    os << c_ << "*" << base_.name();
    return os.str();
  }

 private:
  FinslerMetric base_;
  double c_;
};

class FiniteDifferenceModel final : public MetricModel {
 public:
  FiniteDifferenceModel(FinslerFunction f, std::string label) : f_(std::move(f)), label_(std::move(label)) {}

  double eval(const Vec3& x, const Vec3& v) const override {
    const double n = x.norm();
    const Vec3 xh = x / n;
    return f_(xh, v - v.dot(xh) * xh);
  }

  MetricJet jet(const Vec3& x, const Vec3& v) const override {
    const double s = std::max(v.norm(), 1e-3);
    const double h1 = 1e-5 * s;
    const double h2 = 1e-4 * s;
    const double k1 = 1e-5;
    const double k2 = 1e-4;
    const Mat3 I = Mat3::Identity();

    MetricJet j;
    j.F = eval(x, v);
    for (int i = 0; i < 3; ++i) {
      j.Fv[i] = (eval(x, v + h1 * I.col(i)) - eval(x, v - h1 * I.col(i))) / (2.0 * h1);
      j.Fx[i] = (eval(x + k1 * I.col(i), v) - eval(x - k1 * I.col(i), v)) / (2.0 * k1);
    }
    for (int i = 0; i < 3; ++i) {
      for (int k = i; k < 3; ++k) {
        const Vec3 a = h2 * I.col(i);
        const Vec3 b = h2 * I.col(k);
        const double d = eval(x, v + a + b) - eval(x, v + a - b) - eval(x, v - a + b) + eval(x, v - a - b);
        j.Fvv(i, k) = j.Fvv(k, i) = d / (4.0 * h2 * h2);
      }
    }
    for (int i = 0; i < 3; ++i) {
      for (int k = 0; k < 3; ++k) {
        const Vec3 a = h2 * I.col(i);
        const Vec3 b = k2 * I.col(k);
        const double d = eval(x + b, v + a) - eval(x + b, v - a) - eval(x - b, v + a) + eval(x - b, v - a);
        j.Fvx(i, k) = d / (4.0 * h2 * k2);
      }
    }
    return j;
  }

  Vec3 fiber_gradient(const Vec3& x, const Vec3& v) const override {
    const double h1 = 1e-5 * std::max(v.norm(), 1e-3);
    Vec3 g;
    for (int i = 0; i < 3; ++i) {
      Vec3 e = Vec3::Zero();
      e[i] = h1;
      g[i] = (eval(x, v + e) - eval(x, v - e)) / (2.0 * h1);
    }
    return g;
  }

  bool analytic() const override { return false; }
  std::string name() const override { return label_; }

 private:
  FinslerFunction f_;
  std::string label_;
};

void check_convex(const FinslerMetric& metric) {
  const ConvexityReport r = convexity_grid(metric);
  if (!(r.a0 > 0.0)) {
    std::ostringstream os;
    os << metric.name() << " has A = " << r.a0 << " at " << fmt_state(r.x, r.v);
    throw Error(ErrorCode::ConvexityViolation, os.str());
  }
}

}  // namespace

FinslerMetric::FinslerMetric(std::shared_ptr<const MetricModel> model) : model_(std::move(model)) {
  if (!model_) throw Error(ErrorCode::InvalidParameter, "null metric model");
}

MetricJet FinslerMetric::jet(const Vec3& x, const Vec3& v) const {
  if (v.squaredNorm() == 0.0) throw Error(ErrorCode::ZeroSection, "derivatives requested at v = 0");
  return model_->jet(x, v);
}

Vec3 FinslerMetric::Fv(const Vec3& x, const Vec3& v) const {
  if (v.squaredNorm() == 0.0) throw Error(ErrorCode::ZeroSection, "fiber gradient requested at v = 0");
  return model_->fiber_gradient(x, v);
}

double convexity_A(const FinslerMetric& metric, const Vec3& x, const Vec3& v) {
  const Vec3 jv = rotate_j(x, v);
  return jv.dot(metric.jet(x, v).Fvv * jv);
}

ConvexityReport convexity_grid(const FinslerMetric& metric, int n_points, int n_dirs) {
  ConvexityReport best;
  best.a0 = std::numeric_limits<double>::infinity();
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n_points; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n_points;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 x(rho * std::cos(golden * i), rho * std::sin(golden * i), z);
    const Mat32 e = tangent_basis(x);
    for (int k = 0; k < n_dirs; ++k) {
      const double th = 2.0 * kPi * (k + 0.5) / n_dirs;
      const Vec3 v = std::cos(th) * e.col(0) + std::sin(th) * e.col(1);
      double a = convexity_A(metric, x, v);
      if (!std::isfinite(a)) a = -std::numeric_limits<double>::infinity();
      if (a < best.a0) {
        best.a0 = a;
        best.x = x;
        best.v = v;
      }
    }
  }
  return best;
}

QuadraticBump QuadraticBump::x3_squared() {
  QuadraticBump b;
  b.Q(2, 2) = 1.0;
  return b;
}

FinslerMetric make_round() { return FinslerMetric(std::make_shared<RoundModel>()); }

FinslerMetric make_ellipsoid(double a, double b, double c) {
  if (!(a > 0.0 && a <= b && b <= c) || !std::isfinite(c)) {
    std::ostringstream os;
    os << "ellipsoid axes must satisfy 0 < a <= b <= c, got (" << a << ", " << b << ", " << c << ")";
    throw Error(ErrorCode::InvalidParameter, os.str());
  }
  return FinslerMetric(std::make_shared<EllipsoidModel>(Vec3(a, b, c)));
}

FinslerMetric make_perturbed_riemannian(double eps, const QuadraticBump& bump) {
  return make_perturbed_riemannian(
      eps, [bump](const Vec3& x) { return bump(x); }, [bump](const Vec3& x) { return bump.gradient(x); });
}

FinslerMetric make_perturbed_riemannian(double eps, ScalarField bump, GradientField gradient) {
  if (!(std::abs(eps) < 0.3)) {
    throw Error(ErrorCode::InvalidParameter, "perturbation size must satisfy |eps| < 0.3");
  }
  if (!bump) throw Error(ErrorCode::InvalidParameter, "perturbation bump is empty");
  std::ostringstream os;
  os << "perturbed(" << eps << ")";
  FinslerMetric m(std::make_shared<ConformalModel>(eps, std::move(bump), std::move(gradient), os.str()));
  check_convex(m);
  return m;
}

FinslerMetric make_quartic(double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw Error(ErrorCode::InvalidParameter, "quartic parameter must be a finite eps >= 0");
  }
  FinslerMetric m(std::make_shared<QuarticModel>(eps));
  check_convex(m);
  return m;
}

FinslerMetric make_scaled(const FinslerMetric& metric, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorCode::InvalidParameter, "scale must be positive");
  return FinslerMetric(std::make_shared<ScaledModel>(metric, c));
}

FinslerMetric finite_difference_derivatives(FinslerFunction f, std::string name) {
  if (!f) throw Error(ErrorCode::InvalidParameter, "empty Finsler function");
  auto guarded = [f = std::move(f)](const Vec3& x, const Vec3& v) {
    if (v.squaredNorm() == 0.0) throw Error(ErrorCode::ZeroSection, "evaluation at v = 0");
    return f(x, v);
  };
  return FinslerMetric(std::make_shared<FiniteDifferenceModel>(std::move(guarded), std::move(name)));
}

}  // namespace fingeo
