#pragma once

#include <fingeo/errors.hpp>

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <sstream>

namespace fingeo {

// Adaptive Runge-Kutta-Fehlberg 7(8) integration of an autonomous system with
// a projection applied after every accepted step.
template <std::size_t N>
class AdaptiveIntegrator {
 public:
  using State = std::array<double, N>;
  using Rhs = std::function<void(const State&, State&)>;
  using Projector = std::function<void(State&)>;

  struct Options {
    double rtol = 1e-12;
    double atol = 1e-12;
    double initial_step = 1e-2;
    double max_step = 0.25;
    double min_step = 1e-12;
  };

  AdaptiveIntegrator(Rhs rhs, Projector project, Options opt)
      : rhs_(std::move(rhs)),
        project_(std::move(project)),
        opt_(opt),
        controlled_(boost::numeric::odeint::make_controlled(opt.atol, opt.rtol, ErrorStepper())) {}

  void reset(double t, const State& y) {
    t_ = t;
    y_ = y;
    h_ = opt_.initial_step;
  }

  double time() const { return t_; }
  const State& state() const { return y_; }
  double step_size() const { return h_; }

  // Integrates up to t_end. After each accepted step obs(t0, y0, t1, y1) is
  // called with the projected end state; returning false stops early.
  template <class Observer>
  bool advance_to(double t_end, Observer&& obs) {
    auto sys = [this](const State& y, State& dy, double) { rhs_(y, dy); };
    while (t_ < t_end) {
      double dt = std::min(h_, opt_.max_step);
      bool clamped = false;
      if (t_ + dt >= t_end) {
        dt = t_end - t_;
        clamped = true;
      }
      const State y0 = y_;
      const double t0 = t_;
      double tt = t_;
      const auto res = controlled_.try_step(sys, y_, tt, dt);
      if (res == boost::numeric::odeint::fail) {
        if (!(dt >= opt_.min_step)) {
          std::ostringstream os;
          os << "step size collapsed to " << dt << " at t = " << t_;
          throw Error(ErrorCode::Stiffness, os.str());
        }
        h_ = dt;
        continue;
      }
      t_ = clamped ? t_end : tt;
      if (!clamped) h_ = dt;
      if (project_) project_(y_);
      for (double c : y_) {
        if (!std::isfinite(c)) throw Error(ErrorCode::Stiffness, "non-finite state during integration");
      }
      if (!obs(t0, y0, t_, y_)) return false;
    }
    return true;
  }

  bool advance_to(double t_end) {
    return advance_to(t_end, [](double, const State&, double, const State&) { return true; });
  }

  // One unchecked step of size h from y0 followed by the projection. Used to
  // localize events inside an accepted step.
  State step_from(const State& y0, double h) const {
    State y = y0;
    if (h != 0.0) {
      auto sys = [this](const State& s, State& dy, double) { rhs_(s, dy); };
      plain_.do_step(sys, y, 0.0, h);
      if (project_) project_(y);
    }
    return y;
  }

 private:
  using ErrorStepper = boost::numeric::odeint::runge_kutta_fehlberg78<State>;
  using Controlled = decltype(boost::numeric::odeint::make_controlled(0.0, 0.0, ErrorStepper()));

  Rhs rhs_;
  Projector project_;
  Options opt_;
  Controlled controlled_;
  mutable ErrorStepper plain_;
  State y_{};
  double t_ = 0.0;
  double h_ = 1e-2;
};

}  // namespace fingeo
