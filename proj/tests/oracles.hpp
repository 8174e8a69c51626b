#pragma once

// Independent reference values used by the tests.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/ellint_2.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oracle {

// Perimeter of the ellipse with semi-axes alpha, beta:
// int_0^{2 pi} sqrt(alpha^2 sin^2 u + beta^2 cos^2 u) du = 4 max E(k).
inline double ellipse_perimeter(double alpha, double beta) {
  const double hi = std::max(alpha, beta), lo = std::min(alpha, beta);
  return 4.0 * hi * boost::math::ellint_2(std::sqrt(1.0 - (lo * lo) / (hi * hi)));
}

// The same integral by adaptive Gauss-Kronrod quadrature.
inline double ellipse_perimeter_quadrature(double alpha, double beta) {
  auto f = [&](double u) { return std::sqrt(alpha * alpha * std::sin(u) * std::sin(u) + beta * beta * std::cos(u) * std::cos(u)); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 2 * std::numbers::pi, 15, 1e-14);
}

}  // namespace oracle
