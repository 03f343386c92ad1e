#pragma once

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "speclab/errors.hpp"

namespace speclab {

/// Fully normalized associated Legendre function, scaled so that
/// P(l, m, cos theta) * exp(i m phi) is orthonormal on the unit sphere.
/// No Condon-Shortley phase. Requires 0 <= m <= l.
inline double legendre_normalized(int l, int m, double x) {
  if (m < 0 || m > l) throw InvalidParameter("legendre_normalized: need 0 <= m <= l");
  const double s = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
  double pmm = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  for (int k = 1; k <= m; ++k) pmm *= std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * s;
  if (l == m) return pmm;
  double pm1 = std::sqrt(2.0 * m + 3.0) * x * pmm;
  if (l == m + 1) return pm1;
  double p_prev = pmm, p_cur = pm1;
  for (int n = m + 2; n <= l; ++n) {
    const double nn = n, mm = m;
    const double a = std::sqrt((4.0 * nn * nn - 1.0) / (nn * nn - mm * mm));
    const double b = std::sqrt(((nn - 1.0) * (nn - 1.0) - mm * mm) / (4.0 * (nn - 1.0) * (nn - 1.0) - 1.0));
    const double p_next = a * (x * p_cur - b * p_prev);
    p_prev = p_cur;
    p_cur = p_next;
  }
  return p_cur;
}

/// Real orthonormal spherical harmonic of degree l and order q (-l <= q <= l):
/// q > 0 pairs with cos(q phi), q < 0 with sin(|q| phi).
inline double real_spherical_harmonic(int l, int q, double theta, double phi) {
  if (std::abs(q) > l) throw InvalidParameter("real_spherical_harmonic: |q| > l");
  const double p = legendre_normalized(l, std::abs(q), std::cos(theta));
  if (q == 0) return p;
  const double trig = q > 0 ? std::cos(q * phi) : std::sin(-q * phi);
  return std::numbers::sqrt2 * p * trig;
}

/// Legendre polynomial P_n(x).
inline double legendre_polynomial(int n, double x) {
  if (n < 0) throw InvalidParameter("legendre_polynomial: n must be >= 0");
  if (n == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

}  // namespace speclab
