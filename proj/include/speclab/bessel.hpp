#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "speclab/errors.hpp"

namespace speclab {

namespace detail {

inline void check_bessel_order(double order) {
  if (!(order >= 0.0) || std::floor(2.0 * order) != 2.0 * order)
    throw InvalidParameter("Bessel order must be a non-negative integer or half-integer, got " +
                           std::to_string(order));
}

}  // namespace detail

/// First-kind Bessel function J_order(x) for integer or half-integer order.
inline double bessel_value(double order, double x) {
  detail::check_bessel_order(order);
  if (!(x >= 0.0)) throw InvalidParameter("bessel_value: x must be >= 0");
  if (x == 0.0) return order == 0.0 ? 1.0 : 0.0;
  return boost::math::cyl_bessel_j(order, x);
}

/// dJ_order/dx via J' = J_{order-1} - (order / x) J_order.
inline double bessel_derivative(double order, double x) {
  detail::check_bessel_order(order);
  if (order == 0.0) return -bessel_value(1.0, x);
  if (x == 0.0) return order == 1.0 ? 0.5 : 0.0;
  return boost::math::cyl_bessel_j(order - 1.0, x) - order / x * boost::math::cyl_bessel_j(order, x);
}

/// Spherical Bessel j_l(x) = sqrt(pi / 2x) J_{l+1/2}(x).
inline double spherical_bessel(int l, double x) {
  if (l < 0 || !(x >= 0.0)) throw InvalidParameter("spherical_bessel: need l >= 0, x >= 0");
  return boost::math::sph_bessel(static_cast<unsigned>(l), x);
}

/// J_0(x), ..., J_max_order(x) in one pass by Miller's backward recurrence,
/// normalized with J_0 + 2 sum J_{2k} = 1.
inline std::vector<double> bessel_j_sequence(int max_order, double x) {
  if (max_order < 0 || !(x >= 0.0)) throw InvalidParameter("bessel_j_sequence: bad arguments");
  std::vector<double> out(max_order + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  const int top_order = std::max(max_order, static_cast<int>(std::ceil(x)));
  int start = top_order + 20 + static_cast<int>(std::sqrt(60.0 * top_order));
  if (start % 2) ++start;

  constexpr double big = 1e250, small = 1e-250;
  double next = 0.0, cur = 1e-30, norm_sum = 0.0;
  for (int n = start; n > 0; --n) {
    const double prev = 2.0 * n / x * cur - next;  // J_{n-1}
    next = cur;
    cur = prev;
    if (n - 1 <= max_order) out[n - 1] = cur;
    if ((n - 1) % 2 == 0 && n - 1 > 0) norm_sum += 2.0 * cur;
    if (std::abs(cur) > big) {
      cur *= small;
      next *= small;
      norm_sum *= small;
      for (int m = n - 1; m <= max_order; ++m) out[m] *= small;
    }
  }
  norm_sum += cur;  // J_0 term
  for (double& v : out) v /= norm_sum;
  return out;
}

/// Positive zeros of J_order below `x_max`, ascending. Brackets come from a
/// scan at step 0.5, well below the minimal zero spacing (> 3); each bracket
/// is bisected to full double precision.
inline std::vector<double> bessel_zeros_below(double order, double x_max) {
  detail::check_bessel_order(order);
  std::vector<double> zeros;
  if (x_max <= order) return zeros;  // j_{order,1} > order
  constexpr double step = 0.5;
  double a = std::max(order, 1e-3);
  double fa = bessel_value(order, a);
  while (a < x_max) {
    const double b = std::min(a + step, x_max);
    const double fb = bessel_value(order, b);
    if (fa == 0.0) {
      zeros.push_back(a);
    } else if (fa * fb < 0.0) {
      double lo = a, hi = b, flo = fa;
      for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = bessel_value(order, mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      const double root = 0.5 * (lo + hi);
      if (root < x_max) zeros.push_back(root);
    }
    a = b;
    fa = fb;
  }
  return zeros;
}

/// n-th positive zero j_{order,n}.
inline double bessel_zero(double order, int n) {
  detail::check_bessel_order(order);
  if (n < 1) throw InvalidParameter("bessel_zero: n must be >= 1");
  const double limit = (n + 0.5 * order + 2.0) * std::numbers::pi + 10.0;
  const auto zeros = bessel_zeros_below(order, limit);
  if (static_cast<int>(zeros.size()) < n)
    throw ConvergenceFailure("bessel_zero: no bracket for zero " + std::to_string(n) + " of order " +
                             std::to_string(order));
  return zeros[n - 1];
}

}  // namespace speclab
