#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "speclab/bessel.hpp"
#include "speclab/quadrature.hpp"
#include "speclab/spectrum.hpp"

namespace speclab {

namespace detail {

/// Zeros of J_{order + shift} below x_max for order = 0, 1, ... until the
/// first zero exceeds x_max. Verifies interlacing j_{m,n} < j_{m+1,n} < j_{m,n+1}
/// so that no zero can have been skipped.
inline std::vector<std::vector<double>> zero_table(double shift, double x_max) {
  std::vector<std::vector<double>> table;
  for (int m = 0;; ++m) {
    auto zeros = bessel_zeros_below(m + shift, x_max);
    if (zeros.empty()) break;
    table.push_back(std::move(zeros));
  }
  for (std::size_t m = 0; m + 1 < table.size(); ++m) {
    const auto& a = table[m];
    const auto& b = table[m + 1];
    if (b.size() > a.size() || b.size() + 1 < a.size())
      throw ConvergenceFailure("Bessel zero counts violate interlacing at order " + std::to_string(m + shift));
    for (std::size_t n = 0; n < b.size(); ++n) {
      if (!(a[n] < b[n]) || (n + 1 < a.size() && !(b[n] < a[n + 1])))
        throw ConvergenceFailure("Bessel zeros violate interlacing at order " + std::to_string(m + shift));
    }
  }
  return table;
}

/// Integral of f(s)^2 s^power over [0, 1] with a Gauss rule sized for an
/// integrand oscillating at wavenumber `j`.
template <class F>
double radial_norm(F&& f, double j, int power) {
  const int n = static_cast<int>(std::ceil(j)) + 40;
  const auto rule = gauss_legendre(n, 0.0, 1.0);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rule.nodes[i];
    const double v = f(x);
    s += rule.weights[i] * v * v * (power == 1 ? x : x * x);
  }
  return s;
}

inline void index_spectrum(Spectrum& s, double rel_tie = 0.0) {
  for (std::size_t i = 0; i < s.modes.size(); ++i) s.modes[i].k = static_cast<int>(i) + 1;
  s.eigenspaces.clear();
  for (std::size_t i = 0; i < s.modes.size(); ++i) {
    if (!s.eigenspaces.empty()) {
      const double prev = s.modes[s.eigenspaces.back().front()].lambda;
      if (std::abs(s.modes[i].lambda - prev) <= rel_tie * prev) {
        s.eigenspaces.back().push_back(i);
        continue;
      }
    }
    s.eigenspaces.push_back({i});
  }
}

}  // namespace detail

/// First K Dirichlet modes of the disk of radius R. Ties are ordered cos
/// before sin; trace amplitudes come from the L2 normalization computed by
/// radial quadrature.
inline Spectrum disk_spectrum(double R, int K) {
  if (!(R > 0.0) || K < 1) throw InvalidParameter("disk_spectrum: need R > 0 and K >= 1");
  Spectrum out;
  out.domain = make_disk(R);
  // N(x^2) ~ x^2 / 4 - x / 2 in terms of the scaled zero x = j
  double x_max = 2.0 * std::sqrt(1.15 * K + 20.0) + 4.0;
  std::vector<std::tuple<double, int, int>> found;  // (j, m, n)
  for (;;) {
    const auto table = detail::zero_table(0.0, x_max);
    found.clear();
    std::size_t count = 0;
    for (std::size_t m = 0; m < table.size(); ++m)
      for (std::size_t n = 0; n < table[m].size(); ++n) {
        found.emplace_back(table[m][n], static_cast<int>(m), static_cast<int>(n) + 1);
        count += m == 0 ? 1 : 2;
      }
    if (count >= static_cast<std::size_t>(K)) break;
    x_max *= 1.2;
  }
  std::sort(found.begin(), found.end());
  for (const auto& [j, m, n] : found) {
    if (out.modes.size() >= static_cast<std::size_t>(K)) break;
    const double radial = detail::radial_norm([&](double s) { return bessel_value(m, j * s); }, j, 1);
    const double angular = m == 0 ? 2.0 * std::numbers::pi : std::numbers::pi;
    const double c = 1.0 / std::sqrt(R * R * radial * angular);
    const double amp = c * (j / R) * bessel_derivative(m, j);
    const double lambda = (j / R) * (j / R);
    out.modes.push_back({0, lambda, DiskFamily{m, n, Parity::cos}, amp});
    if (m > 0 && out.modes.size() < static_cast<std::size_t>(K))
      out.modes.push_back({0, lambda, DiskFamily{m, n, Parity::sin}, amp});
  }
  detail::index_spectrum(out);
  return out;
}

/// First K Dirichlet modes of the ball of radius R. Each (l, n) eigenvalue
/// carries 2l + 1 real spherical harmonics, ordered by ascending q.
inline Spectrum ball_spectrum(double R, int K) {
  if (!(R > 0.0) || K < 1) throw InvalidParameter("ball_spectrum: need R > 0 and K >= 1");
  Spectrum out;
  out.domain = make_ball(R);
  // N(x^2) ~ 2 x^3 / (9 pi)
  double x_max = std::cbrt(4.5 * std::numbers::pi * (1.15 * K + 20.0)) + 3.0;
  std::vector<std::tuple<double, int, int>> found;  // (j, l, n)
  for (;;) {
    const auto table = detail::zero_table(0.5, x_max);
    found.clear();
    std::size_t count = 0;
    for (std::size_t l = 0; l < table.size(); ++l)
      for (std::size_t n = 0; n < table[l].size(); ++n) {
        found.emplace_back(table[l][n], static_cast<int>(l), static_cast<int>(n) + 1);
        count += 2 * l + 1;
      }
    if (count >= static_cast<std::size_t>(K)) break;
    x_max *= 1.2;
  }
  std::sort(found.begin(), found.end());
  for (const auto& [j, l, n] : found) {
    if (out.modes.size() >= static_cast<std::size_t>(K)) break;
    const double radial = detail::radial_norm([&](double s) { return spherical_bessel(l, j * s); }, j, 2);
    const double c = 1.0 / std::sqrt(R * R * R * radial);
    const double djl = l == 0 ? -spherical_bessel(1, j) : spherical_bessel(l - 1, j) - (l + 1) / j * spherical_bessel(l, j);
    const double amp = c * (j / R) * djl;
    const double lambda = (j / R) * (j / R);
    for (int q = -l; q <= l && out.modes.size() < static_cast<std::size_t>(K); ++q)
      out.modes.push_back({0, lambda, BallFamily{l, n, q}, amp});
  }
  detail::index_spectrum(out);
  return out;
}

/// Brute-force eigenvalue count of the disk: scaled zeros with (j/R)^2 < Lambda,
/// counting the cos/sin multiplicity.
inline std::size_t disk_count_below(double R, double Lambda) {
  const double x_max = std::sqrt(Lambda) * R;
  std::size_t count = 0;
  for (int m = 0;; ++m) {
    const auto zeros = bessel_zeros_below(m, x_max);
    if (zeros.empty()) break;
    count += zeros.size() * (m == 0 ? 1 : 2);
  }
  return count;
}

}  // namespace speclab
