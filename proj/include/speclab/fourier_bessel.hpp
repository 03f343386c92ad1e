#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "speclab/bessel.hpp"
#include "speclab/geometry.hpp"

namespace speclab {

enum class Parity { cos, sin };

/// One Helmholtz basis function J_order(k r) trig(order * theta) in polar
/// coordinates about the basis center.
struct BasisColumn {
  int order = 0;
  Parity parity = Parity::cos;
  bool operator==(const BasisColumn&) const = default;
};

struct FourierBesselBasis {
  Point center{0.0, 0.0, 0.0};
  std::vector<BasisColumn> columns;

  int max_order() const {
    int m = 0;
    for (const auto& c : columns) m = std::max(m, c.order);
    return m;
  }
  std::size_t size() const { return columns.size(); }
};

/// Values of every basis column at `p` for wavenumber `k`.
inline void basis_values(const FourierBesselBasis& basis, double k, const Point& p, std::span<double> out) {
  const double dx = p[0] - basis.center[0], dy = p[1] - basis.center[1];
  const double r = std::hypot(dx, dy), theta = std::atan2(dy, dx);
  const auto J = bessel_j_sequence(basis.max_order(), k * r);
  for (std::size_t j = 0; j < basis.columns.size(); ++j) {
    const auto& c = basis.columns[j];
    const double trig = c.parity == Parity::cos ? std::cos(c.order * theta) : std::sin(c.order * theta);
    out[j] = J[c.order] * trig;
  }
}

/// Normal derivative (along unit vector `nu`) of every basis column at `p`.
inline void basis_normal_derivatives(const FourierBesselBasis& basis, double k, const Point& p, const Point& nu,
                                     std::span<double> out) {
  const double dx = p[0] - basis.center[0], dy = p[1] - basis.center[1];
  const double r = std::hypot(dx, dy), theta = std::atan2(dy, dx);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double nu_r = nu[0] * ct + nu[1] * st;
  const double nu_t = -nu[0] * st + nu[1] * ct;
  const auto J = bessel_j_sequence(basis.max_order() + 1, k * r);
  for (std::size_t j = 0; j < basis.columns.size(); ++j) {
    const auto& c = basis.columns[j];
    const int m = c.order;
    const double dJ = m == 0 ? -J[1] : 0.5 * (J[m - 1] - J[m + 1]);
    const double trig = c.parity == Parity::cos ? std::cos(m * theta) : std::sin(m * theta);
    const double dtrig = c.parity == Parity::cos ? -m * std::sin(m * theta) : m * std::cos(m * theta);
    const double u_r = k * dJ * trig;
    const double u_t = r > 0.0 ? J[m] * dtrig / r : 0.0;
    out[j] = u_r * nu_r + u_t * nu_t;
  }
}

}  // namespace speclab
