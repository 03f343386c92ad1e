#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "speclab/fourier_bessel.hpp"
#include "speclab/geometry.hpp"
#include "speclab/spherical_harmonics.hpp"

namespace speclab {

/// Disk mode J_m(j_{m,n} r / R) trig(m theta).
struct DiskFamily {
  int m = 0;
  int n = 1;
  Parity parity = Parity::cos;
};

/// Ball mode j_l(j r / R) Y_{l,q}.
struct BallFamily {
  int l = 0;
  int n = 1;
  int q = 0;
};

/// Collocation mode: coefficients over a shared Fourier-Bessel basis.
struct CollocationFamily {
  std::shared_ptr<const FourierBesselBasis> basis;
  std::vector<double> coeffs;
  double tension = 0.0;
  double rellich_residual = 0.0;
  int cluster_size = 1;
  int symmetry_class = 0;
};

using ModeFamily = std::variant<DiskFamily, BallFamily, CollocationFamily>;

/// One Dirichlet eigenpair, represented by its eigenvalue and a symbolic
/// boundary normal-derivative trace.
struct Mode {
  int k = 0;  // 1-based rank
  double lambda = 0.0;
  ModeFamily family;
  double trace_coeff = 0.0;  // disk/ball: signed amplitude A of d_n u = A * angular factor
};

struct Spectrum {
  DomainSpec domain;
  std::vector<Mode> modes;
  /// Groups of 0-based mode indices sharing one eigenvalue, ascending.
  std::vector<std::vector<std::size_t>> eigenspaces;

  std::size_t K() const { return modes.size(); }
  const Mode& mode(int k) const { return modes.at(static_cast<std::size_t>(k - 1)); }
  /// Index into `eigenspaces` for each mode.
  std::vector<std::size_t> eigenspace_of() const {
    std::vector<std::size_t> out(modes.size(), 0);
    for (std::size_t e = 0; e < eigenspaces.size(); ++e)
      for (auto i : eigenspaces[e]) out[i] = e;
    return out;
  }
  double max_lambda() const { return modes.empty() ? 0.0 : modes.back().lambda; }
};

/// Same shape, ignoring the base point x0 (traces do not depend on it).
inline bool same_shape(DomainSpec a, DomainSpec b) {
  a.x0 = b.x0;
  return a == b;
}

/// Signed normal derivative d_n u at every grid node.
inline std::vector<double> normal_derivative(const Mode& mode, const DomainSpec& domain, const BoundaryGrid& grid) {
  if (!same_shape(domain, grid.domain)) throw DomainMismatch("mode and grid belong to different domains");
  std::vector<double> out(grid.size());
  if (const auto* f = std::get_if<DiskFamily>(&mode.family)) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double phi = polar_angle(grid.nodes[i]);
      const double trig = f->m == 0 ? 1.0 : (f->parity == Parity::cos ? std::cos(f->m * phi) : std::sin(f->m * phi));
      out[i] = mode.trace_coeff * trig;
    }
  } else if (const auto* f = std::get_if<BallFamily>(&mode.family)) {
    if (grid.n_lat > 0) {
      // tensor grid: separate latitude and longitude factors
      const int aq = std::abs(f->q);
      std::vector<double> lat(grid.n_lat);
      for (int i = 0; i < grid.n_lat; ++i)
        lat[i] = legendre_normalized(f->l, aq, grid.normals[i * grid.n_lon][2]);
      std::vector<double> lon(grid.n_lon);
      for (int j = 0; j < grid.n_lon; ++j) {
        const double phi = std::atan2(grid.normals[j][1], grid.normals[j][0]);
        lon[j] = f->q == 0 ? 1.0 : std::numbers::sqrt2 * (f->q > 0 ? std::cos(aq * phi) : std::sin(aq * phi));
      }
      for (int i = 0; i < grid.n_lat; ++i)
        for (int j = 0; j < grid.n_lon; ++j) out[i * grid.n_lon + j] = mode.trace_coeff * lat[i] * lon[j];
    } else {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& nu = grid.normals[i];
        out[i] = mode.trace_coeff *
                 real_spherical_harmonic(f->l, f->q, std::acos(std::clamp(nu[2], -1.0, 1.0)), std::atan2(nu[1], nu[0]));
      }
    }
  } else {
    const auto& c = std::get<CollocationFamily>(mode.family);
    const double k = std::sqrt(mode.lambda);
    std::vector<double> row(c.basis->size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      basis_normal_derivatives(*c.basis, k, grid.nodes[i], grid.normals[i], row);
      double s = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) s += c.coeffs[j] * row[j];
      out[i] = s;
    }
  }
  return out;
}

/// Boundary flux density rho = |d_n u|^2 at the grid nodes.
inline std::vector<double> rho_at(const Mode& mode, const DomainSpec& domain, const BoundaryGrid& grid) {
  auto v = normal_derivative(mode, domain, grid);
  for (double& x : v) x *= x;
  return v;
}

inline std::vector<double> rho_at(const Spectrum& s, int k, const BoundaryGrid& grid) {
  return rho_at(s.mode(k), s.domain, grid);
}

}  // namespace speclab
