#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "speclab/spectrum.hpp"
#include "speclab/spherical_harmonics.hpp"

namespace speclab {

/// Moment tolerance, relative to sup|w| * |dOmega|.
inline constexpr double moment_tolerance = 1e-10;

/// Boundary weight with certified moment level:
/// 0 = no moment condition, 1 = int w = 0, 2 = additionally int H w = 0.
struct Weight {
  std::string name;
  std::vector<double> samples;
  double mu0 = 0.0;  // int w dsigma
  double mu1 = 0.0;  // int H w dsigma
  int level = 0;
  double sup_norm = 0.0;
  DomainSpec domain;
  std::size_t grid_size = 0;
};

namespace detail {

inline void check_grid(std::size_t n, const BoundaryGrid& grid, const char* what) {
  if (n != grid.size()) throw GridMismatch(std::string(what) + ": sample count does not match the grid");
}

inline double boundary_dot(std::span<const double> a, std::span<const double> b, const BoundaryGrid& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g.quad_weights[i] * a[i] * b[i];
  return s;
}

}  // namespace detail

/// Computes moments and the highest level the samples satisfy.
inline Weight certify_weight(std::string name, std::vector<double> samples, const BoundaryGrid& grid) {
  detail::check_grid(samples.size(), grid, "certify_weight");
  Weight w;
  w.name = std::move(name);
  w.domain = grid.domain;
  w.grid_size = grid.size();
  w.sup_norm = 0.0;
  for (double v : samples) w.sup_norm = std::max(w.sup_norm, std::abs(v));
  double habs = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    w.mu0 += grid.quad_weights[i] * samples[i];
    w.mu1 += grid.quad_weights[i] * grid.curvature_H[i] * samples[i];
    habs += grid.quad_weights[i] * std::abs(grid.curvature_H[i]);
  }
  const double scale0 = moment_tolerance * w.sup_norm * grid.measure();
  const double scale1 = moment_tolerance * w.sup_norm * habs;
  w.level = 0;
  if (w.sup_norm > 0.0 && std::abs(w.mu0) <= scale0) {
    w.level = 1;
    if (std::abs(w.mu1) <= scale1) w.level = 2;
  }
  w.samples = std::move(samples);
  return w;
}

/// Certifies and rejects weights below `required_level`.
inline Weight make_weight(std::string name, std::vector<double> samples, const BoundaryGrid& grid,
                          int required_level) {
  auto w = certify_weight(std::move(name), std::move(samples), grid);
  if (w.level < required_level)
    throw MeanNotZero("weight '" + w.name + "' certifies at level " + std::to_string(w.level) + ", required " +
                      std::to_string(required_level) + " (mu0=" + std::to_string(w.mu0) +
                      ", mu1=" + std::to_string(w.mu1) + ")");
  return w;
}

/// Orthogonal projection (boundary measure) of `raw` onto the complement of
/// span{1} (level 1) or span{1, H} (level 2). H is centered by H_bar before
/// Gram-Schmidt; when H is constant the level-2 projection equals level 1.
inline Weight moment_project(std::string name, std::span<const double> raw, const BoundaryGrid& grid,
                             int target_level) {
  detail::check_grid(raw.size(), grid, "moment_project");
  if (target_level != 1 && target_level != 2) throw InvalidParameter("moment_project: target level must be 1 or 2");
  const double area = grid.measure();
  std::vector<double> w(raw.begin(), raw.end());
  std::vector<double> hc(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) hc[i] = grid.curvature_H[i] - grid.H_bar;
  const double hh = detail::boundary_dot(hc, hc, grid);
  const bool use_h = target_level == 2 && hh > 1e-24 * area * grid.H_bar * grid.H_bar;
  double raw_sup = 0.0;
  for (double v : raw) raw_sup = std::max(raw_sup, std::abs(v));

  for (int pass = 0; pass < 2; ++pass) {
    double mean = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) mean += grid.quad_weights[i] * w[i];
    mean /= area;
    for (double& v : w) v -= mean;
    if (use_h) {
      const double c = detail::boundary_dot(w, hc, grid) / hh;
      for (std::size_t i = 0; i < grid.size(); ++i) w[i] -= c * hc[i];
    }
  }
  double sup = 0.0;
  for (double v : w) sup = std::max(sup, std::abs(v));
  if (!(sup > 1e-10 * raw_sup))
    throw DegenerateWeight("moment_project: weight '" + name + "' lies in the projected-out span");
  return make_weight(std::move(name), std::move(w), grid, target_level);
}

inline Weight moment_project(std::string name, const Weight& raw, const BoundaryGrid& grid, int target_level) {
  return moment_project(std::move(name), raw.samples, grid, target_level);
}

// Closed-form raw weights.

/// cos(p t) or sin(p t) in the boundary curve parameter t (planar).
inline std::vector<double> trig_samples(const BoundaryGrid& grid, int p, Parity parity) {
  if (!grid.domain.is_planar()) throw InvalidParameter("trig weight needs a planar boundary");
  std::vector<double> s(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    s[i] = parity == Parity::cos ? std::cos(p * grid.params[i]) : std::sin(p * grid.params[i]);
  return s;
}

/// P_n(cos theta) on the sphere (theta = polar angle of the node).
inline std::vector<double> legendre_samples(const BoundaryGrid& grid, int n) {
  if (grid.domain.kind != DomainKind::ball) throw InvalidParameter("Legendre weight needs the ball");
  std::vector<double> s(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) s[i] = legendre_polynomial(n, grid.normals[i][2]);
  return s;
}

/// H - H_bar.
inline std::vector<double> curvature_deviation_samples(const BoundaryGrid& grid) {
  std::vector<double> s(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) s[i] = grid.curvature_H[i] - grid.H_bar;
  return s;
}

// Per-mode functionals.

inline double boundary_energy(std::span<const double> rho, const BoundaryGrid& grid) {
  detail::check_grid(rho.size(), grid, "boundary_energy");
  double e = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (rho[i] < 0.0) throw NegativeDensity("boundary_energy: negative flux density sample");
    e += grid.quad_weights[i] * rho[i];
  }
  return e;
}

struct WeightedEnergy {
  double e_w = 0.0;
  double e_abs_w = 0.0;
};

inline WeightedEnergy weighted_energy(std::span<const double> rho, const Weight& w, const BoundaryGrid& grid) {
  detail::check_grid(rho.size(), grid, "weighted_energy");
  if (w.grid_size != grid.size() || !same_shape(w.domain, grid.domain))
    throw GridMismatch("weighted_energy: weight sampled on a different grid");
  WeightedEnergy out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.e_w += grid.quad_weights[i] * rho[i] * w.samples[i];
    out.e_abs_w += grid.quad_weights[i] * rho[i] * std::abs(w.samples[i]);
  }
  return out;
}

/// C(w) = E(w) / E, defined only for zero-mean weights.
inline double correlation(std::span<const double> rho, const Weight& w, const BoundaryGrid& grid) {
  if (w.level < 1) throw MeanNotZero("correlation: weight '" + w.name + "' does not have zero mean");
  return weighted_energy(rho, w, grid).e_w / boundary_energy(rho, grid);
}

/// |int g rho - 2 lambda| / (2 lambda).
inline double rellich_residual(std::span<const double> rho, double lambda, const BoundaryGrid& grid) {
  if (!(lambda > 0.0)) throw InvalidParameter("rellich_residual: lambda must be > 0");
  detail::check_grid(rho.size(), grid, "rellich_residual");
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) s += grid.quad_weights[i] * grid.support_g[i] * rho[i];
  return std::abs(s - 2.0 * lambda) / (2.0 * lambda);
}

struct FunctionalReport {
  int k = 0;
  double lambda = 0.0;
  double E = 0.0;
  double E_w = 0.0;
  double E_abs_w = 0.0;
  double C_w = std::numeric_limits<double>::quiet_NaN();  // NaN for level-0 weights
  double rellich_residual = 0.0;
};

/// Per-mode functionals of a spectrum for a list of weights, evaluated once.
struct SpectralTable {
  DomainSpec domain;
  std::vector<double> lambda;
  std::vector<double> energy;
  std::vector<double> rellich;
  std::vector<std::size_t> eigenspace_of;
  std::vector<std::string> weight_names;
  std::vector<int> weight_levels;
  std::vector<double> weight_sup;
  std::vector<std::vector<double>> e_w;    // [weight][mode]
  std::vector<std::vector<double>> e_abs;  // [weight][mode]

  std::size_t K() const { return lambda.size(); }
  std::size_t weight_index(const std::string& name) const {
    for (std::size_t i = 0; i < weight_names.size(); ++i)
      if (weight_names[i] == name) return i;
    throw InvalidParameter("no weight named '" + name + "'");
  }
  FunctionalReport report(int k, std::size_t weight) const {
    const std::size_t i = static_cast<std::size_t>(k - 1);
    FunctionalReport r{k, lambda.at(i), energy[i], e_w.at(weight)[i], e_abs[weight][i],
                       std::numeric_limits<double>::quiet_NaN(), rellich[i]};
    if (weight_levels[weight] >= 1) r.C_w = r.E_w / r.E;
    return r;
  }
};

inline SpectralTable tabulate(const Spectrum& s, const BoundaryGrid& grid, std::span<const Weight> weights = {}) {
  SpectralTable t;
  t.domain = s.domain;
  t.eigenspace_of = s.eigenspace_of();
  for (const auto& w : weights) {
    if (w.grid_size != grid.size() || !same_shape(w.domain, grid.domain))
      throw GridMismatch("tabulate: weight '" + w.name + "' sampled on a different grid");
    t.weight_names.push_back(w.name);
    t.weight_levels.push_back(w.level);
    t.weight_sup.push_back(w.sup_norm);
  }
  t.e_w.assign(weights.size(), std::vector<double>(s.K()));
  t.e_abs.assign(weights.size(), std::vector<double>(s.K()));
  for (std::size_t i = 0; i < s.K(); ++i) {
    const auto& m = s.modes[i];
    const auto rho = rho_at(m, s.domain, grid);
    t.lambda.push_back(m.lambda);
    t.energy.push_back(boundary_energy(rho, grid));
    t.rellich.push_back(rellich_residual(rho, m.lambda, grid));
    for (std::size_t w = 0; w < weights.size(); ++w) {
      const auto we = weighted_energy(rho, weights[w], grid);
      t.e_w[w][i] = we.e_w;
      t.e_abs[w][i] = we.e_abs_w;
    }
  }
  return t;
}

/// Discretized int Q_Lambda w dsigma = sum over lambda_j < Lambda of E_j(w).
inline double q_lambda_pairing(const SpectralTable& t, double Lambda, std::size_t weight) {
  if (t.K() == 0 || Lambda > t.lambda.back())
    throw SpectrumTooShort("q_lambda_pairing: Lambda beyond the computed spectrum");
  double s = 0.0;
  for (std::size_t j = 0; j < t.K() && t.lambda[j] < Lambda; ++j) s += t.e_w.at(weight)[j];
  return s;
}

/// S(Lambda) = sum over lambda_j < Lambda of E_j.
inline double s_lambda(const SpectralTable& t, double Lambda) {
  if (t.K() == 0 || Lambda > t.lambda.back()) throw SpectrumTooShort("s_lambda: Lambda beyond the computed spectrum");
  double s = 0.0;
  for (std::size_t j = 0; j < t.K() && t.lambda[j] < Lambda; ++j) s += t.energy[j];
  return s;
}

inline double q_lambda_pairing(const Spectrum& s, double Lambda, const Weight& w, const BoundaryGrid& grid) {
  if (s.K() == 0 || Lambda > s.max_lambda())
    throw SpectrumTooShort("q_lambda_pairing: Lambda beyond the computed spectrum");
  double acc = 0.0;
  for (const auto& m : s.modes) {
    if (!(m.lambda < Lambda)) break;
    acc += weighted_energy(rho_at(m, s.domain, grid), w, grid).e_w;
  }
  return acc;
}

inline double s_lambda(const Spectrum& s, const BoundaryGrid& grid, double Lambda) {
  if (s.K() == 0 || Lambda > s.max_lambda()) throw SpectrumTooShort("s_lambda: Lambda beyond the computed spectrum");
  double acc = 0.0;
  for (const auto& m : s.modes) {
    if (!(m.lambda < Lambda)) break;
    acc += boundary_energy(rho_at(m, s.domain, grid), grid);
  }
  return acc;
}

}  // namespace speclab
