#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "speclab/boundary_functionals.hpp"

namespace speclab {

/// N_k = max(N_min, ceil(k^alpha)) with 0 <= alpha < 1.
struct PacketSchedule {
  double alpha = 0.5;
  int n_min = 2;
  std::vector<int> k_list;

  void validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0))
      throw InvalidParameter("packet schedule: alpha must satisfy 0 <= alpha < 1 (N_k = o(k)), got " +
                             std::to_string(alpha));
    if (n_min < 2) throw InvalidParameter("packet schedule: N_min must be >= 2");
  }
  int length(int k) const {
    // guard against pow rounding just above an integer
    const int n = static_cast<int>(std::ceil(std::pow(static_cast<double>(k), alpha) - 1e-9));
    return std::max(n_min, n);
  }
};

/// J_k = {k, ..., k + N - 1}, 1-based.
inline std::vector<int> packet_indices(int k, int n, std::size_t spectrum_size) {
  if (k < 1 || n < 1) throw InvalidParameter("packet_indices: need k >= 1 and N >= 1");
  if (static_cast<std::size_t>(k + n - 1) > spectrum_size)
    throw SpectrumTooShort("packet {" + std::to_string(k) + ".." + std::to_string(k + n - 1) +
                           "} exceeds the " + std::to_string(spectrum_size) + " computed modes");
  std::vector<int> out(n);
  for (int i = 0; i < n; ++i) out[i] = k + i;
  return out;
}

inline std::vector<int> packet_indices(int k, const PacketSchedule& s, std::size_t spectrum_size) {
  return packet_indices(k, s.length(k), spectrum_size);
}

inline double packet_energy(const SpectralTable& t, int k, int n) {
  packet_indices(k, n, t.K());
  double e = 0.0;
  for (int j = k; j < k + n; ++j) e += t.energy[j - 1];
  return e;
}

/// E_k / sum_{m in J_k} E_m.
inline double mode_to_packet_ratio(const SpectralTable& t, int k, int n) {
  return t.energy.at(k - 1) / packet_energy(t, k, n);
}

inline double mode_to_packet_ratio(const SpectralTable& t, int k, const PacketSchedule& s) {
  return mode_to_packet_ratio(t, k, s.length(k));
}

/// sum_{j in J_k} E_j(w), by direct per-mode summation.
inline double packet_pairing(const SpectralTable& t, int k, int n, std::size_t weight) {
  packet_indices(k, n, t.K());
  double s = 0.0;
  for (int j = k; j < k + n; ++j) s += t.e_w.at(weight)[j - 1];
  return s;
}

/// Energy-weighted packet average of C_j(w): sum E_j C_j(w) / sum E_j.
inline double packet_correlation_average(const SpectralTable& t, int k, int n, std::size_t weight) {
  if (t.weight_levels.at(weight) < 1)
    throw MeanNotZero("packet_correlation_average: weight '" + t.weight_names[weight] + "' does not have zero mean");
  return packet_pairing(t, k, n, weight) / packet_energy(t, k, n);
}

inline double packet_correlation_average(const SpectralTable& t, int k, const PacketSchedule& s, std::size_t weight) {
  return packet_correlation_average(t, k, s.length(k), weight);
}

struct PacketStats {
  int k = 0;
  int n_k = 0;
  double lambda_k = 0.0;
  double packet_energy = 0.0;
  double ratio = 0.0;
  std::vector<double> corr_avg;  // per weight; NaN for level-0 weights
};

inline PacketStats packet_stats(const SpectralTable& t, int k, const PacketSchedule& s) {
  PacketStats p;
  p.k = k;
  p.n_k = s.length(k);
  p.lambda_k = t.lambda.at(k - 1);
  p.packet_energy = packet_energy(t, k, p.n_k);
  p.ratio = t.energy[k - 1] / p.packet_energy;
  for (std::size_t w = 0; w < t.weight_names.size(); ++w)
    p.corr_avg.push_back(t.weight_levels[w] >= 1 ? packet_pairing(t, k, p.n_k, w) / p.packet_energy
                                                 : std::numeric_limits<double>::quiet_NaN());
  return p;
}

/// True when the packet starts and ends on eigenspace boundaries.
inline bool packet_is_whole_eigenspaces(const SpectralTable& t, int k, int n) {
  const std::size_t first = static_cast<std::size_t>(k - 1), last = first + n - 1;
  if (first > 0 && t.eigenspace_of[first - 1] == t.eigenspace_of[first]) return false;
  if (last + 1 < t.K() && t.eigenspace_of[last + 1] == t.eigenspace_of[last]) return false;
  return true;
}

// Threshold hierarchy.

/// Exponent theta of the minimal packet growth N_k >> k^theta, unfloored:
/// level 1 -> 1 - 2/d, level 2 -> (d - 3)/d.
inline double threshold_exponent_raw(int d, int level) {
  if (d < 2) throw InvalidParameter("threshold_exponent: d must be >= 2");
  if (level == 1) return (d - 2.0) / d;  // same as 1 - 2/d, exact for d = 3
  if (level == 2) return (d - 3.0) / d;
  throw InvalidParameter("threshold_exponent: level must be 1 or 2");
}

/// Reported exponent, floored at 0 (any N_k -> infinity suffices below it).
inline double threshold_exponent(int d, int level) { return std::max(0.0, threshold_exponent_raw(d, level)); }

/// Upper-bound envelope k^theta / N_k with the unfloored exponent.
inline double cancellation_rate_bound(int k, int n_k, int d, int level) {
  return std::pow(static_cast<double>(k), threshold_exponent_raw(d, level)) / n_k;
}

// Fits.

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_stderr = 0.0;
  int n_points = 0;
};

/// Least squares of log|y| on log x.
inline RateFit rate_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidParameter("rate_fit: xs and ys differ in length");
  if (xs.size() < 5) throw InvalidParameter("rate_fit: need at least 5 points");
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0)) throw InvalidParameter("rate_fit: xs must be positive");
    if (ys[i] == 0.0 || !std::isfinite(ys[i])) throw InvalidParameter("rate_fit: ys must be finite and nonzero");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(std::abs(ys[i]));
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 1e-300)) throw DegenerateFit("rate_fit: zero variance in xs");
  RateFit f;
  f.n_points = static_cast<int>(n);
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (f.intercept + f.slope * lx[i]);
    sse += r * r;
  }
  f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  f.slope_stderr = n > 2 ? std::sqrt(sse / (n - 2) / sxx) : 0.0;
  return f;
}

/// y ~ a x^p + b x^q by least squares without intercept, with standard errors.
struct TwoTermFit {
  double a = 0.0, b = 0.0;
  double se_a = 0.0, se_b = 0.0;
  double p = 0.0, q = 0.0;
  int n_points = 0;
};

inline TwoTermFit two_term_fit(std::span<const double> xs, std::span<const double> ys, double p, double q) {
  const std::size_t n = xs.size();
  if (n < 5 || ys.size() != n) throw InvalidParameter("two_term_fit: need at least 5 matching points");
  // scale columns by their max to keep the normal matrix well conditioned
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    A(i, 0) = std::pow(xs[i], p);
    A(i, 1) = std::pow(xs[i], q);
    y(i) = ys[i];
  }
  const Eigen::Vector2d scale(A.col(0).cwiseAbs().maxCoeff(), A.col(1).cwiseAbs().maxCoeff());
  if (!(scale(0) > 0.0) || !(scale(1) > 0.0)) throw DegenerateFit("two_term_fit: degenerate design");
  Eigen::MatrixXd As = A;
  As.col(0) /= scale(0);
  As.col(1) /= scale(1);
  const Eigen::Matrix2d ata = As.transpose() * As;
  if (std::abs(ata.determinant()) < 1e-14 * ata.norm() * ata.norm()) throw DegenerateFit("two_term_fit: collinear columns");
  const Eigen::Vector2d cs = As.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd resid = y - As * cs;
  const double sigma2 = n > 2 ? resid.squaredNorm() / static_cast<double>(n - 2) : 0.0;
  const Eigen::Matrix2d cov = sigma2 * ata.inverse();
  TwoTermFit f;
  f.p = p;
  f.q = q;
  f.n_points = static_cast<int>(n);
  f.a = cs(0) / scale(0);
  f.b = cs(1) / scale(1);
  f.se_a = std::sqrt(std::max(0.0, cov(0, 0))) / scale(0);
  f.se_b = std::sqrt(std::max(0.0, cov(1, 1))) / scale(1);
  return f;
}

enum class WeylMode { counting, boundary, pairing };

struct WeylFit {
  WeylMode mode = WeylMode::counting;
  RateFit fit;          // log-log exponent fit (counting, boundary)
  TwoTermFit two_term;  // leading-term regression
  double constant = 0.0;   // fitted leading coefficient
  double reference = 0.0;  // closed-form reference, when one exists
  double window_lo = 0.0, window_hi = 0.0;
  /// pairing: leading coefficient consistent with zero (within 3 standard
  /// errors, or negligible against the unweighted sum S at the window top)
  bool leading_consistent_with_zero = false;
};

/// Sample points strictly between consecutive distinct eigenvalues inside
/// [lo, hi]: the midpoints of the spectral gaps.
inline std::vector<double> gap_midpoints(const SpectralTable& t, double lo, double hi) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < t.K(); ++i) {
    if (t.lambda[i + 1] > t.lambda[i]) {
      const double mid = 0.5 * (t.lambda[i] + t.lambda[i + 1]);
      if (mid >= lo && mid <= hi) out.push_back(mid);
    }
  }
  return out;
}

/// Default fit window: skips the lowest 10% of computed modes.
inline std::pair<double, double> default_fit_window(const SpectralTable& t) {
  if (t.K() < 20) throw SpectrumTooShort("weyl_fit: spectrum too short for a fit window");
  return {t.lambda[t.K() / 10], t.lambda.back()};
}

inline WeylFit weyl_fit(const SpectralTable& t, WeylMode mode, double lo, double hi, std::size_t weight = 0) {
  if (t.K() == 0 || hi > t.lambda.back()) throw SpectrumTooShort("weyl_fit: window beyond the computed spectrum");
  const int d = t.domain.dimension;
  const auto xs = gap_midpoints(t, lo, hi);
  if (xs.size() < 5) throw SpectrumTooShort("weyl_fit: fewer than 5 sample points in the window");
  std::vector<double> ys(xs.size());
  // one cumulative pass over the sorted spectrum
  std::size_t j = 0;
  double count = 0.0, s = 0.0, q = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    while (j < t.K() && t.lambda[j] < xs[i]) {
      count += 1.0;
      s += t.energy[j];
      if (mode == WeylMode::pairing) q += t.e_w.at(weight)[j];
      ++j;
    }
    ys[i] = mode == WeylMode::counting ? count : (mode == WeylMode::boundary ? s : q);
  }
  WeylFit out;
  out.mode = mode;
  out.window_lo = lo;
  out.window_hi = hi;
  switch (mode) {
    case WeylMode::counting:
      out.fit = rate_fit(xs, ys);
      out.two_term = two_term_fit(xs, ys, 0.5 * d, 0.5 * (d - 1));
      out.constant = out.two_term.a;
      out.reference = unit_ball_volume(d) * domain_volume(t.domain) / std::pow(2.0 * std::numbers::pi, d);
      break;
    case WeylMode::boundary:
      out.fit = rate_fit(xs, ys);
      out.two_term = two_term_fit(xs, ys, 1.0 + 0.5 * d, 0.5 * (d + 1));
      out.constant = out.two_term.a;
      break;
    case WeylMode::pairing: {
      out.two_term = two_term_fit(xs, ys, 0.5 * (d + 1), 0.5 * d);
      out.constant = out.two_term.a;
      const double s_top = s;  // S at the last sample point
      const double leading_top = std::abs(out.two_term.a) * std::pow(xs.back(), 0.5 * (d + 1));
      out.leading_consistent_with_zero =
          std::abs(out.two_term.a) <= 3.0 * out.two_term.se_a || leading_top <= 1e-9 * s_top;
      break;
    }
  }
  return out;
}

inline WeylFit weyl_fit(const SpectralTable& t, WeylMode mode, std::size_t weight = 0) {
  const auto [lo, hi] = default_fit_window(t);
  return weyl_fit(t, mode, lo, hi, weight);
}

/// Direct packet pairing against the cumulative difference
/// Q_{Lambda'} - Q_Lambda with Lambda, Lambda' inside the gaps bracketing the
/// packet. Returns |direct - difference| / sum_{j in J} E_j^abs(w).
struct TelescopingResult {
  double direct = 0.0;
  double differenced = 0.0;
  double relative_error = 0.0;
};

inline TelescopingResult telescoping_check(const SpectralTable& t, int k, int n, std::size_t weight) {
  packet_indices(k, n, t.K() - 1);  // need lambda_{k+N} as well
  const std::size_t first = static_cast<std::size_t>(k - 1), last = first + n - 1;
  if (first > 0 && !(t.lambda[first - 1] < t.lambda[first]))
    throw InvalidParameter("telescoping_check: packet start splits an eigenspace");
  if (!(t.lambda[last] < t.lambda[last + 1])) throw InvalidParameter("telescoping_check: packet end splits an eigenspace");
  const double L0 = first == 0 ? 0.5 * t.lambda[0] : 0.5 * (t.lambda[first - 1] + t.lambda[first]);
  const double L1 = 0.5 * (t.lambda[last] + t.lambda[last + 1]);
  TelescopingResult r;
  r.direct = packet_pairing(t, k, n, weight);
  r.differenced = q_lambda_pairing(t, L1, weight) - q_lambda_pairing(t, L0, weight);
  double scale = 0.0;
  for (std::size_t j = first; j <= last; ++j) scale += t.e_abs.at(weight)[j];
  r.relative_error = scale > 0.0 ? std::abs(r.direct - r.differenced) / scale : std::abs(r.direct - r.differenced);
  return r;
}

// Basis-mixing invariance.

/// Haar-random orthogonal matrix of size n.
inline Eigen::MatrixXd random_orthogonal(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i)
    if (r(i, i) < 0.0) q.col(i) *= -1.0;
  return q;
}

/// Applies `mix` to the traces of one eigenspace and returns the max relative
/// deviation of its summed boundary density, its energy, and its weighted
/// energies (the statistics of any packet containing the whole eigenspace).
inline double basis_mixing_check(const Spectrum& s, const BoundaryGrid& grid, std::size_t eigenspace,
                                 const Eigen::MatrixXd& mix, std::span<const Weight> weights = {}) {
  const auto& members = s.eigenspaces.at(eigenspace);
  const auto dim = static_cast<Eigen::Index>(members.size());
  if (dim < 2) throw InvalidParameter("basis_mixing_check: eigenspace dimension must be >= 2");
  if (mix.rows() != dim || mix.cols() != dim) throw InvalidParameter("basis_mixing_check: mix has the wrong size");
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd traces(dim, n);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto t = normal_derivative(s.modes[members[i]], s.domain, grid);
    traces.row(i) = Eigen::Map<const Eigen::RowVectorXd>(t.data(), n);
  }
  const Eigen::MatrixXd mixed = mix * traces;
  const Eigen::RowVectorXd dens0 = traces.array().square().colwise().sum();
  const Eigen::RowVectorXd dens1 = mixed.array().square().colwise().sum();
  const double peak = dens0.cwiseAbs().maxCoeff();
  double dev = (dens1 - dens0).cwiseAbs().maxCoeff() / peak;

  auto integrate = [&](const Eigen::RowVectorXd& dens, const std::vector<double>* w) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) acc += grid.quad_weights[i] * dens(i) * (w ? (*w)[i] : 1.0);
    return acc;
  };
  const double e0 = integrate(dens0, nullptr), e1 = integrate(dens1, nullptr);
  dev = std::max(dev, std::abs(e1 - e0) / e0);
  for (const auto& w : weights) {
    const double a = integrate(dens0, &w.samples), b = integrate(dens1, &w.samples);
    // relative to the eigenspace energy scale; the weighted sum may vanish
    dev = std::max(dev, std::abs(b - a) / (e0 * std::max(w.sup_norm, 1e-300)));
  }
  return dev;
}

inline double basis_mixing_check(const Spectrum& s, const BoundaryGrid& grid, std::size_t eigenspace,
                                 std::uint64_t seed, std::span<const Weight> weights = {}) {
  const int dim = static_cast<int>(s.eigenspaces.at(eigenspace).size());
  if (dim < 2) throw InvalidParameter("basis_mixing_check: eigenspace dimension must be >= 2");
  return basis_mixing_check(s, grid, eigenspace, random_orthogonal(dim, seed), weights);
}

}  // namespace speclab
