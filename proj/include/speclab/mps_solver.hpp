#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "speclab/analytic_spectra.hpp"
#include "speclab/boundary_functionals.hpp"
#include "speclab/fourier_bessel.hpp"
#include "speclab/quadrature.hpp"
#include "speclab/spectrum.hpp"

// Method of particular solutions with interior regularization: for trial
// lambda the Fourier-Bessel columns are sampled at boundary and interior
// points, orthonormalized by QR, and the smallest singular value of the
// boundary block measures how close the span comes to a function vanishing on
// the boundary but not inside.

namespace speclab {

/// Collocation is documented for at most this many modes per planar domain.
inline constexpr int mps_mode_ceiling = 300;

struct MpsConfig {
  int basis_order = 0;  // M_b; 0 picks one from the window
  int n_boundary = 0;   // 0 = 4 M_b + 32
  int n_interior = 0;   // 0 = 2 M_b
  double lambda_lo = 1.0;
  double lambda_hi = 0.0;
  double scan_step = 0.05;
  double tension_tol = 1e-7;
  double refine_tol = 1e-12;  // relative, on lambda
  std::uint64_t seed = 1;
  bool use_symmetry = true;
  bool order_check = true;        // re-refine with M_b + 8 and compare
  double cluster_tol = 1e-8;      // relative lambda gap merged into one eigenspace
  int certificate_nodes = 1024;   // boundary grid for the Rellich residual

  void validate() const {
    if (!(lambda_lo > 0.0)) throw InvalidParameter("mps: lambda_lo must be > 0");
    if (!(lambda_hi > lambda_lo)) throw InvalidParameter("mps: need lambda_hi > lambda_lo");
    if (!(scan_step > 0.0)) throw InvalidParameter("mps: scan_step must be > 0");
    if (basis_order < 4) throw InvalidParameter("mps: basis order must be >= 4");
    if (n_boundary < 2 * basis_order + 16) throw InvalidParameter("mps: need n_boundary >= 2 M_b + 16");
    if (n_interior < basis_order) throw InvalidParameter("mps: need n_interior >= M_b");
    if (!(tension_tol > 0.0) || !(refine_tol > 0.0)) throw InvalidParameter("mps: tolerances must be > 0");
    if (certificate_nodes < 64) throw InvalidParameter("mps: certificate grid needs >= 64 nodes");
  }
};

struct MpsEigenpair {
  double lambda = 0.0;
  std::shared_ptr<const FourierBesselBasis> basis;
  std::vector<double> coeffs;  // physical coefficients, unit L2(Omega) norm
  double tension = 0.0;
  double rellich_residual = 0.0;
  int cluster_size = 1;
  int symmetry_class = 0;
  double order_shift = 0.0;  // |lambda(M_b + 8) - lambda| / lambda, when checked
};

namespace detail {

inline double max_radius(const DomainSpec& d) {
  switch (d.kind) {
    case DomainKind::disk: return d.radius;
    case DomainKind::ellipse: return d.semi_a;
    case DomainKind::perturbed_disk: return d.radius * (1.0 + d.amplitude);
    case DomainKind::ball: break;
  }
  throw InvalidParameter("collocation solver supports planar domains only");
}

/// Fills automatic sizes from the window.
inline MpsConfig resolve(const DomainSpec& d, MpsConfig c) {
  if (c.basis_order == 0)
    c.basis_order = static_cast<int>(std::ceil(1.5 * std::sqrt(std::max(c.lambda_hi, 1.0)) * max_radius(d))) + 24;
  if (c.n_boundary == 0) c.n_boundary = 4 * c.basis_order + 32;
  if (c.n_interior == 0) c.n_interior = 2 * c.basis_order;
  c.validate();
  return c;
}

/// Deterministic uniform double in [0, 1) from 53 random bits.
inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Reflection-symmetry class: its basis columns and the angular sector
/// (fundamental region) the points are sampled in.
struct SymmetryClass {
  std::vector<BasisColumn> columns;
  double sector = 2.0 * std::numbers::pi;
};

/// Domains symmetric under y -> -y split into cos / sin columns; those also
/// symmetric under x -> -x split further by the parity of the order.
inline std::vector<SymmetryClass> symmetry_classes(const DomainSpec& d, int order, bool use_symmetry) {
  const bool four = d.kind == DomainKind::disk || d.kind == DomainKind::ellipse ||
                    (d.kind == DomainKind::perturbed_disk && d.frequency % 2 == 0);
  std::vector<SymmetryClass> out;
  if (!use_symmetry) {
    SymmetryClass c;
    for (int m = 0; m <= order; ++m) {
      c.columns.push_back({m, Parity::cos});
      if (m > 0) c.columns.push_back({m, Parity::sin});
    }
    out.push_back(std::move(c));
    return out;
  }
  for (Parity par : {Parity::cos, Parity::sin}) {
    for (int rem = 0; rem < (four ? 2 : 1); ++rem) {
      SymmetryClass c;
      c.sector = four ? 0.5 * std::numbers::pi : std::numbers::pi;
      for (int m = par == Parity::sin ? 1 : 0; m <= order; ++m)
        if (!four || m % 2 == rem) c.columns.push_back({m, par});
      out.push_back(std::move(c));
    }
  }
  return out;
}

/// Points of one class: boundary nodes at midpoints of the sector in the
/// curve parameter, interior points uniform in the sector (rejection sampled).
struct ClassPoints {
  std::vector<Point> boundary;
  std::vector<Point> interior;
};

inline ClassPoints class_points(const DomainSpec& d, const SymmetryClass& cls, int n_boundary_total,
                                int n_interior_total, std::uint64_t seed) {
  const double full = 2.0 * std::numbers::pi;
  const int share = static_cast<int>(std::lround(full / cls.sector));
  const int nb = std::max(8, n_boundary_total / share), ni = std::max(4, n_interior_total / share);
  ClassPoints pts;
  for (int i = 0; i < nb; ++i) {
    const auto c = curve_point(d, cls.sector * (i + 0.5) / nb);
    pts.boundary.push_back({c.x, c.y, 0.0});
  }
  std::mt19937_64 rng(seed);
  const double rmax = max_radius(d);
  while (static_cast<int>(pts.interior.size()) < ni) {
    // polar sampling with area density, then reject outside the domain
    const double r = rmax * std::sqrt(unit_draw(rng));
    const double th = cls.sector * unit_draw(rng);
    const Point p{r * std::cos(th), r * std::sin(th), 0.0};
    if (contains(d, p)) pts.interior.push_back(p);
  }
  return pts;
}

struct TensionResult {
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  Eigen::MatrixXd null_coeffs;  // physical coefficients for sigma1 (col 0) and sigma2 (col 1)
};

/// One class at one lambda. The precise path takes an SVD of the boundary
/// block and returns null coefficients; the fast path (scanning only) reads
/// the singular values off the Gram matrix, accurate to about 1e-8 absolute.
inline TensionResult class_tension(const FourierBesselBasis& basis, const ClassPoints& pts, double lambda,
                                   bool precise = true) {
  const double k = std::sqrt(lambda);
  const auto nb = static_cast<Eigen::Index>(pts.boundary.size());
  const auto ni = static_cast<Eigen::Index>(pts.interior.size());
  const auto nc = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd A(nb + ni, nc);
  std::vector<double> row(basis.size());
  for (Eigen::Index i = 0; i < nb + ni; ++i) {
    basis_values(basis, k, i < nb ? pts.boundary[i] : pts.interior[i - nb], row);
    for (Eigen::Index j = 0; j < nc; ++j) A(i, j) = row[j];
  }
  Eigen::VectorXd scale = A.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < nc; ++j) {
    if (!(scale(j) > 0.0)) scale(j) = 1.0;
    A.col(j) /= scale(j);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-14);
  const Eigen::Index r = qr.rank();
  if (r < 2) throw IllConditioned("tension: collocation matrix has numerical rank < 2");
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(nb + ni, r);
  if (!precise) {
    const Eigen::MatrixXd G = Q.topRows(nb).transpose() * Q.topRows(nb);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw IllConditioned("tension: eigenvalue solver failed to converge");
    TensionResult out;
    out.sigma1 = std::sqrt(std::max(0.0, eig.eigenvalues()(0)));
    out.sigma2 = std::sqrt(std::max(0.0, eig.eigenvalues()(1)));
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Q.topRows(nb), Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw IllConditioned("tension: SVD failed to converge");
  const auto& s = svd.singularValues();
  TensionResult out;
  out.sigma1 = s(r - 1);
  out.sigma2 = s(r - 2);
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(r, r).triangularView<Eigen::Upper>();
  out.null_coeffs.resize(nc, 2);
  for (int c = 0; c < 2; ++c) {
    const Eigen::VectorXd z = R.triangularView<Eigen::Upper>().solve(svd.matrixV().col(r - 1 - c));
    Eigen::VectorXd y = Eigen::VectorXd::Zero(nc);
    y.head(r) = z;
    const Eigen::VectorXd yp = qr.colsPermutation() * y;
    out.null_coeffs.col(c) = yp.cwiseQuotient(scale);
  }
  return out;
}

/// Polar tensor grid over the domain about the origin: Gauss in r times the
/// periodic trapezoid in theta.
struct InteriorQuadrature {
  std::vector<Point> nodes;
  std::vector<double> weights;
};

inline InteriorQuadrature interior_quadrature(const DomainSpec& d, int n_r, int n_theta) {
  InteriorQuadrature q;
  const auto rule = gauss_legendre(n_r, 0.0, 1.0);
  const double h = 2.0 * std::numbers::pi / n_theta;
  const Point origin{0.0, 0.0, 0.0};
  for (int i = 0; i < n_theta; ++i) {
    const double th = i * h;
    const double rho = ray_to_boundary(d, origin, th);
    for (int j = 0; j < n_r; ++j) {
      const double r = rho * rule.nodes[j];
      q.nodes.push_back({r * std::cos(th), r * std::sin(th), 0.0});
      q.weights.push_back(h * rho * rule.weights[j] * r);
    }
  }
  return q;
}

/// Values of u = sum c_j phi_j at the quadrature nodes.
inline Eigen::VectorXd interior_values(const FourierBesselBasis& basis, double lambda, const Eigen::VectorXd& c,
                                       const InteriorQuadrature& q) {
  const double k = std::sqrt(lambda);
  std::vector<double> row(basis.size());
  Eigen::VectorXd u(static_cast<Eigen::Index>(q.nodes.size()));
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    basis_values(basis, k, q.nodes[i], row);
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += c(static_cast<Eigen::Index>(j)) * row[j];
    u(static_cast<Eigen::Index>(i)) = s;
  }
  return u;
}

inline double weighted_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const InteriorQuadrature& q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += q.weights[static_cast<std::size_t>(i)] * a(i) * b(i);
  return s;
}

/// Golden-section minimization of f on [a, b] to an absolute width `tol`.
template <class F>
double golden_minimize(F&& f, double a, double b, double tol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

/// Everything needed to evaluate one symmetry class.
struct ClassSetup {
  std::shared_ptr<const FourierBesselBasis> basis;
  ClassPoints points;
  int id = 0;
};

inline std::vector<ClassSetup> class_setups(const DomainSpec& d, const MpsConfig& c, int order) {
  std::vector<ClassSetup> out;
  const auto classes = symmetry_classes(d, order, c.use_symmetry);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    auto b = std::make_shared<FourierBesselBasis>();
    b->columns = classes[i].columns;
    out.push_back({b, class_points(d, classes[i], c.n_boundary, c.n_interior, c.seed + 7919 * i),
                   static_cast<int>(i)});
  }
  return out;
}

/// Two-term Weyl estimate of the eigenvalue count below Lambda.
inline double weyl_two_term(const DomainSpec& d, double Lambda) {
  const double fourpi = 4.0 * std::numbers::pi;
  return domain_volume(d) * Lambda / fourpi - boundary_measure(d) * std::sqrt(Lambda) / fourpi;
}

}  // namespace detail

/// Smallest class tension at lambda: near zero exactly at Dirichlet
/// eigenvalues.
inline double tension(const DomainSpec& domain, const MpsConfig& config, double lambda) {
  if (!(lambda > 0.0)) throw InvalidParameter("tension: lambda must be > 0");
  MpsConfig c = config;
  if (c.lambda_hi <= c.lambda_lo) c.lambda_hi = std::max(lambda, c.lambda_lo) * 1.5 + 1.0;
  c = detail::resolve(domain, c);
  double t = 1.0;
  for (const auto& s : detail::class_setups(domain, c, c.basis_order))
    t = std::min(t, detail::class_tension(*s.basis, s.points, lambda).sigma1);
  return t;
}

/// Boundary flux density of a collocation eigenpair.
inline std::vector<double> extract_trace(const MpsEigenpair& pair, const BoundaryGrid& grid) {
  if (!pair.basis) throw InvalidParameter("extract_trace: eigenpair has no basis");
  const double k = std::sqrt(pair.lambda);
  std::vector<double> row(pair.basis->size()), rho(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    basis_normal_derivatives(*pair.basis, k, grid.nodes[i], grid.normals[i], row);
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += pair.coeffs[j] * row[j];
    rho[i] = s * s;
  }
  return rho;
}

/// ||u||_{L2(Omega)} of a collocation eigenpair by polar tensor quadrature.
inline double interior_norm(const DomainSpec& domain, const MpsEigenpair& pair) {
  if (!pair.basis) throw InvalidParameter("interior_norm: eigenpair has no basis");
  const int n_r = std::max(48, static_cast<int>(std::ceil(2.0 * std::sqrt(pair.lambda) * detail::max_radius(domain))) + 32);
  const auto quad = detail::interior_quadrature(domain, n_r, 4 * pair.basis->max_order() + 32);
  const Eigen::Map<const Eigen::VectorXd> c(pair.coeffs.data(), static_cast<Eigen::Index>(pair.coeffs.size()));
  const auto u = detail::interior_values(*pair.basis, pair.lambda, c, quad);
  const double n2 = detail::weighted_dot(u, u, quad);
  if (!(n2 > 0.0) || !std::isfinite(n2))
    throw NormalizationFailure("interior quadrature gives norm^2 = " + std::to_string(n2));
  return std::sqrt(n2);
}

/// Rescales the coefficients to unit L2(Omega) norm and recomputes the
/// Rellich residual on a grid of `certificate_nodes` nodes.
inline MpsEigenpair normalized(const DomainSpec& domain, MpsEigenpair pair, int certificate_nodes = 1024) {
  const double n = interior_norm(domain, pair);
  for (double& v : pair.coeffs) v /= n;
  const auto cert = build_grid(domain, certificate_nodes);
  pair.rellich_residual = rellich_residual(extract_trace(pair, cert), pair.lambda, cert);
  return pair;
}

/// All eigenvalues in [lambda_lo, lambda_hi], ascending, each certified by
/// its tension and Rellich residual.
inline std::vector<MpsEigenpair> scan_and_refine(const DomainSpec& domain, const MpsConfig& config) {
  const MpsConfig c = detail::resolve(domain, config);
  const auto setups = detail::class_setups(domain, c, c.basis_order);
  const auto checks = c.order_check ? detail::class_setups(domain, c, c.basis_order + 8) : std::vector<detail::ClassSetup>{};
  const int n_r = std::max(48, static_cast<int>(std::ceil(2.0 * std::sqrt(c.lambda_hi) * detail::max_radius(domain))) + 32);
  const auto quad = detail::interior_quadrature(domain, n_r, 4 * c.basis_order + 32);
  const auto cert = build_grid(domain, c.certificate_nodes);

  std::vector<MpsEigenpair> found;
  int rejected = 0;
  std::string reject_note;
  const int n_scan = static_cast<int>(std::ceil((c.lambda_hi - c.lambda_lo) / c.scan_step));
  const double h = (c.lambda_hi - c.lambda_lo) / n_scan;

  for (const auto& s : setups) {
    auto sigma = [&](double l) { return detail::class_tension(*s.basis, s.points, l).sigma1; };
    std::vector<double> ts(n_scan + 1);
    for (int i = 0; i <= n_scan; ++i) ts[i] = detail::class_tension(*s.basis, s.points, c.lambda_lo + i * h, false).sigma1;
    for (int i = 0; i <= n_scan; ++i) {
      const bool left_ok = i == 0 || ts[i] < ts[i - 1];
      const bool right_ok = i == n_scan || ts[i] <= ts[i + 1];
      if (!left_ok || !right_ok) continue;
      const double a = c.lambda_lo + std::max(0, i - 1) * h;
      const double b = c.lambda_lo + std::min(n_scan, i + 1) * h;
      const double lam = detail::golden_minimize(sigma, a, b, c.refine_tol * b);
      // minima at the window edges belong to eigenvalues outside it
      if (lam < c.lambda_lo + 0.5 * c.refine_tol * c.lambda_lo || lam > c.lambda_hi) continue;
      const auto tr = detail::class_tension(*s.basis, s.points, lam);
      if (tr.sigma1 > c.tension_tol) continue;

      double shift = 0.0;
      if (c.order_check) {
        const auto& s2 = checks[static_cast<std::size_t>(s.id)];
        auto sigma_hi = [&](double l) { return detail::class_tension(*s2.basis, s2.points, l).sigma1; };
        const double lam2 = detail::golden_minimize(sigma_hi, lam - h, lam + h, c.refine_tol * b);
        shift = std::abs(lam2 - lam) / lam;
        if (shift > 10.0 * c.refine_tol) {
          ++rejected;
          reject_note += " " + std::to_string(lam) + " (shift " + std::to_string(shift) + ")";
          continue;
        }
      }

      // within-class multiplicity: the second singular value also vanishes
      const int mult = tr.sigma2 <= c.tension_tol ? 2 : 1;
      std::vector<Eigen::VectorXd> vecs;
      for (int m = 0; m < mult; ++m) vecs.push_back(detail::interior_values(*s.basis, lam, tr.null_coeffs.col(m), quad));
      std::vector<Eigen::VectorXd> coeffs;
      for (int m = 0; m < mult; ++m) coeffs.push_back(tr.null_coeffs.col(m));
      // Gram-Schmidt in L2(Omega)
      for (int m = 0; m < mult; ++m) {
        for (int p = 0; p < m; ++p) {
          const double proj = detail::weighted_dot(vecs[m], vecs[p], quad);
          vecs[m] -= proj * vecs[p];
          coeffs[m] -= proj * coeffs[p];
        }
        const double nrm2 = detail::weighted_dot(vecs[m], vecs[m], quad);
        if (!(nrm2 > 0.0) || !std::isfinite(nrm2))
          throw NormalizationFailure("interior quadrature gives norm^2 = " + std::to_string(nrm2) + " at lambda " +
                                     std::to_string(lam));
        const double inv = 1.0 / std::sqrt(nrm2);
        vecs[m] *= inv;
        coeffs[m] *= inv;
        Eigen::Index imax = 0;
        coeffs[m].cwiseAbs().maxCoeff(&imax);
        if (coeffs[m](imax) < 0.0) {
          coeffs[m] = -coeffs[m];
          vecs[m] = -vecs[m];
        }
      }
      for (int m = 0; m < mult; ++m) {
        MpsEigenpair e;
        e.lambda = lam;
        e.basis = s.basis;
        e.coeffs.assign(coeffs[m].data(), coeffs[m].data() + coeffs[m].size());
        e.tension = m == 0 ? tr.sigma1 : tr.sigma2;
        e.symmetry_class = s.id;
        e.order_shift = shift;
        e.rellich_residual = rellich_residual(extract_trace(e, cert), lam, cert);
        found.push_back(std::move(e));
      }
    }
  }
  if (rejected > 0)
    throw ConvergenceFailure("mps: " + std::to_string(rejected) +
                             " eigenvalue(s) moved under basis order M_b + 8:" + reject_note);

  std::stable_sort(found.begin(), found.end(), [](const MpsEigenpair& a, const MpsEigenpair& b) {
    return a.lambda < b.lambda || (a.lambda == b.lambda && a.symmetry_class < b.symmetry_class);
  });
  // clusters: consecutive eigenvalues within cluster_tol, across classes
  for (std::size_t i = 0; i < found.size();) {
    std::size_t j = i + 1;
    while (j < found.size() && found[j].lambda - found[j - 1].lambda <= c.cluster_tol * found[j].lambda) ++j;
    for (std::size_t m = i; m < j; ++m) found[m].cluster_size = static_cast<int>(j - i);
    i = j;
  }

  const double expected = detail::weyl_two_term(domain, c.lambda_hi) - detail::weyl_two_term(domain, c.lambda_lo);
  const double margin = boundary_measure(domain) * std::sqrt(c.lambda_hi) / (4.0 * std::numbers::pi);
  if (std::abs(static_cast<double>(found.size()) - expected) > margin + 1.0)
    throw MissedEigenvalueSuspected("mps: found " + std::to_string(found.size()) + " eigenvalues in [" +
                                    std::to_string(c.lambda_lo) + ", " + std::to_string(c.lambda_hi) +
                                    "], two-term Weyl estimate " + std::to_string(expected) + " +- " +
                                    std::to_string(margin));
  return found;
}

/// Packs eigenpairs into a Spectrum whose modes carry collocation traces.
inline Spectrum to_spectrum(const DomainSpec& domain, const std::vector<MpsEigenpair>& pairs, double cluster_tol = 1e-8) {
  Spectrum s;
  s.domain = domain;
  for (const auto& p : pairs) {
    CollocationFamily f{p.basis, p.coeffs, p.tension, p.rellich_residual, p.cluster_size, p.symmetry_class};
    s.modes.push_back({0, p.lambda, std::move(f), 0.0});
  }
  detail::index_spectrum(s, cluster_tol);
  return s;
}

/// Lowest K eigenpairs: the window is grown from a Weyl estimate until it
/// holds K eigenvalues. The first eigenvalue is bounded below by
/// Faber-Krahn-type scaling, so the scan starts at a small fraction of it.
inline std::vector<MpsEigenpair> solve_first_k(const DomainSpec& domain, int K, MpsConfig config = {}) {
  if (K < 1) throw InvalidParameter("solve_first_k: K must be >= 1");
  if (K > mps_mode_ceiling)
    throw InvalidParameter("solve_first_k: K = " + std::to_string(K) + " exceeds the collocation ceiling of " +
                           std::to_string(mps_mode_ceiling) + " modes");
  // lambda_1 >= j01^2 pi / |Omega| (Faber-Krahn)
  const double fk = 2.404825557695773 * 2.404825557695773 * std::numbers::pi / domain_volume(domain);
  config.lambda_lo = 0.5 * fk;
  double hi = fk * 1.5;
  while (detail::weyl_two_term(domain, hi) < K * 1.1 + 6) hi *= 1.1;
  for (int attempt = 0; attempt < 6; ++attempt) {
    MpsConfig c = config;
    c.lambda_hi = hi;
    if (config.basis_order == 0) c.basis_order = 0;
    auto pairs = scan_and_refine(domain, c);
    if (static_cast<int>(pairs.size()) >= K) {
      pairs.resize(static_cast<std::size_t>(K));
      return pairs;
    }
    hi *= 1.15;
  }
  throw MissedEigenvalueSuspected("solve_first_k: could not collect " + std::to_string(K) + " eigenvalues");
}

}  // namespace speclab
