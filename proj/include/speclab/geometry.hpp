#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "speclab/errors.hpp"
#include "speclab/quadrature.hpp"

namespace speclab {

using Point = std::array<double, 3>;

inline double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }
inline Point operator-(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

enum class DomainKind { disk, ball, ellipse, perturbed_disk };

inline std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::disk: return "disk";
    case DomainKind::ball: return "ball";
    case DomainKind::ellipse: return "ellipse";
    case DomainKind::perturbed_disk: return "perturbed_disk";
  }
  return "unknown";
}

inline DomainKind domain_kind_from_string(const std::string& s) {
  if (s == "disk") return DomainKind::disk;
  if (s == "ball") return DomainKind::ball;
  if (s == "ellipse") return DomainKind::ellipse;
  if (s == "perturbed_disk") return DomainKind::perturbed_disk;
  throw InvalidParameter("unknown domain kind '" + s + "'");
}

/// A validated strictly convex domain. All supported domains are centered at
/// the origin; `x0` is the interior base point of the support function.
struct DomainSpec {
  DomainKind kind = DomainKind::disk;
  int dimension = 2;
  double radius = 1.0;     // disk, ball, perturbed_disk
  double semi_a = 0.0;     // ellipse, x semi-axis
  double semi_b = 0.0;     // ellipse, y semi-axis
  double amplitude = 0.0;  // perturbed_disk
  int frequency = 0;       // perturbed_disk
  Point x0{0.0, 0.0, 0.0};

  bool is_planar() const { return dimension == 2; }
  bool operator==(const DomainSpec&) const = default;
};

/// Raw constructor parameters, as read from a config file.
struct DomainParams {
  DomainKind kind = DomainKind::disk;
  double radius = 1.0;
  double semi_a = 1.0;
  double semi_b = 1.0;
  double amplitude = 0.0;
  int frequency = 2;
  std::optional<Point> x0;
};

namespace detail {

struct CurvePoint {
  double x, y;    // position
  double dx, dy;  // first derivative in the parameter
  double ddx, ddy;
};

inline CurvePoint curve_point(const DomainSpec& d, double t) {
  const double c = std::cos(t), s = std::sin(t);
  switch (d.kind) {
    case DomainKind::disk:
      return {d.radius * c, d.radius * s, -d.radius * s, d.radius * c, -d.radius * c, -d.radius * s};
    case DomainKind::ellipse:
      return {d.semi_a * c, d.semi_b * s, -d.semi_a * s, d.semi_b * c, -d.semi_a * c, -d.semi_b * s};
    case DomainKind::perturbed_disk: {
      const double p = d.frequency;
      const double r = d.radius * (1.0 + d.amplitude * std::cos(p * t));
      const double dr = -d.radius * d.amplitude * p * std::sin(p * t);
      const double ddr = -d.radius * d.amplitude * p * p * std::cos(p * t);
      return {r * c,
              r * s,
              dr * c - r * s,
              dr * s + r * c,
              ddr * c - 2.0 * dr * s - r * c,
              ddr * s + 2.0 * dr * c - r * s};
    }
    case DomainKind::ball: break;
  }
  throw InvalidParameter("curve_point: domain is not planar");
}

inline double curve_curvature(const CurvePoint& p) {
  const double speed = std::hypot(p.dx, p.dy);
  return (p.dx * p.ddy - p.dy * p.ddx) / (speed * speed * speed);
}

}  // namespace detail

/// Curvature of the boundary at curve parameter `param` (planar), or mean
/// curvature of the sphere (ball, `param` ignored).
inline double curvature_at(const DomainSpec& d, double param) {
  if (d.kind == DomainKind::ball) return 1.0 / d.radius;
  return detail::curve_curvature(detail::curve_point(d, param));
}

/// Strict interior test.
inline bool contains(const DomainSpec& d, const Point& p) {
  switch (d.kind) {
    case DomainKind::disk: return p[0] * p[0] + p[1] * p[1] < d.radius * d.radius;
    case DomainKind::ball: return dot(p, p) < d.radius * d.radius;
    case DomainKind::ellipse: {
      const double u = p[0] / d.semi_a, v = p[1] / d.semi_b;
      return u * u + v * v < 1.0;
    }
    case DomainKind::perturbed_disk: {
      const double r = std::hypot(p[0], p[1]);
      const double t = std::atan2(p[1], p[0]);
      return r < d.radius * (1.0 + d.amplitude * std::cos(d.frequency * t));
    }
  }
  return false;
}

/// Distance from `origin` (interior) to the boundary along direction angle
/// `theta` (planar domains only).
inline double ray_to_boundary(const DomainSpec& d, const Point& origin, double theta) {
  const double ux = std::cos(theta), uy = std::sin(theta);
  switch (d.kind) {
    case DomainKind::disk:
    case DomainKind::ellipse: {
      const double a = d.kind == DomainKind::disk ? d.radius : d.semi_a;
      const double b = d.kind == DomainKind::disk ? d.radius : d.semi_b;
      // |(o + s u) / (a, b)|^2 = 1, positive root
      const double qa = ux * ux / (a * a) + uy * uy / (b * b);
      const double qb = 2.0 * (origin[0] * ux / (a * a) + origin[1] * uy / (b * b));
      const double qc = origin[0] * origin[0] / (a * a) + origin[1] * origin[1] / (b * b) - 1.0;
      const double disc = std::sqrt(qb * qb - 4.0 * qa * qc);
      // qc < 0, so the stable form avoids cancellation
      return (2.0 * -qc) / (qb + disc);
    }
    case DomainKind::perturbed_disk: {
      if (origin[0] == 0.0 && origin[1] == 0.0)
        return d.radius * (1.0 + d.amplitude * std::cos(d.frequency * theta));
      double lo = 0.0, hi = 2.0 * d.radius * (1.0 + d.amplitude);
      for (int i = 0; i < 200 && hi - lo > 1e-16 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (contains(d, {origin[0] + mid * ux, origin[1] + mid * uy, 0.0}))
          lo = mid;
        else
          hi = mid;
      }
      return 0.5 * (lo + hi);
    }
    case DomainKind::ball: break;
  }
  throw InvalidParameter("ray_to_boundary: domain is not planar");
}

/// |Omega|: area (d = 2) or volume (d = 3).
inline double domain_volume(const DomainSpec& d) {
  constexpr double pi = std::numbers::pi;
  switch (d.kind) {
    case DomainKind::disk: return pi * d.radius * d.radius;
    case DomainKind::ball: return 4.0 / 3.0 * pi * d.radius * d.radius * d.radius;
    case DomainKind::ellipse: return pi * d.semi_a * d.semi_b;
    case DomainKind::perturbed_disk:
      return periodic_integral([&](double t) {
        const double r = d.radius * (1.0 + d.amplitude * std::cos(d.frequency * t));
        return 0.5 * r * r;
      });
  }
  return 0.0;
}

/// |dOmega|: perimeter (d = 2) or surface area (d = 3). Ellipse and perturbed
/// disk perimeters come from the converged periodic rule for the speed.
inline double boundary_measure(const DomainSpec& d) {
  constexpr double pi = std::numbers::pi;
  switch (d.kind) {
    case DomainKind::disk: return 2.0 * pi * d.radius;
    case DomainKind::ball: return 4.0 * pi * d.radius * d.radius;
    case DomainKind::ellipse:
    case DomainKind::perturbed_disk:
      return periodic_integral([&](double t) {
        const auto p = detail::curve_point(d, t);
        return std::hypot(p.dx, p.dy);
      });
  }
  return 0.0;
}

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

/// Leading Weyl constant c_Omega in lambda_k ~ c_Omega k^{2/d}.
inline double weyl_reference(const DomainSpec& d) {
  const double pi = std::numbers::pi;
  return 4.0 * pi * pi * std::pow(unit_ball_volume(d.dimension) * domain_volume(d), -2.0 / d.dimension);
}

/// Validates parameters and builds a domain. Perturbed disks are checked for
/// strict convexity on a 16x oversampled parameter grid.
inline DomainSpec build_domain(const DomainParams& p) {
  DomainSpec d;
  d.kind = p.kind;
  d.dimension = p.kind == DomainKind::ball ? 3 : 2;
  switch (p.kind) {
    case DomainKind::disk:
    case DomainKind::ball:
      if (!(p.radius > 0.0) || !std::isfinite(p.radius)) throw InvalidParameter("radius must be > 0");
      d.radius = p.radius;
      break;
    case DomainKind::ellipse:
      if (!(p.semi_b > 0.0) || !(p.semi_a >= p.semi_b) || !std::isfinite(p.semi_a))
        throw InvalidParameter("ellipse requires a >= b > 0");
      d.semi_a = p.semi_a;
      d.semi_b = p.semi_b;
      d.radius = 0.0;
      break;
    case DomainKind::perturbed_disk: {
      if (!(p.radius > 0.0) || !std::isfinite(p.radius)) throw InvalidParameter("radius must be > 0");
      if (!(p.amplitude >= 0.0) || !(p.amplitude < 1.0))
        throw InvalidParameter("perturbation amplitude must lie in [0, 1)");
      if (p.frequency < 2) throw InvalidParameter("perturbation frequency must be >= 2");
      d.radius = p.radius;
      d.amplitude = p.amplitude;
      d.frequency = p.frequency;
      const int samples = 16 * std::max(256, 8 * p.frequency);
      for (int i = 0; i < samples; ++i) {
        const double t = 2.0 * std::numbers::pi * i / samples;
        const double kappa = curvature_at(d, t);
        if (!(kappa > 0.0))
          throw ConvexityViolation("perturbed disk is not strictly convex: curvature " + std::to_string(kappa) +
                                   " at t=" + std::to_string(t));
      }
      break;
    }
  }
  if (p.x0) {
    Point x0 = *p.x0;
    if (d.dimension == 2) x0[2] = 0.0;
    if (!contains(d, x0)) throw InvalidParameter("base point x0 is not strictly interior");
    d.x0 = x0;
  }
  return d;
}

inline DomainSpec make_disk(double radius) { return build_domain({.kind = DomainKind::disk, .radius = radius}); }
inline DomainSpec make_ball(double radius) { return build_domain({.kind = DomainKind::ball, .radius = radius}); }
inline DomainSpec make_ellipse(double a, double b) {
  return build_domain({.kind = DomainKind::ellipse, .semi_a = a, .semi_b = b});
}
inline DomainSpec make_perturbed_disk(double radius, double amplitude, int frequency) {
  return build_domain(
      {.kind = DomainKind::perturbed_disk, .radius = radius, .amplitude = amplitude, .frequency = frequency});
}

/// Returns a copy of `d` with a different interior base point.
inline DomainSpec with_base_point(DomainSpec d, const Point& x0) {
  Point p = x0;
  if (d.dimension == 2) p[2] = 0.0;
  if (!contains(d, p)) throw InvalidParameter("base point x0 is not strictly interior");
  d.x0 = p;
  return d;
}

/// Discretized boundary. For planar domains the nodes are uniform in the curve
/// parameter; for the ball they are a Gauss-Legendre (in cos theta) by uniform
/// longitude tensor grid, latitude-major.
struct BoundaryGrid {
  DomainSpec domain;
  std::vector<Point> nodes;
  std::vector<double> quad_weights;
  std::vector<Point> normals;
  std::vector<double> curvature_H;
  std::vector<double> support_g;
  std::vector<double> params;  // curve parameter t (planar) or polar angle (ball)
  double H_bar = 0.0;
  int n_lat = 0;
  int n_lon = 0;

  std::size_t size() const { return nodes.size(); }
  double measure() const {
    double s = 0.0;
    for (double w : quad_weights) s += w;
    return s;
  }
  bool same_layout(const BoundaryGrid& o) const {
    return domain == o.domain && nodes.size() == o.nodes.size() && n_lat == o.n_lat && n_lon == o.n_lon;
  }
};

namespace detail {

inline void finish_grid(BoundaryGrid& g) {
  double hw = 0.0, wsum = 0.0;
  g.support_g.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.support_g[i] = dot(g.nodes[i] - g.domain.x0, g.normals[i]);
    hw += g.curvature_H[i] * g.quad_weights[i];
    wsum += g.quad_weights[i];
  }
  g.H_bar = hw / wsum;
  const double gmin = *std::min_element(g.support_g.begin(), g.support_g.end());
  if (!(gmin > 0.0))
    throw NonPositiveSupport("support function min " + std::to_string(gmin) + " <= 0: x0 not interior");
}

}  // namespace detail

/// Planar boundary grid with `n_nodes` uniform-parameter nodes.
inline BoundaryGrid build_grid(const DomainSpec& d, int n_nodes) {
  if (!d.is_planar()) throw InvalidParameter("build_grid(domain, n): use (n_lat, n_lon) for the ball");
  if (n_nodes < 64) throw InvalidParameter("planar grids need n_nodes >= 64");
  BoundaryGrid g;
  g.domain = d;
  g.nodes.resize(n_nodes);
  g.quad_weights.resize(n_nodes);
  g.normals.resize(n_nodes);
  g.curvature_H.resize(n_nodes);
  g.params.resize(n_nodes);
  const double h = 2.0 * std::numbers::pi / n_nodes;
  for (int i = 0; i < n_nodes; ++i) {
    const double t = i * h;
    const auto p = detail::curve_point(d, t);
    const double speed = std::hypot(p.dx, p.dy);
    g.params[i] = t;
    g.nodes[i] = {p.x, p.y, 0.0};
    g.quad_weights[i] = speed * h;
    g.normals[i] = {p.dy / speed, -p.dx / speed, 0.0};
    g.curvature_H[i] = detail::curve_curvature(p);
  }
  detail::finish_grid(g);
  return g;
}

/// Sphere grid for the ball: `n_lat` Gauss-Legendre nodes in cos(theta) by
/// `n_lon` uniform longitudes.
inline BoundaryGrid build_grid(const DomainSpec& d, int n_lat, int n_lon) {
  if (d.kind != DomainKind::ball) throw InvalidParameter("build_grid(domain, n_lat, n_lon): ball only");
  if (n_lat < 2 || n_lon < 4) throw InvalidParameter("sphere grid too small");
  const auto rule = gauss_legendre(n_lat);
  BoundaryGrid g;
  g.domain = d;
  g.n_lat = n_lat;
  g.n_lon = n_lon;
  const double R = d.radius;
  const double dphi = 2.0 * std::numbers::pi / n_lon;
  for (int i = 0; i < n_lat; ++i) {
    const double ct = rule.nodes[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < n_lon; ++j) {
      const double phi = j * dphi;
      const Point nu{st * std::cos(phi), st * std::sin(phi), ct};
      g.nodes.push_back({R * nu[0], R * nu[1], R * nu[2]});
      g.normals.push_back(nu);
      g.quad_weights.push_back(R * R * rule.weights[i] * dphi);
      g.curvature_H.push_back(1.0 / R);
      g.params.push_back(std::acos(ct));
    }
  }
  detail::finish_grid(g);
  return g;
}

/// (m, M) = (min g, max g) over the grid.
inline std::pair<double, double> g_bounds(const BoundaryGrid& grid) {
  if (grid.support_g.empty()) throw InvalidParameter("g_bounds: empty grid");
  const auto [lo, hi] = std::minmax_element(grid.support_g.begin(), grid.support_g.end());
  if (!(*lo > 0.0)) throw NonPositiveSupport("g_bounds: min support " + std::to_string(*lo) + " <= 0");
  return {*lo, *hi};
}

/// Polar angle of a planar boundary node about the domain center.
inline double polar_angle(const Point& p) { return std::atan2(p[1], p[0]); }

}  // namespace speclab
