#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "speclab/analytic_spectra.hpp"
#include "speclab/boundary_functionals.hpp"

using namespace speclab;
constexpr double pi = std::numbers::pi;

namespace {

// Midpoint-rule integral over [0, 2 pi), 20000 panels: independent of the
// grid's trapezoid rule and accurate far beyond what the tests need.
template <class F>
double brute_circle(F&& f) {
  const int n = 20000;
  double s = 0;
  for (int i = 0; i < n; ++i) s += f(2 * pi * (i + 0.5) / n);
  return s * 2 * pi / n;
}

const Mode& find_disk_mode(const Spectrum& s, int m, int n, Parity p) {
  for (const auto& mode : s.modes) {
    const auto& f = std::get<DiskFamily>(mode.family);
    if (f.m == m && f.n == n && (m == 0 || f.parity == p)) return mode;
  }
  throw std::runtime_error("mode not found");
}

}  // namespace

class DiskFunctionals : public ::testing::Test {
 protected:
  Spectrum spec = disk_spectrum(1.0, 400);
  BoundaryGrid grid = build_grid(make_disk(1.0), 512);
};

TEST_F(DiskFunctionals, EnergyIsTwiceLambda) {
  for (const auto& m : spec.modes) EXPECT_NEAR(boundary_energy(rho_at(m, spec.domain, grid), grid), 2 * m.lambda, 1e-10 * m.lambda);
}

TEST_F(DiskFunctionals, CosTwoThetaAgainstDipoleModes) {
  const double ratio = brute_circle([](double t) { return std::cos(t) * std::cos(t) * std::cos(2 * t); }) /
                       brute_circle([](double t) { return std::cos(t) * std::cos(t); });
  ASSERT_NEAR(ratio, 0.5, 1e-13);
  const auto w = make_weight("cos2", trig_samples(grid, 2, Parity::cos), grid, 2);
  const auto rc = rho_at(find_disk_mode(spec, 1, 1, Parity::cos), spec.domain, grid);
  const auto rs = rho_at(find_disk_mode(spec, 1, 1, Parity::sin), spec.domain, grid);
  EXPECT_NEAR(weighted_energy(rc, w, grid).e_w, ratio * boundary_energy(rc, grid), 1e-10);
  EXPECT_NEAR(correlation(rc, w, grid), 0.5, 1e-13);
  EXPECT_NEAR(correlation(rs, w, grid), -0.5, 1e-13);
}

TEST_F(DiskFunctionals, OrthogonalFrequencyGivesZero) {
  ASSERT_NEAR(brute_circle([](double t) { return std::cos(t) * std::cos(t) * std::cos(3 * t); }), 0.0, 1e-13);
  const auto w = make_weight("cos3", trig_samples(grid, 3, Parity::cos), grid, 1);
  const auto rc = rho_at(find_disk_mode(spec, 1, 1, Parity::cos), spec.domain, grid);
  EXPECT_NEAR(weighted_energy(rc, w, grid).e_w, 0.0, 1e-12);
}

TEST_F(DiskFunctionals, ZeroWeight) {
  const auto w = certify_weight("zero", std::vector<double>(grid.size(), 0.0), grid);
  EXPECT_EQ(w.level, 0);
  EXPECT_EQ(w.sup_norm, 0.0);
  const auto e = weighted_energy(rho_at(spec.modes[3], spec.domain, grid), w, grid);
  EXPECT_EQ(e.e_w, 0.0);
  EXPECT_EQ(e.e_abs_w, 0.0);
}

TEST_F(DiskFunctionals, RadialModeHasZeroCorrelation) {
  const auto w = make_weight("sin5", trig_samples(grid, 5, Parity::sin), grid, 1);
  const auto r = rho_at(find_disk_mode(spec, 0, 3, Parity::cos), spec.domain, grid);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_NEAR(r[i], r[0], 1e-12 * r[0]);
  EXPECT_NEAR(correlation(r, w, grid), 0.0, 1e-14);
}

TEST_F(DiskFunctionals, CorrelationNeedsZeroMean) {
  const auto w = certify_weight("one", std::vector<double>(grid.size(), 1.0), grid);
  EXPECT_EQ(w.level, 0);
  EXPECT_THROW(correlation(rho_at(spec.modes[0], spec.domain, grid), w, grid), MeanNotZero);
  EXPECT_THROW(make_weight("one", std::vector<double>(grid.size(), 1.0), grid, 1), MeanNotZero);
}

TEST_F(DiskFunctionals, MomentProjectionDegenerateCases) {
  EXPECT_THROW(moment_project("c", std::vector<double>(grid.size(), 1.0), grid, 1), DegenerateWeight);
  EXPECT_THROW(moment_project("h", grid.curvature_H, grid, 1), DegenerateWeight);
  EXPECT_THROW(moment_project("h", grid.curvature_H, grid, 2), DegenerateWeight);
}

TEST_F(DiskFunctionals, MomentProjectionLeavesCosTwoUnchanged) {
  const auto raw = trig_samples(grid, 2, Parity::cos);
  EXPECT_NEAR(brute_circle([](double t) { return std::cos(2 * t); }), 0.0, 1e-13);
  const auto w = moment_project("cos2", raw, grid, 2);
  EXPECT_EQ(w.level, 2);
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(w.samples[i], raw[i], 1e-14);
}

TEST_F(DiskFunctionals, RellichResidualDetectsBadNormalization) {
  const auto& m = spec.modes[10];
  auto r = rho_at(m, spec.domain, grid);
  EXPECT_LE(rellich_residual(r, m.lambda, grid), 1e-10);
  for (double& v : r) v *= 2;
  EXPECT_GE(rellich_residual(r, m.lambda, grid), 0.5);
  EXPECT_THROW(rellich_residual(r, 0.0, grid), InvalidParameter);
}

TEST_F(DiskFunctionals, NegativeDensityAndGridMismatch) {
  std::vector<double> bad(grid.size(), 1.0);
  bad[7] = -1e-3;
  EXPECT_THROW(boundary_energy(bad, grid), NegativeDensity);
  EXPECT_THROW(boundary_energy(std::vector<double>(10, 1.0), grid), GridMismatch);
  const auto other = build_grid(make_disk(1.0), 256);
  const auto w = make_weight("cos2", trig_samples(other, 2, Parity::cos), other, 1);
  EXPECT_THROW(weighted_energy(std::vector<double>(grid.size(), 1.0), w, grid), GridMismatch);
}

TEST_F(DiskFunctionals, CumulativeSums) {
  const auto w = make_weight("cos2", trig_samples(grid, 2, Parity::cos), grid, 1);
  const auto one = certify_weight("one", std::vector<double>(grid.size(), 1.0), grid);
  const std::vector<Weight> ws{w, one};
  const auto t = tabulate(spec, grid, ws);
  EXPECT_EQ(q_lambda_pairing(t, 1.0, 0), 0.0);
  EXPECT_EQ(s_lambda(t, 1.0), 0.0);
  // brute-force per-mode accumulation at Lambda = 200: only m = 1 pairs
  // contribute, as +-E/2
  double direct = 0, s_ref = 0;
  for (const auto& m : spec.modes) {
    if (!(m.lambda < 200)) break;
    const auto& f = std::get<DiskFamily>(m.family);
    s_ref += 2 * m.lambda;
    if (f.m == 1) direct += (f.parity == Parity::cos ? 0.5 : -0.5) * 2 * m.lambda;
  }
  EXPECT_NEAR(q_lambda_pairing(t, 200, 0), direct, 1e-9);
  EXPECT_NEAR(q_lambda_pairing(spec, 200, w, grid), q_lambda_pairing(t, 200, 0), 1e-9);
  EXPECT_NEAR(q_lambda_pairing(t, 200, 1), s_lambda(t, 200), 1e-9 * s_ref);
  EXPECT_NEAR(s_lambda(t, 200), s_ref, 1e-10 * s_ref);
  EXPECT_NEAR(s_lambda(spec, grid, 200), s_ref, 1e-10 * s_ref);
  double prev = 0;
  for (double L = 1; L < t.lambda.back(); L += 37.5) {
    const double s = s_lambda(t, L);
    EXPECT_GE(s, prev);
    prev = s;
  }
  EXPECT_THROW(s_lambda(t, t.lambda.back() + 1), SpectrumTooShort);
  EXPECT_THROW(q_lambda_pairing(t, t.lambda.back() + 1, 0), SpectrumTooShort);
}

TEST(FunctionalBounds, HoldForRandomWeightsOnSeveralDomains) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> coef(0.0, 1.0);
  const std::vector<std::pair<Spectrum, BoundaryGrid>> cases{
      {disk_spectrum(1.0, 300), build_grid(make_disk(1.0), 384)},
      {disk_spectrum(0.6, 100), build_grid(make_disk(0.6), 256)},
      {ball_spectrum(1.0, 200), build_grid(make_ball(1.0), 40, 80)}};
  for (const auto& [spec, grid] : cases) {
    for (int trial = 0; trial < 5; ++trial) {
      // random smooth raw weight: a few low trig / Legendre terms
      std::vector<double> raw(grid.size(), 0.0);
      for (int p = 1; p <= 4; ++p) {
        const double c = coef(rng);
        const auto s = grid.domain.is_planar() ? trig_samples(grid, p, trial % 2 ? Parity::sin : Parity::cos)
                                               : legendre_samples(grid, p);
        for (std::size_t i = 0; i < raw.size(); ++i) raw[i] += c * s[i];
      }
      const auto w = moment_project("rnd", raw, grid, 1);
      EXPECT_LE(std::abs(w.mu0), 1e-10 * w.sup_norm * grid.measure());
      const auto again = moment_project("rnd", w, grid, 1);
      for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(again.samples[i], w.samples[i], 1e-12);
      for (std::size_t k = 0; k < spec.K(); k += 7) {
        const auto rho = rho_at(spec.modes[k], spec.domain, grid);
        const double E = boundary_energy(rho, grid);
        const auto we = weighted_energy(rho, w, grid);
        EXPECT_LE(std::abs(we.e_w), we.e_abs_w * (1 + 1e-14) + 1e-300);
        EXPECT_LE(we.e_abs_w, w.sup_norm * E * (1 + 1e-14));
        EXPECT_LE(std::abs(correlation(rho, w, grid)), w.sup_norm * (1 + 1e-14));
        const auto [m, M] = g_bounds(grid);
        EXPECT_GE(E, 2 * spec.modes[k].lambda / M * (1 - 1e-10));
        EXPECT_LE(E, 2 * spec.modes[k].lambda / m * (1 + 1e-10));
      }
    }
  }
}

TEST(MomentProjection, LevelTwoOnEllipseKillsBothMoments) {
  const auto grid = build_grid(make_ellipse(1.0, 0.7), 512);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> coef(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> raw(grid.size(), coef(rng));
    for (int p = 1; p <= 6; ++p) {
      const double c = coef(rng);
      const auto s = trig_samples(grid, p, p % 2 ? Parity::sin : Parity::cos);
      for (std::size_t i = 0; i < raw.size(); ++i) raw[i] += c * s[i];
    }
    const auto w = moment_project("rnd", raw, grid, 2);
    EXPECT_EQ(w.level, 2);
    double habs = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) habs += grid.quad_weights[i] * grid.curvature_H[i];
    EXPECT_LE(std::abs(w.mu0), 1e-10 * w.sup_norm * grid.measure());
    EXPECT_LE(std::abs(w.mu1), 1e-10 * w.sup_norm * habs);
    const auto again = moment_project("rnd", w, grid, 2);
    for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(again.samples[i], w.samples[i], 1e-12);
  }
  // H - H_bar itself is level 1 but not level 2 on the ellipse
  const auto hd = certify_weight("hdev", curvature_deviation_samples(grid), grid);
  EXPECT_EQ(hd.level, 1);
  EXPECT_THROW(moment_project("h", grid.curvature_H, grid, 2), DegenerateWeight);
}

TEST(FullEigenspaceNeutrality, DiskAndBallMultiplets) {
  const auto check = [](const Spectrum& spec, const BoundaryGrid& grid, const Weight& w) {
    // the last eigenspace may be cut by the truncation at K
    for (std::size_t e = 0; e + 1 < spec.eigenspaces.size(); ++e) {
      const auto& es = spec.eigenspaces[e];
      if (es.size() < 2) continue;
      std::vector<double> sum(grid.size(), 0.0);
      for (auto i : es) {
        const auto r = rho_at(spec.modes[i], spec.domain, grid);
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += r[j];
      }
      const double mx = *std::max_element(sum.begin(), sum.end());
      const double mn = *std::min_element(sum.begin(), sum.end());
      EXPECT_LE(mx - mn, 1e-11 * mx);
      EXPECT_LE(std::abs(correlation(sum, w, grid)), 1e-12);
    }
  };
  const auto dg = build_grid(make_disk(1.0), 512);
  const auto ds = disk_spectrum(1.0, 301);  // ends mid-pair on purpose
  check(ds, dg, make_weight("cos2", trig_samples(dg, 2, Parity::cos), dg, 1));
  const auto bg = build_grid(make_ball(1.0), 48, 96);
  const auto bs = ball_spectrum(1.0, 250);
  check(bs, bg, moment_project("p2", legendre_samples(bg, 2), bg, 1));
}
