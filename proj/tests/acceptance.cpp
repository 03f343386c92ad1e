// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>

#include "speclab/harness.hpp"

using namespace speclab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  failures += !o.pass;
  std::printf("%s criterion %2d  %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

double max_rellich(const SpectralTable& t, std::size_t K) {
  double m = 0.0;
  for (std::size_t i = 0; i < K; ++i) m = std::max(m, t.rellich[i]);
  return m;
}

// Shared spectra: disk to Lambda > 1e4 on 4096 nodes with cos 2theta, ball
// past k = 2000 + N_2000 on a 64 x 128 grid with the projected P_2 weight.
struct Fixtures {
  DomainSpec disk = make_disk(1.0), ball = make_ball(1.0);
  BoundaryGrid disk_grid = build_grid(disk, 4096), ball_grid = build_grid(ball, 64, 128);
  Spectrum disk_spec, ball_spec;
  SpectralTable disk_table, ball_table;

  Fixtures() {
    const int disk_K = static_cast<int>(disk_count_below(1.0, 1.02e4)) + 2;
    disk_spec = disk_spectrum(1.0, disk_K);
    std::vector<Weight> dw{make_weight("cos2", trig_samples(disk_grid, 2, Parity::cos), disk_grid, 1)};
    disk_table = tabulate(disk_spec, disk_grid, dw);
    ball_spec = ball_spectrum(1.0, 2000 + 210 + 40);
    std::vector<Weight> bw{moment_project("P2", legendre_samples(ball_grid, 2), ball_grid, 1)};
    ball_table = tabulate(ball_spec, ball_grid, bw);
  }
};

const Fixtures& fixtures() {
  static const Fixtures f;
  return f;
}

std::vector<int> k_range(int lo, int hi) {
  std::vector<int> ks;
  for (int k = lo; k <= hi; ++k) ks.push_back(k);
  return ks;
}

}  // namespace

int main() {
  report(1, "Rellich exactness (analytic)", [] {
    const auto t0 = Clock::now();
    const auto disk = make_disk(1.0), ball = make_ball(1.0);
    const auto dt = tabulate(disk_spectrum(1.0, 2000), build_grid(disk, 4096));
    const auto bt = tabulate(ball_spectrum(1.0, 1000), build_grid(ball, 64, 128));
    const double secs = seconds_since(t0);
    const double d = max_rellich(dt, 2000), b = max_rellich(bt, 1000);
    return Outcome{d <= 1e-10 && b <= 1e-10 && secs <= 120.0,
                   "disk(2000) max " + g(d) + ", ball(1000) max " + g(b) + " (<= 1e-10), " + g(secs) + " s (<= 120)"};
  });

  report(2, "Energy sandwich on ellipse(1, 0.8)", [] {
    const auto t0 = Clock::now();
    const auto el = make_ellipse(1.0, 0.8);
    const auto pairs = solve_first_k(el, 50);
    const auto grid = build_grid(el, 1024);
    const auto [m, M] = g_bounds(grid);
    int outside = 0;
    double worst = 0.0;
    for (const auto& p : pairs) {
      const auto rho = extract_trace(p, grid);
      const double E = boundary_energy(rho, grid);
      outside += !(E >= 2 * p.lambda / M && E <= 2 * p.lambda / m);
      worst = std::max(worst, rellich_residual(rho, p.lambda, grid));
    }
    const double secs = seconds_since(t0);
    return Outcome{pairs.size() == 50 && outside == 0 && worst <= 1e-6 && secs <= 300.0,
                   std::to_string(pairs.size()) + " modes, " + std::to_string(outside) +
                       " outside [2l/M, 2l/m], max Rellich " + g(worst) + " (<= 1e-6), " + g(secs) + " s (<= 300)"};
  });

  report(3, "Two-sided mode-to-packet ratio", [] {
    const auto& f = fixtures();
    bool ok = true;
    std::string detail;
    for (const auto* t : {&f.disk_table, &f.ball_table}) {
      for (double alpha : {0.3, 0.5, 0.7}) {
        const PacketSchedule s{alpha, 2, k_range(200, 2000)};
        std::vector<double> ns, ratios;
        double lo = 1e300, hi = 0.0;
        for (int k : s.k_list) {
          const int n = s.length(k);
          const double r = mode_to_packet_ratio(*t, k, n);
          lo = std::min(lo, n * r);
          hi = std::max(hi, n * r);
          ns.push_back(n);
          ratios.push_back(r);
        }
        const double slope = rate_fit(ns, ratios).slope;
        const bool pass = lo >= 0.8 && hi <= 1.25 && std::abs(slope + 1.0) <= 0.05;
        ok = ok && pass;
        detail += std::string(t == &f.disk_table ? "disk" : "ball") + " a=" + g(alpha) + ": N*ratio [" + g(lo) + ", " +
                  g(hi) + "] slope " + g(slope) + (pass ? "" : " (!)") + "; ";
      }
    }
    return Outcome{ok, detail + "need [0.8, 1.25], slope -1 +- 0.05"};
  });

  report(4, "Fixed window N = 8 does not decay", [] {
    const auto& f = fixtures();
    bool ok = true;
    std::string detail;
    for (const auto* t : {&f.disk_table, &f.ball_table}) {
      std::vector<double> ks, vals;
      double lo = 1e300, hi = 0.0;
      for (int k = 200; k <= 2000; ++k) {
        const double v = 8.0 * mode_to_packet_ratio(*t, k, 8);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        ks.push_back(k);
        vals.push_back(v);
      }
      const double slope = rate_fit(ks, vals).slope;
      ok = ok && lo >= 0.9 && hi <= 1.1 && std::abs(slope) <= 0.02;
      detail += std::string(t == &f.disk_table ? "disk" : "ball") + ": N*ratio [" + g(lo) + ", " + g(hi) +
                "] trend " + g(slope) + "; ";
    }
    return Outcome{ok, detail + "need [0.9, 1.1], |trend| <= 0.02"};
  });

  report(5, "Packet cancellation d = 2 (disk, cos 2theta)", [] {
    const auto& t = fixtures().disk_table;
    const PacketSchedule s{0.5, 2, k_range(200, 2000)};
    double worst = 0.0, whole_max = 0.0;
    int whole = 0;
    for (int k : s.k_list) {
      const int n = s.length(k);
      const double c = packet_correlation_average(t, k, n, 0);
      worst = std::max(worst, std::abs(c) * n);
      if (packet_is_whole_eigenspaces(t, k, n)) {
        ++whole;
        whole_max = std::max(whole_max, std::abs(c));
      }
    }
    return Outcome{worst <= 2.0 && whole > 0 && whole_max <= 1e-12,
                   "max |corr_avg| N_k = " + g(worst) + " (<= 2); " + std::to_string(whole) +
                       " whole-eigenspace packets, max |corr_avg| " + g(whole_max) + " (<= 1e-12)"};
  });

  report(6, "Packet cancellation d = 3 level 2 (ball, P_2)", [] {
    const auto& t = fixtures().ball_table;
    const PacketSchedule s{0.5, 2, k_range(200, 1000)};
    std::vector<double> ks, scaled;
    double constant = 0.0;
    int zeros = 0;
    for (int k : s.k_list) {
      const int n = s.length(k);
      const double c = packet_correlation_average(t, k, n, 0);
      constant = std::max(constant, std::abs(c) * n);
      // exact zeros (whole multiplets) carry no trend information
      if (std::abs(c) <= harness::exact_zero) {
        ++zeros;
        continue;
      }
      ks.push_back(k);
      scaled.push_back(std::abs(c) * n);
    }
    const auto fit = rate_fit(ks, scaled);
    return Outcome{t.weight_levels[0] == 2 && constant <= 5.0 && std::abs(fit.slope) <= 0.1,
                   "certified level " + std::to_string(t.weight_levels[0]) + ", fitted constant " + g(constant) +
                       " (<= 5), trend slope " + g(fit.slope) + " +- " + g(fit.slope_stderr) + " over " +
                       std::to_string(ks.size()) + " nonzero packets (" + std::to_string(zeros) +
                       " exact zeros) (need |slope| <= 0.1)"};
  });

  report(7, "Weyl fits on the disk over [1e3, 1e4]", [] {
    const auto& t = fixtures().disk_table;
    const auto n = weyl_fit(t, WeylMode::counting, 1e3, 1e4);
    const auto s = weyl_fit(t, WeylMode::boundary, 1e3, 1e4);
    const auto q = weyl_fit(t, WeylMode::pairing, 1e3, 1e4, 0);
    const double rel = std::abs(n.constant - 0.25) / 0.25;
    return Outcome{std::abs(n.fit.slope - 1.0) <= 0.02 && rel <= 0.03 && std::abs(s.fit.slope - 2.0) <= 0.05 &&
                       q.leading_consistent_with_zero,
                   "N exponent " + g(n.fit.slope) + " (1 +- 0.02), constant " + g(n.constant) + " (1/4 within 3%: " +
                       g(100 * rel) + "%), S exponent " + g(s.fit.slope) + " (2 +- 0.05), pairing leading " +
                       g(q.two_term.a) + " +- " + g(q.two_term.se_a) +
                       (q.leading_consistent_with_zero ? " consistent with 0" : " NOT consistent with 0")};
  });

  report(8, "Telescoping consistency (20 random disk packets)", [] {
    const auto& t = fixtures().disk_table;
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> kd(1, 2400), nd(2, 80);
    int done = 0;
    double worst = 0.0;
    while (done < 20) {
      const int k = kd(rng), n = nd(rng);
      const std::size_t first = k - 1, last = first + n - 1;
      if (last + 1 >= t.K()) continue;
      if ((first > 0 && t.lambda[first - 1] == t.lambda[first]) || t.lambda[last] == t.lambda[last + 1]) continue;
      worst = std::max(worst, telescoping_check(t, k, n, 0).relative_error);
      ++done;
    }
    return Outcome{worst <= 1e-9, "max relative discrepancy " + g(worst) + " (<= 1e-9)"};
  });

  report(9, "Basis-mixing invariance (100 random orthogonal mixes)", [] {
    const auto& f = fixtures();
    const auto dgrid = build_grid(f.disk, 1024);
    const auto bgrid = build_grid(f.ball, 48, 96);
    const std::vector<Weight> dw{make_weight("cos2", trig_samples(dgrid, 2, Parity::cos), dgrid, 1)};
    const std::vector<Weight> bw{moment_project("P2", legendre_samples(bgrid, 2), bgrid, 1)};
    const auto dspec = disk_spectrum(1.0, 400);
    const auto bspec = ball_spectrum(1.0, 400);
    std::mt19937_64 rng(77);
    auto draw = [&](const Spectrum& s) {
      std::vector<std::size_t> spaces;
      for (std::size_t e = 0; e + 1 < s.eigenspaces.size(); ++e)
        if (s.eigenspaces[e].size() >= 2) spaces.push_back(e);
      return spaces;
    };
    const auto dspaces = draw(dspec), bspaces = draw(bspec);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const bool ball = i % 2 == 1;
      const auto& spaces = ball ? bspaces : dspaces;
      const auto e = spaces[std::uniform_int_distribution<std::size_t>(0, spaces.size() - 1)(rng)];
      const double dev = ball ? basis_mixing_check(bspec, bgrid, e, rng(), bw) : basis_mixing_check(dspec, dgrid, e, rng(), dw);
      worst = std::max(worst, dev);
    }
    return Outcome{worst <= 1e-10, "50 disk pairs + 50 ball multiplets, max relative change " + g(worst) + " (<= 1e-10)"};
  });

  report(10, "Threshold arithmetic", [] {
    const std::vector<std::tuple<int, int, double>> cases{{2, 1, 0.0}, {3, 1, 1.0 / 3.0}, {3, 2, 0.0}, {4, 1, 0.5}, {4, 2, 0.25}};
    bool ok = true;
    std::string detail;
    for (const auto& [d, level, want] : cases) {
      const double got = threshold_exponent(d, level);
      ok = ok && got == want;
      detail += "(" + std::to_string(d) + "," + std::to_string(level) + ")->" + io::format_double(got) + " ";
    }
    return Outcome{ok, detail + "exact"};
  });

  report(11, "Reproducibility (two CLI runs, same config and seed)", [] {
    const fs::path dir = fs::path(SPECLAB_TEST_SCRATCH) / "acceptance_rerun";
    fs::remove_all(dir);
    const std::string cmd = std::string(SPECLAB_CLI_PATH) + " run " + SPECLAB_SOURCE_DIR +
                            "/configs/disk_minimal.json --set outputs.directory=" + dir.string() + " >/dev/null 2>&1";
    auto snapshot = [&] {
      std::map<std::string, std::string> out;
      for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = io::read_file(e.path());
      return out;
    };
    const int s1 = std::system(cmd.c_str());
    const auto first = snapshot();
    const int s2 = std::system(cmd.c_str());
    const auto second = snapshot();
    std::size_t differing = 0;
    for (const auto& [name, bytes] : first) differing += !second.count(name) || second.at(name) != bytes;
    return Outcome{s1 == 0 && s2 == 0 && first.size() == second.size() && differing == 0,
                   std::to_string(first.size()) + " artifacts, " + std::to_string(differing) + " differ"};
  });

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
