#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include "speclab/analytic_spectra.hpp"
#include "speclab/boundary_functionals.hpp"
#include "speclab/io.hpp"
#include "speclab/mps_solver.hpp"
#include "speclab/packets.hpp"

// Config-driven batch runner. A run is a sequence of stages; each stage reads
// the config plus the artifacts of earlier stages from the output directory,
// so stages can also be invoked one at a time.

namespace speclab::harness {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* version = "0.1.0";

/// |corr_avg| at or below this counts as an exact zero.
inline constexpr double exact_zero = 1e-12;

enum class Stage { spectrum, rellich, packets, cancellation, weyl, report };

inline constexpr std::array<Stage, 6> all_stages{Stage::spectrum, Stage::rellich,      Stage::packets,
                                                 Stage::cancellation, Stage::weyl, Stage::report};

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::spectrum: return "spectrum";
    case Stage::rellich: return "rellich";
    case Stage::packets: return "packets";
    case Stage::cancellation: return "cancellation";
    case Stage::weyl: return "weyl";
    case Stage::report: return "report";
  }
  return "?";
}

// Config.

struct WeightSpec {
  std::string name;
  std::string type;  // trig | legendre | curvature_deviation | constant
  int p = 2;
  Parity parity = Parity::cos;
  int n = 2;
  double value = 1.0;
  int level = 1;
};

struct ScheduleSpec {
  double alpha = 0.5;
  int n_min = 2;
  int k_min = 1;
  int k_max = 1;
  int k_step = 1;

  PacketSchedule schedule() const {
    PacketSchedule s{alpha, n_min, {}};
    for (int k = k_min; k <= k_max; k += k_step) s.k_list.push_back(k);
    return s;
  }
};

struct CheckSpec {
  std::optional<double> rellich_tol;  // default: 1e-10 analytic, 1e-6 collocation
  bool sandwich = true;
  std::optional<std::array<double, 2>> ratio_band;   // N_k * ratio in [lo, hi]
  std::optional<std::array<double, 2>> ratio_slope;  // {target, tol} for log ratio vs log N_k
  std::optional<double> nratio_trend_max;            // |slope| of log(N_k ratio) vs log k
  std::optional<double> envelope_constant_max;       // max |corr_avg| N_k
  std::optional<double> whole_eigenspace_zero;       // |corr_avg| on whole-eigenspace packets
  std::optional<double> cancellation_trend_max;      // |slope| of log(|corr_avg| N_k) vs log k
  std::optional<double> weyl_counting_exponent_tol;
  std::optional<double> weyl_counting_constant_rel;
  std::optional<double> weyl_boundary_exponent_tol;
  bool weyl_pairing_zero = false;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  DomainParams domain;
  std::string method = "analytic";
  int K = 200;
  MpsConfig mps;
  int n_nodes = 1024;
  int n_lat = 64;
  int n_lon = 128;
  std::vector<WeightSpec> weights;
  std::vector<ScheduleSpec> schedules;
  std::optional<double> weyl_lo, weyl_hi;
  CheckSpec checks;
  fs::path directory = "speclab_out";
  bool write_csv = true;
  bool write_json = false;
  json effective;  // the validated input, after overrides

  double rellich_tol() const { return checks.rellich_tol.value_or(method == "analytic" ? 1e-10 : 1e-6); }
};

namespace detail {

[[noreturn]] inline void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

/// Typed view of one config object that remembers which keys were read, so
/// leftovers can be reported as unknown.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) fail(where(key) + " is required");
    return j_.at(key);
  }

  double number(const std::string& key, std::optional<double> def = std::nullopt) {
    if (!has(key) && def) return used_.insert(key), *def;
    const auto& v = raw(key);
    if (!v.is_number()) fail(where(key) + " must be a number");
    return v.get<double>();
  }

  long long integer(const std::string& key, std::optional<long long> def = std::nullopt) {
    if (!has(key) && def) return used_.insert(key), *def;
    const auto& v = raw(key);
    if (!v.is_number_integer()) fail(where(key) + " must be an integer");
    return v.get<long long>();
  }

  int small_int(const std::string& key, std::optional<int> def = std::nullopt) {
    const auto v = integer(key, def);
    if (v < -1000000000 || v > 1000000000) fail(where(key) + " is out of range");
    return static_cast<int>(v);
  }

  bool boolean(const std::string& key, std::optional<bool> def = std::nullopt) {
    if (!has(key) && def) return used_.insert(key), *def;
    const auto& v = raw(key);
    if (!v.is_boolean()) fail(where(key) + " must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> def = std::nullopt) {
    if (!has(key) && def) return used_.insert(key), *def;
    const auto& v = raw(key);
    if (!v.is_string()) fail(where(key) + " must be a string");
    return v.get<std::string>();
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  std::optional<std::array<double, 2>> optional_pair(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const auto& v = raw(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      fail(where(key) + " must be a two-element numeric array");
    return std::array<double, 2>{v[0].get<double>(), v[1].get<double>()};
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "top level" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) fail("unknown key '" + where(k) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline bool plain_name(const std::string& s) {
  if (s.empty() || s.size() > 64) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
           c == '.';
  });
}

inline void read_domain(Block b, ExperimentConfig& c) {
  const auto kind = b.string("kind");
  try {
    c.domain.kind = domain_kind_from_string(kind);
  } catch (const InvalidParameter&) {
    fail(b.where("kind") + ": unknown domain kind '" + kind + "' (disk, ball, ellipse, perturbed_disk)");
  }
  switch (c.domain.kind) {
    case DomainKind::disk:
    case DomainKind::ball: c.domain.radius = b.number("radius", 1.0); break;
    case DomainKind::ellipse:
      c.domain.semi_a = b.number("semi_a");
      c.domain.semi_b = b.number("semi_b");
      break;
    case DomainKind::perturbed_disk:
      c.domain.radius = b.number("radius", 1.0);
      c.domain.amplitude = b.number("amplitude");
      c.domain.frequency = b.small_int("frequency");
      break;
  }
  if (b.has("x0")) {
    const auto& v = b.raw("x0");
    const std::size_t dim = c.domain.kind == DomainKind::ball ? 3 : 2;
    if (!v.is_array() || v.size() != dim || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); }))
      fail(b.where("x0") + " must be an array of " + std::to_string(dim) + " numbers");
    Point p{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < dim; ++i) p[i] = v[i].get<double>();
    c.domain.x0 = p;
  }
  b.finish();
}

inline void read_solver(Block b, ExperimentConfig& c) {
  c.method = b.string("method", "analytic");
  c.K = b.small_int("K");
  if (c.K < 1) fail(b.where("K") + " must be >= 1");
  const bool planar = c.domain.kind != DomainKind::ball;
  if (c.method == "analytic") {
    if (c.domain.kind != DomainKind::disk && c.domain.kind != DomainKind::ball)
      fail("solver.method 'analytic' is available for disk and ball only; use 'collocation'");
  } else if (c.method == "collocation") {
    if (!planar) fail("solver.method 'collocation' supports planar domains only");
    if (c.K > mps_mode_ceiling)
      fail("solver.K = " + std::to_string(c.K) + " exceeds the collocation ceiling of " +
           std::to_string(mps_mode_ceiling) + " modes");
    auto& m = c.mps;
    m.basis_order = b.small_int("basis_order", 0);
    m.n_boundary = b.small_int("n_boundary", 0);
    m.n_interior = b.small_int("n_interior", 0);
    m.scan_step = b.number("scan_step", m.scan_step);
    m.tension_tol = b.number("tension_tol", m.tension_tol);
    m.refine_tol = b.number("refine_tol", m.refine_tol);
    m.use_symmetry = b.boolean("use_symmetry", m.use_symmetry);
    m.order_check = b.boolean("order_check", m.order_check);
    m.cluster_tol = b.number("cluster_tol", m.cluster_tol);
    m.certificate_nodes = b.small_int("certificate_nodes", m.certificate_nodes);
    const auto seed = b.integer("seed", static_cast<long long>(c.seed));
    if (seed < 0) fail(b.where("seed") + " must be >= 0");
    m.seed = static_cast<std::uint64_t>(seed);
    if (m.basis_order < 0 || (m.basis_order > 0 && m.basis_order < 4)) fail("solver.basis_order must be 0 (auto) or >= 4");
    if (!(m.scan_step > 0.0)) fail("solver.scan_step must be > 0");
    if (!(m.tension_tol > 0.0) || !(m.refine_tol > 0.0) || !(m.cluster_tol >= 0.0))
      fail("solver tolerances must be positive");
    if (m.certificate_nodes < 64) fail("solver.certificate_nodes must be >= 64");
  } else {
    fail("solver.method must be 'analytic' or 'collocation'");
  }
  b.finish();
}

inline void read_grid(Block b, ExperimentConfig& c) {
  if (c.domain.kind == DomainKind::ball) {
    c.n_lat = b.small_int("n_lat", c.n_lat);
    c.n_lon = b.small_int("n_lon", c.n_lon);
  } else {
    c.n_nodes = b.small_int("n_nodes", c.n_nodes);
  }
  b.finish();
}

inline WeightSpec read_weight(Block b, bool ball) {
  WeightSpec w;
  w.name = b.string("name");
  if (!plain_name(w.name)) fail(b.where("name") + " must be 1-64 characters from [A-Za-z0-9_.-]");
  w.type = b.string("type");
  w.level = b.small_int("level", 1);
  if (w.level < 0 || w.level > 2) fail(b.where("level") + " must be 0, 1 or 2");
  if (w.type == "trig") {
    if (ball) fail(b.where("type") + ": trig weights need a planar domain");
    w.p = b.small_int("p");
    const auto parity = b.string("parity", "cos");
    if (parity != "cos" && parity != "sin") fail(b.where("parity") + " must be 'cos' or 'sin'");
    w.parity = parity == "cos" ? Parity::cos : Parity::sin;
    if (w.p < 0) fail(b.where("p") + " must be >= 0");
  } else if (w.type == "legendre") {
    if (!ball) fail(b.where("type") + ": legendre weights need the ball");
    w.n = b.small_int("n");
    if (w.n < 0) fail(b.where("n") + " must be >= 0");
  } else if (w.type == "constant") {
    w.value = b.number("value", 1.0);
  } else if (w.type != "curvature_deviation") {
    fail(b.where("type") + " must be trig, legendre, curvature_deviation or constant");
  }
  b.finish();
  return w;
}

inline ScheduleSpec read_schedule(Block b) {
  ScheduleSpec s;
  s.alpha = b.number("alpha");
  s.n_min = b.small_int("n_min", 2);
  s.k_min = b.small_int("k_min");
  s.k_max = b.small_int("k_max");
  s.k_step = b.small_int("k_step", 1);
  if (!(s.alpha >= 0.0 && s.alpha < 1.0))
    fail(b.where("alpha") + " = " + io::format_double(s.alpha) +
         " violates 0 <= alpha < 1 (packet lengths must satisfy N_k = o(k))");
  if (s.n_min < 2) fail(b.where("n_min") + " must be >= 2");
  if (s.k_min < 1 || s.k_max < s.k_min) fail(b.where() + " needs 1 <= k_min <= k_max");
  if (s.k_step < 1) fail(b.where("k_step") + " must be >= 1");
  b.finish();
  return s;
}

inline void read_checks(Block b, CheckSpec& c) {
  c.rellich_tol = b.optional_number("rellich_tol");
  c.sandwich = b.boolean("sandwich", true);
  c.ratio_band = b.optional_pair("ratio_band");
  c.ratio_slope = b.optional_pair("ratio_slope");
  c.nratio_trend_max = b.optional_number("nratio_trend_max");
  c.envelope_constant_max = b.optional_number("envelope_constant_max");
  c.whole_eigenspace_zero = b.optional_number("whole_eigenspace_zero");
  c.cancellation_trend_max = b.optional_number("cancellation_trend_max");
  c.weyl_counting_exponent_tol = b.optional_number("weyl_counting_exponent_tol");
  c.weyl_counting_constant_rel = b.optional_number("weyl_counting_constant_rel");
  c.weyl_boundary_exponent_tol = b.optional_number("weyl_boundary_exponent_tol");
  c.weyl_pairing_zero = b.boolean("weyl_pairing_zero", false);
  if (c.ratio_band && !((*c.ratio_band)[0] <= (*c.ratio_band)[1])) fail("checks.ratio_band needs lo <= hi");
  b.finish();
}

}  // namespace detail

/// Validates a config document. Everything that can be decided without
/// computing eigenvalues is checked here and reported as ConfigError.
inline ExperimentConfig load_config(const json& doc) {
  using detail::Block;
  using detail::fail;
  ExperimentConfig c;
  c.effective = doc;
  Block top(doc, "");
  c.name = top.string("name", c.name);
  if (!detail::plain_name(c.name)) fail("name must be 1-64 characters from [A-Za-z0-9_.-]");
  const auto seed = top.integer("seed", 1);
  if (seed < 0) fail("seed must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  c.mps.seed = c.seed;
  detail::read_domain(Block(top.raw("domain"), "domain"), c);
  detail::read_solver(Block(top.raw("solver"), "solver"), c);
  if (top.has("grid")) detail::read_grid(Block(top.raw("grid"), "grid"), c);
  const bool ball = c.domain.kind == DomainKind::ball;

  if (top.has("weights")) {
    const auto& ws = top.raw("weights");
    if (!ws.is_array()) fail("weights must be an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < ws.size(); ++i) {
      c.weights.push_back(detail::read_weight(Block(ws[i], "weights[" + std::to_string(i) + "]"), ball));
      if (!names.insert(c.weights.back().name).second) fail("duplicate weight name '" + c.weights.back().name + "'");
    }
  }

  if (top.has("packets")) {
    Block pb(top.raw("packets"), "packets");
    const auto& ss = pb.raw("schedules");
    if (!ss.is_array()) fail("packets.schedules must be an array");
    for (std::size_t i = 0; i < ss.size(); ++i) {
      auto s = detail::read_schedule(Block(ss[i], "packets.schedules[" + std::to_string(i) + "]"));
      const int last = s.schedule().k_list.back();
      const int reach = last + s.schedule().length(last) - 1;
      if (reach > c.K)
        fail("packets.schedules[" + std::to_string(i) + "]: packet at k = " + std::to_string(last) + " reaches mode " +
             std::to_string(reach) + " but solver.K = " + std::to_string(c.K));
      c.schedules.push_back(s);
    }
    pb.finish();
  }

  if (top.has("weyl")) {
    Block wb(top.raw("weyl"), "weyl");
    c.weyl_lo = wb.optional_number("lambda_lo");
    c.weyl_hi = wb.optional_number("lambda_hi");
    if (c.weyl_lo.has_value() != c.weyl_hi.has_value()) fail("weyl needs both lambda_lo and lambda_hi");
    if (c.weyl_lo && !(*c.weyl_lo > 0.0 && *c.weyl_hi > *c.weyl_lo)) fail("weyl window needs 0 < lambda_lo < lambda_hi");
    wb.finish();
  }

  if (top.has("checks")) detail::read_checks(Block(top.raw("checks"), "checks"), c.checks);

  if (top.has("outputs")) {
    Block ob(top.raw("outputs"), "outputs");
    c.directory = ob.string("directory", c.directory.string());
    if (c.directory.empty()) fail("outputs.directory must not be empty");
    if (ob.has("formats")) {
      const auto& f = ob.raw("formats");
      if (!f.is_array() || f.empty()) fail("outputs.formats must be a non-empty array");
      c.write_csv = c.write_json = false;
      for (const auto& e : f) {
        if (e == "csv") c.write_csv = true;
        else if (e == "json") c.write_json = true;
        else fail("outputs.formats entries must be 'csv' or 'json'");
      }
    }
    ob.finish();
  }
  top.finish();
  return c;
}

/// Applies one `path=value` override. The path is dotted; numeric segments
/// index arrays. The value is parsed as JSON, falling back to a plain string.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) detail::fail("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string seg = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (seg.empty()) detail::fail("override path '" + path + "' has an empty segment");
    json* next = nullptr;
    if (node->is_array()) {
      std::size_t idx = 0;
      auto r = std::from_chars(seg.data(), seg.data() + seg.size(), idx);
      if (r.ec != std::errc() || r.ptr != seg.data() + seg.size() || idx >= node->size())
        detail::fail("override path '" + path + "': '" + seg + "' is not a valid index");
      next = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) detail::fail("override path '" + path + "' descends into a scalar");
      next = &(*node)[seg];
    }
    if (dot == std::string::npos) {
      *next = value;
      return;
    }
    node = next;
    start = dot + 1;
  }
}

inline json read_config_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) detail::fail("cannot open " + p.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) detail::fail(p.string() + " is not valid JSON");
  return doc;
}

// Run results.

struct Check {
  std::string name;
  bool passed = true;
  double value = 0.0;
  double limit = 0.0;
  std::string detail;
};

struct StageResult {
  Stage stage = Stage::spectrum;
  std::vector<Check> checks;
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
};

inline json to_json(const Check& c) {
  return {{"name", c.name}, {"passed", c.passed}, {"value", io::number(c.value)},
          {"limit", io::number(c.limit)}, {"detail", c.detail}};
}

inline json to_json(const RateFit& f) {
  return {{"slope", io::number(f.slope)},          {"intercept", io::number(f.intercept)},
          {"r_squared", io::number(f.r_squared)},  {"slope_stderr", io::number(f.slope_stderr)},
          {"n_points", f.n_points}};
}

inline std::string domain_label(const DomainSpec& d) {
  using io::format_double;
  switch (d.kind) {
    case DomainKind::disk: return "disk(R=" + format_double(d.radius) + ")";
    case DomainKind::ball: return "ball(R=" + format_double(d.radius) + ")";
    case DomainKind::ellipse: return "ellipse(a=" + format_double(d.semi_a) + ";b=" + format_double(d.semi_b) + ")";
    case DomainKind::perturbed_disk:
      return "perturbed_disk(R=" + format_double(d.radius) + ";eps=" + format_double(d.amplitude) +
             ";p=" + std::to_string(d.frequency) + ")";
  }
  return "?";
}

/// Executes stages against one output directory.
class Runner {
 public:
  explicit Runner(ExperimentConfig cfg) : cfg_(std::move(cfg)) { prepare(); }

  const ExperimentConfig& config() const { return cfg_; }
  const fs::path& directory() const { return cfg_.directory; }
  const std::string& config_hash() const { return config_hash_; }

  StageResult run(Stage s) {
    switch (s) {
      case Stage::spectrum: return spectrum();
      case Stage::rellich: return rellich();
      case Stage::packets: return packets();
      case Stage::cancellation: return cancellation();
      case Stage::weyl: return weyl();
      case Stage::report: return report();
    }
    return {};
  }

  /// Hashes of every artifact in the directory except the manifest itself.
  json artifact_hashes() const {
    std::vector<std::string> names;
    if (fs::exists(cfg_.directory))
      for (const auto& e : fs::directory_iterator(cfg_.directory))
        if (e.is_regular_file() && e.path().filename() != "manifest.json") names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    json out = json::object();
    for (const auto& n : names) out[n] = io::hex64(io::fnv1a(io::read_file(cfg_.directory / n)));
    return out;
  }

  void write_json(const std::string& name, const json& j) const { io::write_file(cfg_.directory / name, io::dump_json(j)); }

 private:
  ExperimentConfig cfg_;
  DomainSpec domain_;
  BoundaryGrid grid_;
  std::vector<Weight> weights_;
  std::string config_hash_, spectrum_key_;
  std::optional<SpectralTable> table_;

  // Builds domain, grid and weights so that infeasible parameters surface as
  // ConfigError before any eigenvalue is computed.
  void prepare() {
    // where the artifacts go is not part of the experiment's identity
    json identity = cfg_.effective;
    identity.erase("outputs");
    config_hash_ = io::hex64(io::fnv1a(identity.dump()));
    json key = {{"domain", cfg_.effective.at("domain")},
                {"solver", cfg_.effective.at("solver")},
                {"grid", cfg_.effective.value("grid", json::object())},
                {"weights", cfg_.effective.value("weights", json::array())},
                {"seed", cfg_.seed}};
    spectrum_key_ = io::hex64(io::fnv1a(key.dump()));
    try {
      domain_ = build_domain(cfg_.domain);
      grid_ = domain_.kind == DomainKind::ball ? build_grid(domain_, cfg_.n_lat, cfg_.n_lon)
                                                : build_grid(domain_, cfg_.n_nodes);
      for (const auto& w : cfg_.weights) weights_.push_back(make_config_weight(w));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError("config: " + std::string(e.what()) + " [" + e.code() + "]");
    }
  }

  Weight make_config_weight(const WeightSpec& w) const {
    std::vector<double> raw;
    if (w.type == "trig") raw = trig_samples(grid_, w.p, w.parity);
    else if (w.type == "legendre") raw = legendre_samples(grid_, w.n);
    else if (w.type == "constant") raw.assign(grid_.size(), w.value);
    else raw = curvature_deviation_samples(grid_);
    double sup = 0.0;
    for (double v : raw) sup = std::max(sup, std::abs(v));
    // H - H_bar on a round boundary is rounding noise, not a weight
    const double floor = w.type == "curvature_deviation" ? 1e-10 * std::abs(grid_.H_bar) : 0.0;
    if (!(sup > floor)) throw DegenerateWeight("weight '" + w.name + "' vanishes identically on this boundary");
    if (w.level == 0) return certify_weight(w.name, std::move(raw), grid_);
    return moment_project(w.name, raw, grid_, w.level);
  }

  // Tables are CSV and/or JSON; readers prefer CSV.
  void write_table(const std::string& stem, const io::Table& t) const {
    if (cfg_.write_csv) io::write_file(cfg_.directory / (stem + ".csv"), io::to_csv(t));
    if (cfg_.write_json) {
      json rows = json::array();
      for (const auto& r : t.rows) {
        json row = json::array();
        for (const auto& f : r) {
          if (f == "nan" || f == "inf" || f == "-inf") {
            row.push_back(nullptr);
            continue;
          }
          double v = 0.0;
          long long i = 0;
          auto ri = std::from_chars(f.data(), f.data() + f.size(), i);
          if (ri.ec == std::errc() && ri.ptr == f.data() + f.size()) row.push_back(i);
          else if (auto rd = std::from_chars(f.data(), f.data() + f.size(), v);
                   rd.ec == std::errc() && rd.ptr == f.data() + f.size())
            row.push_back(v);
          else
            row.push_back(f);
        }
        rows.push_back(std::move(row));
      }
      write_json(stem + ".json", {{"columns", t.header}, {"rows", rows}});
    }
  }

  io::Table read_table(const std::string& stem, Stage producer) const {
    const auto csv = cfg_.directory / (stem + ".csv");
    const auto js = cfg_.directory / (stem + ".json");
    if (fs::exists(csv)) return io::parse_csv(io::read_file(csv));
    if (fs::exists(js)) {
      const json j = read_json(stem + ".json", producer);
      io::Table t;
      t.header = j.at("columns").get<std::vector<std::string>>();
      for (const auto& r : j.at("rows")) {
        std::vector<std::string> f;
        for (const auto& v : r) {
          if (v.is_null()) f.push_back("nan");
          else if (v.is_number_integer()) f.push_back(std::to_string(v.get<long long>()));
          else if (v.is_number()) f.push_back(io::format_double(v.get<double>()));
          else f.push_back(v.get<std::string>());
        }
        t.rows.push_back(std::move(f));
      }
      return t;
    }
    throw MissingArtifact(stem + " table not found in " + cfg_.directory.string() + "; run the '" +
                          to_string(producer) + "' stage first");
  }

  json read_json(const std::string& name, Stage producer) const {
    const auto p = cfg_.directory / name;
    if (!fs::exists(p))
      throw MissingArtifact(name + " not found in " + cfg_.directory.string() + "; run the '" + to_string(producer) +
                            "' stage first");
    json j = json::parse(io::read_file(p), nullptr, false);
    if (j.is_discarded()) throw MissingArtifact(name + " is not valid JSON");
    return j;
  }

  /// Per-mode functionals, reloaded from the spectrum stage's artifacts.
  const SpectralTable& table() {
    if (table_) return *table_;
    const json meta = read_json("weights.json", Stage::spectrum);
    if (meta.value("spectrum_key", "") != spectrum_key_)
      throw MissingArtifact("spectrum artifacts in " + cfg_.directory.string() +
                            " were produced by a different domain/solver/grid/weights configuration; rerun 'spectrum'");
    const auto spec = read_table("spectrum", Stage::spectrum);
    const auto fun = read_table("functionals", Stage::spectrum);
    SpectralTable t;
    t.domain = domain_;
    const auto cl = spec.column("lambda"), ce = spec.column("eigenspace");
    for (const auto& r : spec.rows) {
      t.lambda.push_back(io::parse_double(r[cl]));
      t.eigenspace_of.push_back(static_cast<std::size_t>(io::parse_int(r[ce])));
    }
    for (const auto& w : meta.at("weights")) {
      t.weight_names.push_back(w.at("name").get<std::string>());
      t.weight_levels.push_back(w.at("level").get<int>());
      t.weight_sup.push_back(w.at("sup_norm").get<double>());
    }
    const std::size_t K = t.lambda.size(), W = t.weight_names.size();
    t.energy.assign(K, 0.0);
    t.rellich.assign(K, 0.0);
    t.e_w.assign(W, std::vector<double>(K, 0.0));
    t.e_abs.assign(W, std::vector<double>(K, 0.0));
    const auto fw = fun.column("weight"), fk = fun.column("k"), fE = fun.column("E"), fR = fun.column("rellich_residual"),
               fEw = fun.column("E_w"), fEa = fun.column("E_abs_w");
    if (fun.rows.size() != K * std::max<std::size_t>(W, 1)) throw MissingArtifact("functionals table is incomplete");
    for (const auto& r : fun.rows) {
      const auto k = io::parse_int(r[fk]);
      if (k < 1 || static_cast<std::size_t>(k) > K) throw MissingArtifact("functionals table has an out-of-range k");
      const std::size_t i = static_cast<std::size_t>(k - 1);
      t.energy[i] = io::parse_double(r[fE]);
      t.rellich[i] = io::parse_double(r[fR]);
      if (W > 0) {
        const auto w = t.weight_index(r[fw]);
        t.e_w[w][i] = io::parse_double(r[fEw]);
        t.e_abs[w][i] = io::parse_double(r[fEa]);
      }
    }
    table_ = std::move(t);
    return *table_;
  }

  std::vector<std::size_t> zero_mean_weights(const SpectralTable& t) const {
    std::vector<std::size_t> out;
    for (std::size_t w = 0; w < t.weight_names.size(); ++w)
      if (t.weight_levels[w] >= 1) out.push_back(w);
    return out;
  }

  // Stages.

  StageResult spectrum() {
    Spectrum s;
    std::vector<MpsEigenpair> pairs;
    if (cfg_.method == "analytic") {
      s = domain_.kind == DomainKind::disk ? disk_spectrum(domain_.radius, cfg_.K) : ball_spectrum(domain_.radius, cfg_.K);
      s.domain = domain_;
    } else {
      pairs = solve_first_k(domain_, cfg_.K, cfg_.mps);
      s = to_spectrum(domain_, pairs, cfg_.mps.cluster_tol);
    }
    const auto t = tabulate(s, grid_, weights_);
    const auto space = s.eigenspace_of();

    io::Table spec;
    if (cfg_.method == "analytic" && domain_.kind == DomainKind::disk)
      spec.header = {"k", "lambda", "eigenspace", "m", "n", "parity", "trace_amplitude"};
    else if (cfg_.method == "analytic")
      spec.header = {"k", "lambda", "eigenspace", "l", "n", "q", "trace_amplitude"};
    else
      spec.header = {"k",       "lambda",           "eigenspace",  "symmetry_class", "trace_rms",
                     "tension", "rellich_residual", "cluster_size"};
    const double measure = grid_.measure();
    for (std::size_t i = 0; i < s.K(); ++i) {
      const auto& m = s.modes[i];
      io::Row row;
      row << m.k << m.lambda << space[i];
      if (const auto* f = std::get_if<DiskFamily>(&m.family))
        row << f->m << f->n << (f->parity == Parity::cos ? "cos" : "sin") << m.trace_coeff;
      else if (const auto* f = std::get_if<BallFamily>(&m.family))
        row << f->l << f->n << f->q << m.trace_coeff;
      else {
        const auto& p = pairs[i];
        row << p.symmetry_class << std::sqrt(t.energy[i] / measure) << p.tension << p.rellich_residual
            << p.cluster_size;
      }
      spec.rows.push_back(row.take());
    }
    write_table("spectrum", spec);

    io::Table fun;
    fun.header = {"weight", "k", "lambda", "E", "E_w", "E_abs_w", "C_w", "rellich_residual"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (weights_.empty()) {
      for (std::size_t i = 0; i < t.K(); ++i) {
        io::Row row;
        row << "-" << static_cast<int>(i + 1) << t.lambda[i] << t.energy[i] << nan << nan << nan << t.rellich[i];
        fun.rows.push_back(row.take());
      }
    }
    for (std::size_t w = 0; w < weights_.size(); ++w) {
      for (std::size_t i = 0; i < t.K(); ++i) {
        const auto r = t.report(static_cast<int>(i + 1), w);
        io::Row row;
        row << weights_[w].name << r.k << r.lambda << r.E << r.E_w << r.E_abs_w << r.C_w << r.rellich_residual;
        fun.rows.push_back(row.take());
      }
    }
    write_table("functionals", fun);

    const auto [gm, gM] = g_bounds(grid_);
    json meta = {{"spectrum_key", spectrum_key_},
                 {"domain", domain_label(domain_)},
                 {"dimension", domain_.dimension},
                 {"K", static_cast<int>(s.K())},
                 {"eigenspaces", static_cast<int>(s.eigenspaces.size())},
                 {"grid_nodes", static_cast<int>(grid_.size())},
                 {"boundary_measure", grid_.measure()},
                 {"g_min", gm},
                 {"g_max", gM},
                 {"H_bar", grid_.H_bar},
                 {"weights", json::array()}};
    for (std::size_t w = 0; w < weights_.size(); ++w) {
      const auto& W = weights_[w];
      meta["weights"].push_back({{"name", W.name},
                                 {"type", cfg_.weights[w].type},
                                 {"level", W.level},
                                 {"target_level", cfg_.weights[w].level},
                                 {"mu0", W.mu0},
                                 {"mu1", W.mu1},
                                 {"sup_norm", W.sup_norm}});
    }
    write_json("weights.json", meta);
    table_ = t;
    return {Stage::spectrum, {}};
  }

  StageResult rellich() {
    const auto& t = table();
    const json meta = read_json("weights.json", Stage::spectrum);
    const double gm = meta.at("g_min").get<double>(), gM = meta.at("g_max").get<double>();
    io::Table out;
    out.header = {"k", "lambda", "E", "E_lower", "E_upper", "in_sandwich", "rellich_residual"};
    double worst = 0.0;
    int outside = 0;
    // E_k carries the same relative error the Rellich residual measures; on
    // the disk m = M and the bounds coincide with E_k
    const double slack = cfg_.rellich_tol();
    for (std::size_t i = 0; i < t.K(); ++i) {
      const double lo = 2.0 * t.lambda[i] / gM, hi = 2.0 * t.lambda[i] / gm;
      const bool in = t.energy[i] >= lo * (1.0 - slack) && t.energy[i] <= hi * (1.0 + slack);
      outside += !in;
      worst = std::max(worst, t.rellich[i]);
      io::Row row;
      row << static_cast<int>(i + 1) << t.lambda[i] << t.energy[i] << lo << hi << in << t.rellich[i];
      out.rows.push_back(row.take());
    }
    write_table("rellich", out);
    StageResult r{Stage::rellich, {}};
    const double tol = cfg_.rellich_tol();
    r.checks.push_back({"rellich_residual_max", worst <= tol, worst, tol, "max relative Rellich residual"});
    if (cfg_.checks.sandwich)
      r.checks.push_back({"energy_sandwich", outside == 0, static_cast<double>(outside), 0.0,
                          "modes with E_k outside [2 lambda/M, 2 lambda/m] beyond the Rellich tolerance"});
    return r;
  }

  StageResult packets() {
    const auto& t = table();
    if (cfg_.schedules.empty()) throw ConfigError("config: the packets stage needs packets.schedules");
    const auto zm = zero_mean_weights(t);
    const int d = t.domain.dimension;
    io::Table out;
    out.header = {"schedule", "alpha", "n_min", "k", "N_k", "lambda_k", "ratio", "N_k_ratio"};
    for (auto w : zm) out.header.push_back("corr_avg_" + t.weight_names[w]);
    for (auto w : zm) out.header.push_back("envelope_" + t.weight_names[w]);
    json fits = json::array();
    StageResult r{Stage::packets, {}};
    for (std::size_t si = 0; si < cfg_.schedules.size(); ++si) {
      const auto& spec = cfg_.schedules[si];
      const auto sched = spec.schedule();
      std::vector<double> ks, ns, ratios, nratios;
      for (int k : sched.k_list) {
        const auto p = packet_stats(t, k, sched);
        io::Row row;
        row << static_cast<int>(si) << spec.alpha << spec.n_min << k << p.n_k << p.lambda_k << p.ratio
            << p.n_k * p.ratio;
        for (auto w : zm) row << p.corr_avg[w];
        for (auto w : zm) row << cancellation_rate_bound(k, p.n_k, d, t.weight_levels[w]);
        out.rows.push_back(row.take());
        ks.push_back(k);
        ns.push_back(p.n_k);
        ratios.push_back(p.ratio);
        nratios.push_back(p.n_k * p.ratio);
      }
      json f = {{"schedule", static_cast<int>(si)}, {"alpha", spec.alpha},      {"n_min", spec.n_min},
                {"k_min", spec.k_min},              {"k_max", spec.k_max},      {"k_step", spec.k_step},
                {"n_points", static_cast<int>(ks.size())},
                {"N_k_ratio_min", *std::min_element(nratios.begin(), nratios.end())},
                {"N_k_ratio_max", *std::max_element(nratios.begin(), nratios.end())},
                {"ratio_vs_N_k", nullptr},
                {"N_k_ratio_vs_k", nullptr}};
      const bool n_varies = *std::max_element(ns.begin(), ns.end()) > *std::min_element(ns.begin(), ns.end());
      std::optional<RateFit> slope_fit, trend_fit;
      if (ks.size() >= 5 && n_varies) {
        slope_fit = rate_fit(ns, ratios);
        f["ratio_vs_N_k"] = to_json(*slope_fit);
      }
      if (ks.size() >= 5) {
        trend_fit = rate_fit(ks, nratios);
        f["N_k_ratio_vs_k"] = to_json(*trend_fit);
      }
      fits.push_back(f);

      const std::string tag = "schedule[" + std::to_string(si) + "] ";
      if (const auto& band = cfg_.checks.ratio_band) {
        const double lo = f["N_k_ratio_min"].get<double>(), hi = f["N_k_ratio_max"].get<double>();
        // report the violated side, or the upper side when both hold
        const bool low_side = lo < (*band)[0];
        r.checks.push_back({tag + "ratio_band", !low_side && hi <= (*band)[1], low_side ? lo : hi,
                            low_side ? (*band)[0] : (*band)[1],
                            "N_k * ratio range [" + io::format_double(lo) + ", " + io::format_double(hi) + "]"});
      }
      if (const auto& sl = cfg_.checks.ratio_slope) {
        if (slope_fit) {
          const double dev = std::abs(slope_fit->slope - (*sl)[0]);
          r.checks.push_back({tag + "ratio_slope", dev <= (*sl)[1], slope_fit->slope, (*sl)[0],
                              "log ratio vs log N_k, tolerance " + io::format_double((*sl)[1])});
        } else {
          r.checks.push_back({tag + "ratio_slope", true, std::numeric_limits<double>::quiet_NaN(), (*sl)[0],
                              "not applicable: N_k is constant on this schedule"});
        }
      }
      if (const auto& m = cfg_.checks.nratio_trend_max; m && trend_fit)
        r.checks.push_back({tag + "nratio_trend", std::abs(trend_fit->slope) <= *m, trend_fit->slope, *m,
                            "|slope| of log(N_k ratio) vs log k"});
    }
    write_table("packets", out);
    write_json("packets_fit.json", {{"domain", domain_label(domain_)}, {"schedules", fits}});
    return r;
  }

  StageResult cancellation() {
    const auto& t = table();
    if (cfg_.schedules.empty()) throw ConfigError("config: the cancellation stage needs packets.schedules");
    const auto zm = zero_mean_weights(t);
    const int d = t.domain.dimension;
    io::Table out;
    out.header = {"schedule", "alpha", "weight", "level", "k", "N_k", "corr_avg", "abs_corr_avg_N_k",
                  "threshold_exponent", "envelope", "whole_eigenspaces"};
    json fits = json::array();
    StageResult r{Stage::cancellation, {}};
    for (std::size_t si = 0; si < cfg_.schedules.size(); ++si) {
      const auto& spec = cfg_.schedules[si];
      const auto sched = spec.schedule();
      for (auto w : zm) {
        const int level = t.weight_levels[w];
        const double theta = threshold_exponent(d, level);
        std::vector<double> ks, scaled;
        double constant = 0.0, whole_max = 0.0;
        int whole = 0, zeros = 0;
        for (int k : sched.k_list) {
          const int n = sched.length(k);
          const double c = packet_correlation_average(t, k, n, w);
          const bool we = packet_is_whole_eigenspaces(t, k, n);
          io::Row row;
          row << static_cast<int>(si) << spec.alpha << t.weight_names[w] << level << k << n << c << std::abs(c) * n
              << theta << cancellation_rate_bound(k, n, d, level) << we;
          out.rows.push_back(row.take());
          constant = std::max(constant, std::abs(c) * n);
          if (we) {
            ++whole;
            whole_max = std::max(whole_max, std::abs(c));
          }
          if (std::abs(c) <= exact_zero) ++zeros;
          else {
            ks.push_back(k);
            scaled.push_back(std::abs(c) * n);
          }
        }
        json f = {{"schedule", static_cast<int>(si)},
                  {"alpha", spec.alpha},
                  {"weight", t.weight_names[w]},
                  {"level", level},
                  {"threshold_exponent", theta},
                  {"above_threshold", spec.alpha > theta},
                  {"envelope_constant", constant},
                  {"whole_eigenspace_packets", whole},
                  {"whole_eigenspace_max_abs", whole_max},
                  {"exact_zero_points", zeros},
                  {"trend", nullptr}};
        std::optional<RateFit> trend;
        if (ks.size() >= 5) {
          trend = rate_fit(ks, scaled);
          f["trend"] = to_json(*trend);
        }
        fits.push_back(f);

        const std::string tag = "schedule[" + std::to_string(si) + "]/" + t.weight_names[w] + " ";
        if (const auto& m = cfg_.checks.envelope_constant_max)
          r.checks.push_back({tag + "envelope_constant", constant <= *m, constant, *m, "max |corr_avg| N_k"});
        if (const auto& z = cfg_.checks.whole_eigenspace_zero)
          r.checks.push_back({tag + "whole_eigenspace_zero", whole_max <= *z, whole_max, *z,
                              std::to_string(whole) + " whole-eigenspace packets"});
        if (const auto& m = cfg_.checks.cancellation_trend_max) {
          if (trend)
            r.checks.push_back({tag + "cancellation_trend", std::abs(trend->slope) <= *m, trend->slope, *m,
                                "|slope| of log(|corr_avg| N_k) vs log k over nonzero points"});
          else
            r.checks.push_back({tag + "cancellation_trend", true, std::numeric_limits<double>::quiet_NaN(), *m,
                                "fewer than 5 nonzero points; no trend to fit"});
        }
      }
    }
    write_table("cancellation", out);
    write_json("cancellation_fit.json", {{"domain", domain_label(domain_)}, {"fits", fits}});
    return r;
  }

  StageResult weyl() {
    const auto& t = table();
    const int d = t.domain.dimension;
    double lo = 0.0, hi = 0.0;
    if (cfg_.weyl_lo) {
      lo = *cfg_.weyl_lo;
      hi = *cfg_.weyl_hi;
    } else {
      std::tie(lo, hi) = default_fit_window(t);
    }
    const auto counting = weyl_fit(t, WeylMode::counting, lo, hi);
    const auto boundary = weyl_fit(t, WeylMode::boundary, lo, hi);
    const double rel = std::abs(counting.constant - counting.reference) / counting.reference;
    json out = {{"domain", domain_label(domain_)},
                {"window", {lo, hi}},
                {"counting",
                 {{"fit", to_json(counting.fit)},
                  {"expected_exponent", 0.5 * d},
                  {"constant", counting.constant},
                  {"constant_stderr", counting.two_term.se_a},
                  {"second_coefficient", counting.two_term.b},
                  {"reference", counting.reference},
                  {"constant_relative_error", rel}}},
                {"boundary",
                 {{"fit", to_json(boundary.fit)},
                  {"expected_exponent", 1.0 + 0.5 * d},
                  {"constant", boundary.constant},
                  {"constant_stderr", boundary.two_term.se_a},
                  {"second_coefficient", boundary.two_term.b}}},
                {"pairing", json::array()}};
    StageResult r{Stage::weyl, {}};
    if (const auto& tol = cfg_.checks.weyl_counting_exponent_tol)
      r.checks.push_back({"weyl_counting_exponent", std::abs(counting.fit.slope - 0.5 * d) <= *tol, counting.fit.slope,
                          0.5 * d, "tolerance " + io::format_double(*tol)});
    if (const auto& tol = cfg_.checks.weyl_counting_constant_rel)
      r.checks.push_back({"weyl_counting_constant", rel <= *tol, counting.constant, counting.reference,
                          "relative tolerance " + io::format_double(*tol)});
    if (const auto& tol = cfg_.checks.weyl_boundary_exponent_tol)
      r.checks.push_back({"weyl_boundary_exponent", std::abs(boundary.fit.slope - (1.0 + 0.5 * d)) <= *tol,
                          boundary.fit.slope, 1.0 + 0.5 * d, "tolerance " + io::format_double(*tol)});
    for (auto w : zero_mean_weights(t)) {
      const auto p = weyl_fit(t, WeylMode::pairing, lo, hi, w);
      out["pairing"].push_back({{"weight", t.weight_names[w]},
                                {"level", t.weight_levels[w]},
                                {"exponents", {p.two_term.p, p.two_term.q}},
                                {"leading_coefficient", p.two_term.a},
                                {"leading_stderr", p.two_term.se_a},
                                {"second_coefficient", p.two_term.b},
                                {"second_stderr", p.two_term.se_b},
                                {"leading_consistent_with_zero", p.leading_consistent_with_zero}});
      if (cfg_.checks.weyl_pairing_zero)
        r.checks.push_back({"weyl_pairing_zero/" + t.weight_names[w], p.leading_consistent_with_zero, p.two_term.a,
                            3.0 * p.two_term.se_a, "leading coefficient within 3 standard errors, or below 1e-9 S at the window top"});
    }
    write_json("weyl.json", out);
    return r;
  }

  StageResult report() {
    const json pf = read_json("packets_fit.json", Stage::packets);
    const json cf = read_json("cancellation_fit.json", Stage::cancellation);
    const json wf = read_json("weyl.json", Stage::weyl);
    const std::string label = domain_label(domain_);
    const int d = domain_.dimension;
    using io::format_double;
    auto num = [](const json& v) { return v.is_number() ? format_double(v.get<double>()) : std::string("-"); };

    std::vector<std::vector<std::string>> rows;
    json jrows = json::array();
    for (const auto& s : pf.at("schedules")) {
      const int si = s.at("schedule").get<int>();
      const json& rs = s.at("ratio_vs_N_k");
      const json ratio_slope = rs.is_null() ? json(nullptr) : rs.at("slope");
      bool any = false;
      for (const auto& c : cf.at("fits")) {
        if (c.at("schedule").get<int>() != si) continue;
        any = true;
        const json trend = c.at("trend").is_null() ? json(nullptr) : c.at("trend").at("slope");
        json row = {{"domain", label},
                    {"weight", c.at("weight")},
                    {"level", c.at("level")},
                    {"alpha", s.at("alpha")},
                    {"n_min", s.at("n_min")},
                    {"threshold_exponent", threshold_exponent(d, c.at("level").get<int>())},
                    {"above_threshold", c.at("above_threshold")},
                    {"ratio_slope", ratio_slope},
                    {"N_k_ratio_min", s.at("N_k_ratio_min")},
                    {"N_k_ratio_max", s.at("N_k_ratio_max")},
                    {"cancellation_slope", trend},
                    {"envelope_constant", c.at("envelope_constant")}};
        jrows.push_back(row);
      }
      if (!any)
        jrows.push_back({{"domain", label},
                         {"weight", nullptr},
                         {"level", nullptr},
                         {"alpha", s.at("alpha")},
                         {"n_min", s.at("n_min")},
                         {"threshold_exponent", nullptr},
                         {"above_threshold", nullptr},
                         {"ratio_slope", ratio_slope},
                         {"N_k_ratio_min", s.at("N_k_ratio_min")},
                         {"N_k_ratio_max", s.at("N_k_ratio_max")},
                         {"cancellation_slope", nullptr},
                         {"envelope_constant", nullptr}});
    }
    rows.push_back({"domain", "weight", "level", "alpha", "N_min", "theta_ref", "regime", "ratio_slope",
                    "N_k_ratio_min", "N_k_ratio_max", "cancel_slope", "envelope_C"});
    for (const auto& r : jrows) {
      rows.push_back({r["domain"].get<std::string>(),
                      r["weight"].is_null() ? "-" : r["weight"].get<std::string>(),
                      r["level"].is_null() ? "-" : std::to_string(r["level"].get<int>()),
                      num(r["alpha"]),
                      std::to_string(r["n_min"].get<int>()),
                      num(r["threshold_exponent"]),
                      r["above_threshold"].is_null() ? "-" : (r["above_threshold"].get<bool>() ? "above" : "at/below"),
                      num(r["ratio_slope"]),
                      num(r["N_k_ratio_min"]),
                      num(r["N_k_ratio_max"]),
                      num(r["cancellation_slope"]),
                      num(r["envelope_constant"])});
    }

    std::string text = "speclab report: " + cfg_.name + "\n\nPackets (ratio slope reference -1; theta_ref = threshold exponent)\n\n";
    text += format_rows(rows);
    std::vector<std::vector<std::string>> wrows{{"quantity", "measured_exponent", "expected_exponent", "constant", "reference"}};
    const auto& c = wf.at("counting");
    wrows.push_back({"N(Lambda)", num(c.at("fit").at("slope")), num(c.at("expected_exponent")), num(c.at("constant")),
                     num(c.at("reference"))});
    const auto& b = wf.at("boundary");
    wrows.push_back({"S(Lambda)", num(b.at("fit").at("slope")), num(b.at("expected_exponent")), num(b.at("constant")), "-"});
    for (const auto& p : wf.at("pairing"))
      wrows.push_back({"Q(Lambda;" + p.at("weight").get<std::string>() + ")", "-", num(p.at("exponents")[0]),
                       num(p.at("leading_coefficient")),
                       p.at("leading_consistent_with_zero").get<bool>() ? "0 (consistent)" : "0 (inconsistent)"});
    text += "\nWeyl fits on [" + num(wf.at("window")[0]) + ", " + num(wf.at("window")[1]) + "]\n\n";
    text += format_rows(wrows);
    io::write_file(cfg_.directory / "report.txt", text);
    write_json("report.json", {{"name", cfg_.name}, {"packets", jrows}, {"weyl", wf}});
    return {Stage::report, {}};
  }

  static std::string format_rows(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows)
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (width.size() <= i) width.push_back(0);
        width[i] = std::max(width[i], r[i].size());
      }
    std::string out;
    for (const auto& r : rows) {
      std::string line;
      for (std::size_t i = 0; i < r.size(); ++i) {
        line += r[i];
        if (i + 1 < r.size()) line += std::string(width[i] - r[i].size() + 2, ' ');
      }
      out += line + "\n";
    }
    return out;
  }
};

// Exit codes.
inline constexpr int exit_pass = 0;
inline constexpr int exit_check_failure = 1;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_computation_error = 3;

inline int exit_code_for(const Error& e) {
  return dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const MissingArtifact*>(&e) ? exit_config_error
                                                                                          : exit_computation_error;
}

inline json error_record(const std::string& code, const std::string& message, const std::string& stage, int exit) {
  return {{"error", code}, {"message", message}, {"stage", stage}, {"exit_code", exit}};
}

inline json library_versions() {
  return {{"speclab", version},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                        std::to_string(BOOST_VERSION % 100)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

/// Runs `stages` in order, writing summary, manifest and (on failure) an
/// error record. Progress lines go to `log`. Returns the process exit code.
inline int execute(const json& doc, const std::vector<Stage>& stages, std::ostream& log, std::ostream& err) {
  std::optional<Runner> runner;
  std::string current = "config";
  std::vector<StageResult> results;
  auto finish = [&](int code, const json* error) {
    if (!runner) return code;
    json summary = {{"name", runner->config().name},
                    {"config_hash", runner->config_hash()},
                    {"stages", json::array()},
                    {"checks", json::array()},
                    {"passed", code == exit_pass},
                    {"exit_code", code}};
    for (const auto& r : results) summary["stages"].push_back(to_string(r.stage));
    for (const auto& r : results)
      for (const auto& c : r.checks) summary["checks"].push_back(to_json(c));
    if (error) summary["error"] = *error;
    runner->write_json("summary.json", summary);
    const auto& cfg = runner->config();
    json manifest = {{"tool", "speclab"},
                     {"config_hash", runner->config_hash()},
                     {"config", cfg.effective},
                     {"seeds", {{"seed", cfg.seed}, {"solver_seed", cfg.mps.seed}}},
                     {"versions", library_versions()},
                     {"stages", summary["stages"]},
                     {"artifacts", runner->artifact_hashes()}};
    runner->write_json("manifest.json", manifest);
    return code;
  };
  try {
    runner.emplace(load_config(doc));
    fs::create_directories(runner->directory());
    fs::remove(runner->directory() / "error.json");
    for (Stage s : stages) {
      current = to_string(s);
      log << "[" << current << "]" << std::endl;
      results.push_back(runner->run(s));
      for (const auto& c : results.back().checks)
        log << "  " << (c.passed ? "PASS " : "FAIL ") << c.name << "  value=" << io::format_double(c.value)
            << " limit=" << io::format_double(c.limit) << (c.detail.empty() ? "" : "  (" + c.detail + ")") << std::endl;
    }
    const bool ok = std::all_of(results.begin(), results.end(), [](const StageResult& r) { return r.passed(); });
    log << (ok ? "all checks passed" : "check failure") << std::endl;
    return finish(ok ? exit_pass : exit_check_failure, nullptr);
  } catch (const Error& e) {
    const int code = exit_code_for(e);
    const json rec = error_record(e.code(), e.what(), current, code);
    err << io::dump_json(rec);
    if (runner) {
      runner->write_json("error.json", rec);
      finish(code, &rec);
    }
    return code;
  } catch (const std::exception& e) {
    const json rec = error_record("InternalError", e.what(), current, exit_computation_error);
    err << io::dump_json(rec);
    if (runner) {
      runner->write_json("error.json", rec);
      finish(exit_computation_error, &rec);
    }
    return exit_computation_error;
  }
}

}  // namespace speclab::harness
