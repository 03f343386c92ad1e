#include <cstdlib>
#include <filesystem>
#include <locale>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "speclab/harness.hpp"

using namespace speclab;
namespace h = speclab::harness;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::path(SPECLAB_TEST_SCRATCH) / name;
  fs::remove_all(p);
  return p;
}

json minimal(const fs::path& dir) {
  json d = json::parse(R"({
    "name": "t",
    "domain": {"kind": "disk", "radius": 1.0},
    "solver": {"method": "analytic", "K": 200},
    "grid": {"n_nodes": 512},
    "weights": [{"name": "cos2", "type": "trig", "p": 2, "level": 1}],
    "packets": {"schedules": [{"alpha": 0.5, "k_min": 20, "k_max": 150}]}
  })");
  d["outputs"] = {{"directory", dir.string()}};
  return d;
}

int run(const json& doc, std::vector<h::Stage> stages = {h::all_stages.begin(), h::all_stages.end()}) {
  std::ostringstream log, err;
  return h::execute(doc, stages, log, err);
}

json read(const fs::path& p) { return json::parse(io::read_file(p)); }

std::string config_error(json doc) {
  try {
    h::load_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = io::read_file(e.path());
  return out;
}

}  // namespace

TEST(Format, SeventeenDigitsRoundTrip) {
  EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(io::format_double(2.0), "2");
  EXPECT_EQ(io::format_double(1e-300), "1e-300");  // %.17g: trailing zeros dropped
  EXPECT_EQ(io::format_double(1.0 / 3.0), "0.33333333333333331");
  EXPECT_EQ(io::format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> ex(-300, 300);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(mant(rng), ex(rng));
    EXPECT_EQ(io::parse_double(io::format_double(v)), v);
  }
}

namespace {
struct CommaDecimal : std::numpunct<char> {
  char do_decimal_point() const override { return ','; }
  char do_thousands_sep() const override { return '.'; }
  std::string do_grouping() const override { return "\3"; }
};
}  // namespace

TEST(Format, IgnoresProcessLocale) {
  // a decimal-comma global locale must not leak into artifacts
  const auto saved = std::locale::global(std::locale(std::locale::classic(), new CommaDecimal));
  std::ostringstream probe;
  probe << 1234.5;
  EXPECT_EQ(probe.str(), "1.234,5");  // the locale is live for streams
  EXPECT_EQ(io::format_double(1234.5), "1234.5");
  EXPECT_EQ(io::dump_json(json{{"x", 0.25}}), "{\n  \"x\": 0.25\n}\n");
  io::Row r;
  r << 1234.5 << 1234567;
  EXPECT_EQ(r.take(), (std::vector<std::string>{"1234.5", "1234567"}));
  std::locale::global(saved);
}

TEST(Csv, RoundTrip) {
  io::Table t;
  t.header = {"k", "x", "name"};
  io::Row r;
  r << 3 << 0.1 << "cos2";
  t.rows.push_back(r.take());
  const auto back = io::parse_csv(io::to_csv(t));
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(io::to_csv(t), "k,x,name\n3,0.10000000000000001,cos2\n");
  EXPECT_THROW(io::parse_csv("a,b\n1\n"), MissingArtifact);
}

TEST(Json, NumbersUseSeventeenDigits) {
  EXPECT_EQ(io::dump_json(json{{"a", 0.1}, {"b", 3}, {"c", nullptr}}),
            "{\n  \"a\": 0.10000000000000001,\n  \"b\": 3,\n  \"c\": null\n}\n");
  EXPECT_TRUE(io::number(std::numeric_limits<double>::infinity()).is_null());
}

TEST(Hash, Fnv1aKnownValues) {
  EXPECT_EQ(io::hex64(io::fnv1a("")), "cbf29ce484222325");
  EXPECT_EQ(io::hex64(io::fnv1a("a")), "af63dc4c8601ec8c");
}

TEST(Override, DottedPathsAndIndices) {
  json doc = minimal("x");
  h::apply_override(doc, "solver.K=400");
  h::apply_override(doc, "packets.schedules.0.alpha=0.3");
  h::apply_override(doc, "domain.kind=ball");
  h::apply_override(doc, "outputs.formats=[\"json\"]");
  EXPECT_EQ(doc["solver"]["K"], 400);
  EXPECT_EQ(doc["packets"]["schedules"][0]["alpha"], 0.3);
  EXPECT_EQ(doc["domain"]["kind"], "ball");
  EXPECT_EQ(doc["outputs"]["formats"][0], "json");
  EXPECT_THROW(h::apply_override(doc, "noequals"), ConfigError);
  EXPECT_THROW(h::apply_override(doc, "packets.schedules.5.alpha=1"), ConfigError);
  EXPECT_THROW(h::apply_override(doc, "solver.K.x=1"), ConfigError);
}

TEST(Config, Validation) {
  const json base = minimal("x");
  EXPECT_EQ(config_error(base), "");
  auto with = [&](const std::string& a) {
    json d = base;
    h::apply_override(d, a);
    return config_error(d);
  };
  EXPECT_NE(with("packets.schedules.0.alpha=1.2").find("N_k = o(k)"), std::string::npos);
  EXPECT_NE(with("bogus=1").find("unknown key 'bogus'"), std::string::npos);
  EXPECT_NE(with("domain.semi_a=2").find("unknown key 'domain.semi_a'"), std::string::npos);
  EXPECT_NE(with("solver.K=100").find("reaches mode"), std::string::npos);
  EXPECT_NE(with("solver.method=spectral").find("solver.method"), std::string::npos);
  EXPECT_NE(with("solver.K=2.5").find("integer"), std::string::npos);
  EXPECT_NE(with("weights.0.level=3").find("level"), std::string::npos);
  EXPECT_NE(with("weights.0.type=legendre").find("ball"), std::string::npos);
  EXPECT_NE(with("outputs.formats=[\"xml\"]").find("formats"), std::string::npos);

  json ellipse = base;
  ellipse["domain"] = {{"kind", "ellipse"}, {"semi_a", 1.0}, {"semi_b", 0.8}};
  EXPECT_NE(config_error(ellipse).find("analytic"), std::string::npos);
  ellipse["solver"] = {{"method", "collocation"}, {"K", 400}};
  EXPECT_NE(config_error(ellipse).find("collocation ceiling of 300"), std::string::npos);

  json dup = base;
  dup["weights"].push_back(dup["weights"][0]);
  EXPECT_NE(config_error(dup).find("duplicate"), std::string::npos);
}

TEST(Config, InfeasibleGeometryAndWeightsAreConfigErrors) {
  json d = minimal(scratch("infeasible"));
  d["weights"] = json::array({{{"name", "one"}, {"type", "constant"}, {"level", 1}}});
  EXPECT_EQ(run(d), h::exit_config_error);  // nothing left after removing the mean
  d = minimal(scratch("infeasible"));
  d["weights"] = json::array({{{"name", "H"}, {"type", "curvature_deviation"}, {"level", 1}}});
  EXPECT_EQ(run(d), h::exit_config_error);  // H - H_bar vanishes on the disk
  d = minimal(scratch("infeasible"));
  d["domain"]["x0"] = {2.0, 0.0};
  EXPECT_EQ(run(d), h::exit_config_error);
  d = minimal(scratch("infeasible"));
  d["domain"]["radius"] = -1.0;
  EXPECT_EQ(run(d), h::exit_config_error);
}

TEST(Run, MinimalDiskPassesAndWritesArtifacts) {
  const auto dir = scratch("minimal");
  EXPECT_EQ(run(minimal(dir)), h::exit_pass);
  for (const char* f : {"spectrum.csv", "functionals.csv", "rellich.csv", "packets.csv", "cancellation.csv",
                        "weights.json", "packets_fit.json", "cancellation_fit.json", "weyl.json", "report.txt",
                        "report.json", "summary.json", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_FALSE(fs::exists(dir / "error.json"));
  const auto summary = read(dir / "summary.json");
  EXPECT_TRUE(summary["passed"].get<bool>());
  const auto manifest = read(dir / "manifest.json");
  EXPECT_EQ(manifest["config_hash"], summary["config_hash"]);
  EXPECT_EQ(manifest["seeds"]["seed"], 1);
  EXPECT_EQ(manifest["versions"]["speclab"], h::version);
  EXPECT_EQ(manifest["artifacts"]["spectrum.csv"], io::hex64(io::fnv1a(io::read_file(dir / "spectrum.csv"))));

  // spectrum.csv reproduces the analytic values at full precision
  const auto t = io::parse_csv(io::read_file(dir / "spectrum.csv"));
  const auto ref = disk_spectrum(1.0, 200);
  ASSERT_EQ(t.rows.size(), 200u);
  for (std::size_t i = 0; i < 200; ++i) EXPECT_EQ(io::parse_double(t.rows[i][1]), ref.modes[i].lambda);
}

TEST(Run, StagesReloadArtifactsExactly) {
  // stage-by-stage invocation yields the same bytes as one run
  const auto a = scratch("all"), b = scratch("staged");
  ASSERT_EQ(run(minimal(a)), h::exit_pass);
  for (auto s : h::all_stages) ASSERT_EQ(run(minimal(b), {s}), h::exit_pass) << h::to_string(s);
  for (const char* f : {"packets.csv", "cancellation.csv", "weyl.json", "report.txt", "rellich.csv"})
    EXPECT_EQ(io::read_file(a / f), io::read_file(b / f)) << f;
}

TEST(Run, JsonOnlyTablesFeedLaterStages) {
  const auto dir = scratch("jsononly");
  auto d = minimal(dir);
  d["outputs"]["formats"] = {"json"};
  EXPECT_EQ(run(d), h::exit_pass);
  EXPECT_FALSE(fs::exists(dir / "packets.csv"));
  EXPECT_TRUE(fs::exists(dir / "packets.json"));
  const auto csv_dir = scratch("jsononly_ref");
  ASSERT_EQ(run(minimal(csv_dir)), h::exit_pass);
  EXPECT_EQ(io::read_file(dir / "weyl.json"), io::read_file(csv_dir / "weyl.json"));
}

TEST(Run, OutOfOrderIsMissingArtifact) {
  const auto dir = scratch("order");
  EXPECT_EQ(run(minimal(dir), {h::Stage::packets}), h::exit_config_error);
  const auto rec = read(dir / "error.json");
  EXPECT_EQ(rec["error"], "MissingArtifact");
  EXPECT_EQ(rec["stage"], "packets");
  EXPECT_EQ(run(minimal(dir), {h::Stage::spectrum}), h::exit_pass);
  EXPECT_FALSE(fs::exists(dir / "error.json"));
  EXPECT_EQ(run(minimal(dir), {h::Stage::report}), h::exit_config_error);
  // a spectrum computed for another configuration is rejected, not reused
  auto other = minimal(dir);
  other["solver"]["K"] = 300;
  EXPECT_EQ(run(other, {h::Stage::packets}), h::exit_config_error);
  EXPECT_NE(read(dir / "error.json")["message"].get<std::string>().find("rerun 'spectrum'"), std::string::npos);
}

TEST(Run, CheckFailureAndComputationErrorCodes) {
  auto d = minimal(scratch("checkfail"));
  d["checks"] = {{"ratio_band", {0.99, 1.0}}};
  EXPECT_EQ(run(d), h::exit_check_failure);
  EXPECT_FALSE(read(d["outputs"]["directory"].get<std::string>() + "/summary.json")["passed"].get<bool>());

  d = minimal(scratch("computefail"));
  d["weyl"] = {{"lambda_lo", 100.0}, {"lambda_hi", 1e6}};
  EXPECT_EQ(run(d), h::exit_computation_error);
  const auto rec = read(d["outputs"]["directory"].get<std::string>() + "/error.json");
  EXPECT_EQ(rec["error"], "SpectrumTooShort");
  EXPECT_EQ(rec["stage"], "weyl");
}

TEST(Run, RerunIsByteIdentical) {
  const auto dir = scratch("rerun");
  auto d = minimal(dir);
  d["seed"] = 5;
  ASSERT_EQ(run(d), h::exit_pass);
  const auto first = snapshot(dir);
  ASSERT_EQ(run(d), h::exit_pass);
  EXPECT_EQ(snapshot(dir), first);
  // moving the output directory leaves every table and summary unchanged
  const auto moved = scratch("rerun_moved");
  d["outputs"]["directory"] = moved.string();
  ASSERT_EQ(run(d), h::exit_pass);
  for (const auto& [name, bytes] : snapshot(moved))
    if (name != "manifest.json") EXPECT_EQ(bytes, first.at(name)) << name;
}

TEST(Run, BallCancellationReport) {
  const auto dir = scratch("ball");
  json d = {{"domain", {{"kind", "ball"}}},
            {"solver", {{"K", 400}}},
            {"grid", {{"n_lat", 40}, {"n_lon", 80}}},
            {"weights", {{{"name", "P2"}, {"type", "legendre"}, {"n", 2}, {"level", 2}}}},
            {"packets", {{"schedules", {{{"alpha", 0.5}, {"k_min", 50}, {"k_max", 350}}}}}},
            {"checks", {{"whole_eigenspace_zero", 1e-12}}},
            {"outputs", {{"directory", dir.string()}}}};
  EXPECT_EQ(run(d), h::exit_pass);
  const auto fit = read(dir / "cancellation_fit.json")["fits"][0];
  EXPECT_EQ(fit["level"], 2);  // H is constant on the sphere
  EXPECT_EQ(fit["threshold_exponent"], 0.0);
  EXPECT_GT(fit["whole_eigenspace_packets"].get<int>(), 0);
  const auto report = io::read_file(dir / "report.txt");
  EXPECT_NE(report.find("ball(R=1)"), std::string::npos);
  EXPECT_NE(report.find("P2"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  const std::string cli = SPECLAB_CLI_PATH, cfg = std::string(SPECLAB_SOURCE_DIR) + "/configs/disk_minimal.json";
  const auto dir = scratch("cli");
  auto status = [&](const std::string& args) {
    const int s = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  const std::string out = " --set outputs.directory=" + dir.string();
  EXPECT_EQ(status("run " + cfg + out), 0);
  EXPECT_EQ(status("run " + cfg + out + " --set packets.schedules.0.alpha=1.2"), 2);
  EXPECT_EQ(status("run " + cfg + out + " --set checks.ratio_band=[0.99,1.0]"), 1);
  EXPECT_EQ(status("run " + cfg + out + " --set weyl.lambda_lo=100 --set weyl.lambda_hi=1e6"), 3);
  EXPECT_EQ(status("run /nonexistent.json"), 2);
  EXPECT_EQ(status("frobnicate " + cfg), 2);
  EXPECT_EQ(status("rellich " + cfg + " --set outputs.directory=" + scratch("cli_empty").string()), 2);
}
