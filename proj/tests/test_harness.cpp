#include "adisc/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace adisc {
namespace {

namespace fs = std::filesystem;

std::string fixture(const std::string& name) { return std::string(ADISC_SOURCE_DIR) + "/fixtures/" + name; }

Json load_json(const std::string& path) {
  std::ifstream is(path);
  return Json::parse(is);
}

// A desk-sized variant of a fixture for quick end-to-end runs.
Json small(Json doc) {
  doc.erase("output_dir");
  doc["grid"] = {{"n_nodes", 256}, {"lattice_radii", 48}};
  doc["sweep"] = {{"points_per_axis", 2}};
  doc["two_constants"] = {{"compositions", 8}};
  doc["coverage"] = {{"n_targets", 200}, {"n_starts", 4}, {"n_probes", 16}};
  doc["density"] = {{"n_discs", 100}};
  doc["jacobian"] = {{"verify_scan_points", 2}, {"scan_points", 2}};
  return doc;
}

int dispatch(std::vector<std::string> args) {
  args.insert(args.begin(), "adisc_cli");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("adisc_test_" + name);
  fs::remove_all(p);
  return p;
}

ErrorKind config_error_kind(const Json& doc) {
  try {
    parse_config(doc);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

TEST(Config, FixturesParse) {
  for (const char* name : {"flat.json", "quad.json", "quad_too_large.json", "generic_flat.json", "generic_quad.json",
                           "generic_adversarial.json"}) {
    EXPECT_NO_THROW(load_config(fixture(name))) << name;
  }
  const ExperimentConfig c = load_config(fixture("quad.json"));
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.n, 2);
  EXPECT_EQ(c.psh_fixtures.size(), 3u);
  EXPECT_EQ(c.exceptional.size(), 1u);
  EXPECT_EQ(c.coverage.n_targets, 10000);
}

TEST(Config, Rejections) {
  const Json base = load_json(fixture("quad.json"));
  Json doc = base;
  doc.erase("seed");
  EXPECT_EQ(config_error_kind(doc), ErrorKind::ConfigError);
  doc = base;
  doc["schema_version"] = 2;
  EXPECT_EQ(config_error_kind(doc), ErrorKind::ConfigError);
  doc = base;
  doc["bogus"] = 1;
  EXPECT_EQ(config_error_kind(doc), ErrorKind::ConfigError);
  doc = base;
  doc["grid"]["n_nodes"] = 1000;
  EXPECT_EQ(config_error_kind(doc), ErrorKind::ConfigError);
  doc = base;
  doc["psh_fixtures"][1]["kind"] = "nonexistent";
  EXPECT_EQ(config_error_kind(doc), ErrorKind::ConfigError);
  doc = base;
  doc["psh_fixtures"][1]["w"] = {0.9, 0.0};
  EXPECT_EQ(config_error_kind(doc), ErrorKind::ConfigError);
  doc = base;
  doc["box"]["c_half_widths"] = {0.1};
  EXPECT_EQ(config_error_kind(doc), ErrorKind::ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), Error);
}

TEST(Config, ExitCodes) {
  EXPECT_EQ(exit_code_for(ErrorKind::ConfigError), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::MalformedGraph), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::BoxCollapsed), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::NoConvergence), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::CoverageInconclusive), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::FixtureRangeEscape), 1);
  EXPECT_EQ(exit_code_for(ErrorKind::HypothesisViolated), 1);
}

TEST(Config, StripTiming) {
  const Json r = {{"a", 1}, {"timing", 2}, {"b", {{"timing", 3}, {"c", 4}}}};
  EXPECT_EQ(strip_timing(r), (Json{{"a", 1}, {"b", {{"c", 4}}}}));
}

TEST(Cli, MissingConfigIsConfigError) {
  EXPECT_EQ(dispatch({"verify", "--config", "/nonexistent.json", "--out", temp_dir("missing").string()}), 3);
  EXPECT_EQ(dispatch({"verify"}), 3);
  EXPECT_EQ(dispatch({"bogus", "--config", fixture("quad.json")}), 3);
}

TEST(Cli, UncertifiableBoxIsInconclusive) {
  const fs::path out = temp_dir("too_large");
  EXPECT_EQ(dispatch({"jacobian", "--config", fixture("quad_too_large.json"), "--out", out.string()}), 2);
  const Json r = load_json((out / "report.json").string());
  EXPECT_EQ(r["error_kind"], "BoxCollapsed");
}

TEST(Cli, SolveWritesOutputs) {
  const fs::path out = temp_dir("solve");
  EXPECT_EQ(dispatch({"solve", "--config", fixture("quad.json"), "--out", out.string(), "--nodes", "512", "--seed", "5"}),
            0);
  const Json r = load_json((out / "report.json").string());
  EXPECT_EQ(r["status"], "pass");
  EXPECT_EQ(r["n_nodes"], 512);
  EXPECT_EQ(r["seed"], 5);
  EXPECT_TRUE(fs::exists(out / "discs" / "disc_0000.csv"));
  EXPECT_TRUE(fs::exists(out / "discs" / "manifest.json"));
}

TEST(Harness, DensityEmptyAndDegenerate) {
  Json doc = small(load_json(fixture("quad.json")));
  doc["exceptional_set"]["functions"] = Json::array();
  const RunResult empty = run_good_disc_density(make_setup(parse_config(doc)));
  EXPECT_EQ(empty.report["good_fraction"], 1.0);

  // x1 = 0 with c1 pinned near 0 and t = 0: every constant disc lies in I.
  doc = small(load_json(fixture("quad.json")));
  doc["exceptional_set"]["functions"] = {{{{"multi_index", {1, 0}}, {"coeff", 1.0}}}};
  doc["box"]["c_half_widths"] = {1e-9, 0.05};
  doc["density"]["t_zero"] = true;
  const RunResult degenerate = run_good_disc_density(make_setup(parse_config(doc)));
  EXPECT_EQ(degenerate.report["good_fraction"], 0.0);
  EXPECT_EQ(degenerate.exit_code, 1);
}

TEST(Harness, SolveIsDeterministic) {
  const adisc::Setup s = make_setup(parse_config(small(load_json(fixture("quad.json")))));
  EXPECT_EQ(strip_timing(run_good_disc_density(s).report).dump(), strip_timing(run_good_disc_density(s).report).dump());
}

TEST(Harness, SmallVerifyPassesAndIsDeterministic) {
  const adisc::Setup s = make_setup(parse_config(small(load_json(fixture("flat.json")))));
  const RunResult a = run_thinness_experiment(s);
  const RunResult b = run_thinness_experiment(s);
  EXPECT_EQ(a.exit_code, 0) << a.report["checks"].dump(1);
  EXPECT_EQ(strip_timing(a.report).dump(), strip_timing(b.report).dump());
  const double frac = a.report["coverage"]["fraction"];
  EXPECT_GE(frac, 0.0);
  EXPECT_LE(frac, 1.0);
  for (const auto& f : a.report["coverage"]["ball_average"]) {
    EXPECT_GE(f["propagated_bound"].get<double>(), f["ball_average"].get<double>() - 1e-6);
  }
}

TEST(Harness, GeneralCaseWithEqualDimensionsDelegates) {
  const ExperimentConfig c = parse_config(small(load_json(fixture("flat.json"))));
  RunResult g = run_general_case(c);
  RunResult t = run_thinness_experiment(make_setup(c));
  g.report.erase("command");
  g.report.erase("manifold");
  t.report.erase("command");
  EXPECT_EQ(strip_timing(g.report).dump(), strip_timing(t.report).dump());
  EXPECT_EQ(g.exit_code, t.exit_code);
}

TEST(Harness, AdversarialSliceIsSkipped) {
  const adisc::Setup s = make_setup(load_config(fixture("generic_adversarial.json")));
  ASSERT_TRUE(s.slice.has_value());
  EXPECT_EQ(s.slice->sampled.attempts, 2);
  EXPECT_EQ(s.slice->sampled.rejections.size(), 1u);
}

TEST(Harness, GenericFlatSliceIsFlat) {
  const adisc::Setup s = make_setup(load_config(fixture("generic_flat.json")));
  ASSERT_TRUE(s.slice.has_value());
  EXPECT_TRUE(s.M.is_flat());
}

// Properties.

TEST(HarnessProperty, ClassificationStableUnderDoubling) {
  for (const char* name : {"flat.json", "quad.json", "generic_flat.json", "generic_quad.json"}) {
    Json doc = small(load_json(fixture(name)));
    doc["grid"]["n_nodes"] = 512;
    const RunResult r = run_good_disc_density(make_setup(parse_config(doc)));
    EXPECT_EQ(r.report["doubling_disagreements"], 0) << name;
  }
}

TEST(HarnessProperty, CoverageMonotoneInStarts) {
  Json doc = small(load_json(fixture("quad.json")));
  const adisc::Setup s = make_setup(parse_config(doc));
  const ContractionCertificate cert = contraction_certify(s.M, s.v, s.config.box, s.config.certify);
  const std::vector<PshTestFn> none;
  int prev = -1;
  std::vector<char> prev_flags;
  for (int starts : {1, 3, 6}) {
    const CoverageResult r = estimate_coverage(s, cert.box, 0.02, 60, starts, none);
    EXPECT_GE(r.n_covered, prev);
    for (std::size_t t = 0; t < prev_flags.size(); ++t) {
      if (prev_flags[t]) EXPECT_TRUE(r.covered[t]) << t;
    }
    prev = r.n_covered;
    prev_flags = r.covered;
  }
}

}  // namespace
}  // namespace adisc
