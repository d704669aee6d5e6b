#include "pfsplit/experiment.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pfsplit/config.hpp"

namespace pfsplit {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) { return read_file(p.string()); }

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("pfsplit_experiment_test_" + name);
  fs::remove_all(dir);
  return dir;
}

const char* kToy = R"(
traffic:
  ue_per_sector: [4]
policy:
  policies: [proposed, rel12]
  rel12_sinr_threshold_db: 10
backhaul_delay_ms: [0, 20]
seeds: [1, 2]
durations:
  warmup_s: 2
  measured_s: 10
)";

TEST(ConfigParse, EmptyDocumentSelectsDefaults) {
  const auto parsed = parse_config("");
  EXPECT_TRUE(parsed.ok());
  EXPECT_EQ(parsed.config.policies.size(), 4u);
  EXPECT_EQ(parsed.config.ue_per_sector, std::vector<int>{20});
  EXPECT_EQ(parsed.config.backhaul_delay_ms, (std::vector<double>{0, 10, 20, 50}));
  EXPECT_EQ(parsed.config.seeds.size(), 5u);
  EXPECT_EQ(expand_runs(parsed.config).size(), 80u);
}

TEST(ConfigParse, NegativeDelayNamesTheField) {
  const auto parsed = parse_config("policy: {}\nbackhaul_delay_ms: [0, -5]\n");
  ASSERT_EQ(parsed.diagnostics.size(), 1u);
  EXPECT_EQ(parsed.diagnostics[0].field, "backhaul_delay_ms[1]");
}

TEST(ConfigParse, MissingPolicyBlock) {
  const auto parsed = parse_config("seeds: [1]\n");
  ASSERT_EQ(parsed.diagnostics.size(), 1u);
  EXPECT_EQ(parsed.diagnostics[0].field, "policy");
}

TEST(ConfigParse, ListsAllErrorsWithLines) {
  const auto parsed = parse_config(
      "policy:\n"
      "  policies: [proposed, lte]\n"
      "topology:\n"
      "  sites: 7\n"
      "  colour: blue\n"
      "radio:\n"
      "  sc_bandwidth_hz: -1\n"
      "traffic:\n"
      "  ue_per_sector: [10, 0]\n"
      "seeds: []\n");
  std::vector<std::string> fields;
  for (const auto& d : parsed.diagnostics) fields.push_back(d.field);
  EXPECT_GE(parsed.diagnostics.size(), 5u);
  auto has = [&](const std::string& f) { return std::find(fields.begin(), fields.end(), f) != fields.end(); };
  EXPECT_TRUE(has("policy.policies[1]"));
  EXPECT_TRUE(has("topology.colour"));
  EXPECT_TRUE(has("radio.sc_bandwidth_hz"));
  EXPECT_TRUE(has("traffic.ue_per_sector[1]"));
  EXPECT_TRUE(has("seeds"));
  for (const auto& d : parsed.diagnostics) {
    if (d.field == "topology.colour") {
      EXPECT_EQ(d.line, 5);
    }
  }
}

TEST(ConfigParse, SyntaxErrorHasLine) {
  const auto parsed = parse_config("policy:\n  policies: [proposed\nseeds: [1]\n");
  ASSERT_FALSE(parsed.ok());
  EXPECT_EQ(parsed.diagnostics[0].field, "<syntax>");
  EXPECT_GT(parsed.diagnostics[0].line, 0);
  EXPECT_NE(format_diagnostic(parsed.diagnostics[0]).find("line "), std::string::npos);
}

TEST(ConfigParse, TypedValuesAndAutoThreshold) {
  const auto parsed = parse_config(
      "policy:\n  rel12_sinr_threshold_db: auto\n  rel12_tuning_grid: [0, 10, .inf]\n"
      "simulation:\n  reallocation: periodic\n  reallocation_period_ms: 5\n  feedback_lag: true\n"
      "durations: {warmup_s: 1, measured_s: 2}\nmaster_seed: 99\n");
  ASSERT_TRUE(parsed.ok()) << format_diagnostic(parsed.diagnostics.front());
  const auto& c = parsed.config;
  EXPECT_TRUE(c.rel12_auto);
  EXPECT_EQ(c.rel12_tuning_grid.size(), 3u);
  EXPECT_TRUE(std::isinf(c.rel12_tuning_grid[2]));
  EXPECT_EQ(c.base.sim.reallocation, Reallocation::Periodic);
  EXPECT_DOUBLE_EQ(c.base.sim.reallocation_period_s, 0.005);
  EXPECT_TRUE(c.base.sim.feedback_lag);
  EXPECT_EQ(c.master_seed, 99u);
  EXPECT_EQ(c.base.sim.measured_s, 2.0);
}

TEST(ConfigParse, WrongTypeReported) {
  const auto parsed = parse_config("policy: {}\ndurations:\n  warmup_s: soon\n");
  ASSERT_EQ(parsed.diagnostics.size(), 1u);
  EXPECT_EQ(parsed.diagnostics[0].field, "durations.warmup_s");
  EXPECT_EQ(parsed.diagnostics[0].line, 3);
}

TEST(Runs, FullCrossProductCount) {
  const auto parsed = parse_config("policy: {}\ntraffic:\n  ue_per_sector: [10, 20, 30]\n");
  ASSERT_TRUE(parsed.ok());
  const auto runs = expand_runs(parsed.config);
  EXPECT_EQ(runs.size(), 240u);
}

TEST(Runs, SeedsShareDrawsAcrossPoliciesAndDelays) {
  const auto runs = expand_runs(parse_config(kToy).config);
  for (const auto& a : runs)
    for (const auto& b : runs) {
      if (a.replicate_seed == b.replicate_seed && a.ue_per_sector == b.ue_per_sector) {
        EXPECT_EQ(a.seed, b.seed);
      }
      if (a.replicate_seed != b.replicate_seed) {
        EXPECT_NE(a.seed, b.seed);
      }
    }
  EXPECT_NE(run_seed(0, 10, 1), run_seed(0, 20, 1));
  EXPECT_NE(run_seed(0, 10, 1), run_seed(1, 10, 1));
}

TEST(ParallelFor, CoversEveryIndexAndRethrows) {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw std::runtime_error("boom"); }),
               std::runtime_error);
}

TEST(RunExperiment, MinimalConfigWritesOneSummaryRow) {
  const auto parsed = parse_config(
      "policy:\n  policies: [proposed]\ntraffic:\n  ue_per_sector: [3]\nbackhaul_delay_ms: [10]\nseeds: [7]\n"
      "durations: {warmup_s: 1, measured_s: 10}\n");
  ASSERT_TRUE(parsed.ok());
  const auto dir = scratch_dir("minimal");
  run_experiment(parsed.config, {dir, 1, "x", "minimal.yaml"});
  const auto summary = slurp(dir / "summary.csv");
  EXPECT_EQ(count_lines(summary), 2u);
  EXPECT_EQ(summary.substr(0, summary.find('\n')), kSummaryHeader);
  EXPECT_EQ(summary.substr(summary.find('\n') + 1, 15), "proposed,7,3,10");
  EXPECT_FALSE(fs::exists(dir / ".staging"));
  fs::remove_all(dir);
}

TEST(RunExperiment, OutputsAreDeterministicAndComplete) {
  const auto parsed = parse_config(kToy);
  ASSERT_TRUE(parsed.ok());
  const auto a = scratch_dir("rerun_a");
  const auto b = scratch_dir("rerun_b");
  const auto outcome = run_experiment(parsed.config, {a, 2, kToy, "toy.yaml"});
  run_experiment(parsed.config, {b, 1, kToy, "toy.yaml"});
  for (const char* f : {"flows.csv", "summary.csv", "cdf.csv", "manifest.json", "cdf_ue4_delay20ms.csv"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;

  EXPECT_EQ(count_lines(slurp(a / "summary.csv")), 1u + 8u);
  std::size_t flows = 0;
  for (const auto& rep : outcome.reports) flows += rep.per_flow.size();
  EXPECT_EQ(count_lines(slurp(a / "flows.csv")), 1u + flows);
  EXPECT_EQ(count_lines(slurp(a / "cdf.csv")), 1u + flows);

  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  EXPECT_EQ(manifest["runs"].size(), 8u);
  EXPECT_EQ(manifest["config_path"], "toy.yaml");
  EXPECT_EQ(manifest["version"], PFSPLIT_VERSION);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(RunExperiment, ManifestHashTracksConfigContent) {
  auto parsed = parse_config(kToy);
  parsed.config.policies = {Policy::WP};
  parsed.config.seeds = {1};
  parsed.config.backhaul_delay_ms = {0};
  auto hash_for = [&](const std::string& text) {
    const auto dir = scratch_dir("hash");
    run_experiment(parsed.config, {dir, 1, text, "c.yaml"});
    const auto h = nlohmann::json::parse(slurp(dir / "manifest.json"))["config_hash"].get<std::string>();
    fs::remove_all(dir);
    return h;
  };
  const std::string text = kToy;
  EXPECT_EQ(hash_for(text), hash_for(text));
  EXPECT_NE(hash_for(text), hash_for(text + "# comment\n"));
  EXPECT_EQ(content_hash(""), 0xcbf29ce484222325ULL);
}

TEST(RunExperiment, FailureLeavesNoPartialOutput) {
  auto parsed = parse_config(kToy);
  parsed.config.base.sim.max_events = 5;
  const auto dir = scratch_dir("failure");
  EXPECT_THROW(run_experiment(parsed.config, {dir, 1, kToy, "toy.yaml"}), std::runtime_error);
  EXPECT_FALSE(fs::exists(dir / "flows.csv"));
  EXPECT_FALSE(fs::exists(dir / "summary.csv"));
  EXPECT_FALSE(fs::exists(dir / ".staging"));
  fs::remove_all(dir);
}

TEST(RunExperiment, ValidConfigsRunOnToyDuration) {
  for (const char* text :
       {"", "policy: {policies: [de]}\nsimulation: {reallocation: periodic}\n",
        "policy: {policies: [wp]}\nradio: {sc_interference: true}\n",
        "policy: {policies: [proposed]}\nsimulation: {feedback_lag: true}\ntopology: {sites: 1}\n"}) {
    auto parsed = parse_config(text);
    ASSERT_TRUE(parsed.ok()) << text;
    auto& cfg = parsed.config;
    cfg.base.sim.warmup_s = 0.0;
    cfg.base.sim.measured_s = 10.0;
    cfg.ue_per_sector = {3};
    cfg.seeds = {1};
    cfg.backhaul_delay_ms = {cfg.backhaul_delay_ms.back()};
    const auto dir = scratch_dir("toy");
    EXPECT_NO_THROW(run_experiment(cfg, {dir, 1, text, "t.yaml"})) << text;
    fs::remove_all(dir);
  }
}

TEST(RunExperiment, TraceFilesWhenRequested) {
  auto parsed = parse_config("policy: {policies: [proposed]}\noutput: {trace: true}\nseeds: [1]\n"
                             "backhaul_delay_ms: [0]\ntraffic: {ue_per_sector: [2]}\ndurations: {warmup_s: 0, measured_s: 3}\n");
  ASSERT_TRUE(parsed.ok());
  const auto dir = scratch_dir("trace");
  run_experiment(parsed.config, {dir, 1, "", "t.yaml"});
  const auto trace = slurp(dir / "traces" / "trace_proposed_ue2_d0ms_s1.csv");
  EXPECT_EQ(trace.substr(0, trace.find('\n')), "time,kind,flow_id,ue_id,detail");
  EXPECT_GT(count_lines(trace), 1u);
  fs::remove_all(dir);
}

ScenarioConfig tuning_scenario() {
  ScenarioConfig s;
  s.topology.ue_per_sector = 4;
  s.sim.warmup_s = 2.0;
  s.sim.measured_s = 10.0;
  return s;
}

TEST(TuneRel12, SingleGridPoint) {
  const std::vector<double> grid{7.5};
  EXPECT_EQ(tune_rel12_threshold(tuning_scenario(), grid, 1), 7.5);
}

TEST(TuneRel12, PicksBestEdge) {
  const std::vector<double> grid{-std::numeric_limits<double>::infinity(), 0.0, 10.0,
                                 std::numeric_limits<double>::infinity()};
  const std::vector<std::uint64_t> seeds{1, 2};
  const auto t = tune_rel12(tuning_scenario(), grid, seeds);
  ASSERT_EQ(t.edge_rate_bps.size(), grid.size());
  const auto chosen = std::find(grid.begin(), grid.end(), t.threshold_db) - grid.begin();
  for (double e : t.edge_rate_bps) EXPECT_GE(t.edge_rate_bps[chosen], e);
}

TEST(TuneRel12, StrongApsFavourOffloadingEveryone) {
  auto s = tuning_scenario();
  s.radio.sc_tx_power_dbm = 30.0;
  s.topology.hotspot_fraction = 1.0;
  const std::vector<double> grid{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  EXPECT_TRUE(std::isinf(tune_rel12_threshold(s, grid, 3)));
  EXPECT_GT(tune_rel12_threshold(s, grid, 3), 0.0);
}

TEST(TuneRel12, PointsMatchSequentialSearch) {
  auto parsed = parse_config(kToy);
  auto& cfg = parsed.config;
  cfg.backhaul_delay_ms = {0};
  const std::vector<double> grid{0.0, 10.0, 20.0};
  const auto points = tune_rel12_points(cfg, grid, 2);
  ASSERT_EQ(points.size(), 1u);
  std::vector<std::uint64_t> seeds;
  for (auto rep : cfg.seeds) seeds.push_back(run_seed(cfg.master_seed, 4, rep));
  const auto direct = tune_rel12(cfg.scenario(Policy::Rel12, 4, 0.0), grid, seeds);
  EXPECT_EQ(points[0].tuning.threshold_db, direct.threshold_db);
  EXPECT_EQ(points[0].tuning.edge_rate_bps, direct.edge_rate_bps);
}

}  // namespace
}  // namespace pfsplit
