#include "pfsplit/simulator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "pfsplit/pipeline.hpp"

namespace pfsplit {
namespace {

constexpr double kFile = 4e6;

UeRadio ue(std::uint32_t id, double p, double r, int sector = 0, int ap = 0) {
  UeRadio u;
  u.id = UeId{id};
  u.sector = sector;
  u.macro_sinr_db = p > 0.0 ? 10.0 : -20.0;
  u.macro_peak_bps = p;
  if (r > 0.0) {
    u.ap = ap;
    u.ap_snr_db = 20.0;
    u.ap_solo_rate_bps = r;
  }
  return u;
}

RadioNetwork network(std::vector<UeRadio> ues, int sectors = 1, int aps = 1) {
  RadioNetwork net;
  net.sector_count = sectors;
  net.ap_count = aps;
  net.ues = std::move(ues);
  return net;
}

SimulationConfig window(double delay_s = 0.0) {
  SimulationConfig sim;
  sim.warmup_s = 0.0;
  sim.measured_s = 100.0;
  sim.backhaul_delay_s = delay_s;
  return sim;
}

SimulationResult run_net(const RadioNetwork& net, Policy policy, const std::vector<std::vector<double>>& arrivals,
                         SimulationConfig sim = window()) {
  FluidSimulator engine(net, PolicyConfig{policy}, TrafficConfig{}, sim);
  return engine.run(arrivals);
}

double relative(double a, double b) { return std::abs(a - b) / std::abs(b); }

TEST(Arrivals, PoissonMeanAndSubstreams) {
  const auto a = arrivals(UeId{3}, 11, 1e5);
  ASSERT_GT(a.size(), 1000u);
  const double mean_gap = a.back() / static_cast<double>(a.size());
  EXPECT_NEAR(mean_gap, 1.0, 0.01);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_GT(a[i], a[i - 1]);
  EXPECT_EQ(a, arrivals(UeId{3}, 11, 1e5));
  EXPECT_NE(a.front(), arrivals(UeId{4}, 11, 1e5).front());
  EXPECT_NE(a.front(), arrivals(UeId{3}, 12, 1e5).front());
  EXPECT_THROW(arrivals(UeId{0}, 1, 0.0), std::invalid_argument);
}

TEST(SingleFlow, MacroOnlyTakesFileOverPeak) {
  const auto net = network({ue(0, 4e6, 0.0)});
  const auto res = run_net(net, Policy::WP, {{0.5}});
  ASSERT_EQ(res.flows.size(), 1u);
  EXPECT_DOUBLE_EQ(res.flows[0].completion_s, 1.5);
  EXPECT_DOUBLE_EQ(res.flows[0].macro_bits, kFile);
  EXPECT_DOUBLE_EQ(res.flows[0].throughput_bps(), 4e6);
}

TEST(SingleFlow, ProposedWithoutDelayAggregatesBothLegs) {
  const auto net = network({ue(0, 3e7, 5e7)});
  const auto res = run_net(net, Policy::Proposed, {{2.0}});
  EXPECT_LT(relative(res.flows[0].completion_s - 2.0, kFile / 8e7), 1e-9);
  EXPECT_NEAR(res.flows[0].macro_bits, kFile * 3.0 / 8.0, 1e-3);
}

TEST(SingleFlow, MacroDeadUeWaitsForBackhaul) {
  const double l = 0.02, r = 3e7;
  const auto net = network({ue(0, 0.0, r)});
  const auto res = run_net(net, Policy::Proposed, {{1.0}}, window(l));
  const auto& f = res.flows[0];
  EXPECT_LT(relative(f.completion_s - 1.0, l + kFile / r), 1e-9);
  EXPECT_LT(relative(f.throughput_bps(), effective_rate(r, l, kFile)), 1e-9);
  EXPECT_DOUBLE_EQ(f.smallcell_available_s, 1.0 + l);
  EXPECT_DOUBLE_EQ(f.smallcell_bits, kFile);
}

TEST(SingleFlow, MacroKeepsServingUntilGateOpens) {
  // Macro runs at p from the start, the small cell joins at l.
  const double p = 2e7, r = 6e7, l = 0.05;
  const auto net = network({ue(0, p, r)});
  const auto res = run_net(net, Policy::Proposed, {{0.0}}, window(l));
  EXPECT_LT(relative(res.flows[0].completion_s, (kFile + r * l) / (p + r)), 1e-9);
}

TEST(SingleFlow, LongDelayLeavesFileOnMacro) {
  const double p = 8e7, r = 6e7, l = 0.1;
  const auto net = network({ue(0, p, r)});
  const auto res = run_net(net, Policy::Proposed, {{0.0}}, window(l));
  EXPECT_LT(relative(res.flows[0].completion_s, kFile / p), 1e-9);
}

TEST(SingleFlow, DeMatchesProposedForOneUe) {
  const auto net = network({ue(0, 3e7, 5e7)});
  const auto de = run_net(net, Policy::DE, {{0.0}});
  EXPECT_LT(relative(de.flows[0].completion_s, kFile / 8e7), 1e-9);
}

TEST(SingleFlow, WpOffloadsStrongApWithDelay) {
  const double l = 0.01;
  const auto net = network({ue(0, 3e7, 5e7)});
  const auto res = run_net(net, Policy::WP, {{0.0}}, window(l));
  EXPECT_LT(relative(res.flows[0].completion_s, l + kFile / 5e7), 1e-9);
  EXPECT_DOUBLE_EQ(res.flows[0].macro_bits, 0.0);
}

TEST(SingleFlow, WpFallsBackToSmallCellWithoutMacro) {
  auto u = ue(0, 0.0, 2e7);
  u.ap_snr_db = -3.0;  // below the WP threshold
  const auto res = run_net(network({u}), Policy::WP, {{0.0}});
  EXPECT_LT(relative(res.flows[0].completion_s, kFile / 2e7), 1e-9);
}

TEST(SingleFlow, Rel12NeverOffloadsAtMinusInfinity) {
  const auto net = network({ue(0, 4e6, 5e7)});
  FluidSimulator engine(net, PolicyConfig{Policy::Rel12, 2.0, -std::numeric_limits<double>::infinity()},
                        TrafficConfig{}, window());
  const auto res = engine.run({{0.0}});
  EXPECT_DOUBLE_EQ(res.flows[0].completion_s, 1.0);
}

TEST(Sharing, EqualMacroShareThenSoloAfterCompletion) {
  const auto net = network({ue(0, 8e6, 0.0), ue(1, 4e6, 0.0)});
  const auto res = run_net(net, Policy::WP, {{0.0}, {0.0}});
  EXPECT_DOUBLE_EQ(res.flows[0].completion_s, 1.0);
  EXPECT_DOUBLE_EQ(res.flows[1].completion_s, 1.5);
}

TEST(Sharing, ApRoundRobin) {
  const auto net = network({ue(0, 1e6, 8e6), ue(1, 1e6, 8e6)});
  const auto res = run_net(net, Policy::WP, {{0.0}, {0.0}});
  EXPECT_DOUBLE_EQ(res.flows[0].completion_s, 1.0);
  EXPECT_DOUBLE_EQ(res.flows[1].completion_s, 1.0);
}

TEST(Sharing, FifoPerUe) {
  const auto net = network({ue(0, 4e6, 0.0)});
  const auto res = run_net(net, Policy::Proposed, {{0.0, 0.1}});
  EXPECT_DOUBLE_EQ(res.flows[0].completion_s, 1.0);
  EXPECT_DOUBLE_EQ(res.flows[1].completion_s, 2.0);
}

TEST(Sharing, ProposedSectorSplitMatchesAllocator) {
  // Two UEs, zero delay: macro fractions follow the water-filling solution
  // until the first file leaves.
  const double p0 = 2e7, r0 = 4e7, p1 = 1e7, r1 = 0.0;
  const auto net = network({ue(0, p0, r0), ue(1, p1, r1)});
  const auto res = run_net(net, Policy::Proposed, {{0.0}, {0.0}});
  const auto alloc = opt_alloc(std::vector<UeLinkState>{{UeId{0}, p0, r0, 0.0, kFile}, {UeId{1}, p1, r1, 0.0, kFile}});
  const double rate0 = alloc.fractions[0] * p0 + r0;
  const double rate1 = alloc.fractions[1] * p1;
  const double first = std::min(kFile / rate0, kFile / rate1);
  EXPECT_LT(relative(std::min(res.flows[0].completion_s, res.flows[1].completion_s), first), 1e-9);
}

TEST(Engine, RejectsUeWithoutCoverage) {
  const auto net = network({ue(0, 0.0, 0.0)});
  EXPECT_THROW(FluidSimulator(net, PolicyConfig{Policy::Proposed}, TrafficConfig{}, window()), std::invalid_argument);
}

TEST(Engine, RejectsMismatchedArrivals) {
  const auto net = network({ue(0, 4e6, 0.0)});
  FluidSimulator engine(net, PolicyConfig{Policy::Proposed}, TrafficConfig{}, window());
  EXPECT_THROW(engine.run({}), std::invalid_argument);
  EXPECT_THROW(engine.run({{-1.0}}), std::invalid_argument);
}

TEST(Engine, EventBudgetGuard) {
  const auto net = network({ue(0, 4e6, 0.0)});
  auto sim = window();
  sim.max_events = 3;
  FluidSimulator engine(net, PolicyConfig{Policy::Proposed}, TrafficConfig{}, sim);
  EXPECT_THROW(engine.run({{0.0, 0.1, 0.2, 0.3}}), std::runtime_error);
}

TEST(Engine, UtilizationOverMeasuredWindow) {
  auto sim = window();
  sim.measured_s = 10.0;
  const auto res = run_net(network({ue(0, 4e6, 0.0)}), Policy::WP, {{0.0}}, sim);
  EXPECT_DOUBLE_EQ(res.macro_utilization, 0.1);
  EXPECT_DOUBLE_EQ(res.smallcell_utilization, 0.0);
}

TEST(Engine, WarmupFlowsAreUnmeasured) {
  auto sim = window();
  sim.warmup_s = 1.0;
  sim.measured_s = 2.0;
  const auto res = run_net(network({ue(0, 4e7, 0.0)}), Policy::WP, {{0.5, 1.5, 3.5}}, sim);
  EXPECT_FALSE(res.flows[0].measured);
  EXPECT_TRUE(res.flows[1].measured);
  EXPECT_FALSE(res.flows[2].measured);
  for (const auto& f : res.flows) EXPECT_TRUE(f.completed());
}

TEST(Engine, TraceHasOneLinePerEvent) {
  const auto net = network({ue(0, 4e6, 0.0)});
  std::ostringstream trace;
  FluidSimulator engine(net, PolicyConfig{Policy::Proposed}, TrafficConfig{}, window(), &trace);
  engine.run({{0.0}});
  std::istringstream in(trace.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_GE(lines.size(), 2u);
  EXPECT_EQ(lines.front(), "0,arrival,0,0,size_bits=4000000.000000");
  for (const auto& l : lines) EXPECT_EQ(std::count(l.begin(), l.end(), ','), 4);
  EXPECT_NE(lines.back().find("complete"), std::string::npos);
}

ScenarioConfig toy(Policy policy, double delay_s, int ues = 5) {
  ScenarioConfig cfg;
  cfg.topology.ue_per_sector = ues;
  cfg.policy.policy = policy;
  cfg.sim.warmup_s = 5.0;
  cfg.sim.measured_s = 20.0;
  cfg.sim.backhaul_delay_s = delay_s;
  cfg.policy.rel12_sinr_threshold_db = 10.0;
  return cfg;
}

class ScenarioProperties : public ::testing::TestWithParam<std::tuple<Policy, double>> {};

TEST_P(ScenarioProperties, ConservationCausalityAndRateBounds) {
  const auto [policy, delay] = GetParam();
  const auto cfg = toy(policy, delay);
  const auto topo = generate_topology(cfg, 21);
  const auto net = build_network(topo, cfg.radio);
  FluidSimulator engine(net, cfg.policy, cfg.traffic, cfg.sim);
  const auto res = engine.run(draw_arrivals(net, cfg, 21));
  ASSERT_FALSE(res.flows.empty());
  for (const auto& f : res.flows) {
    ASSERT_TRUE(f.completed());
    EXPECT_GT(f.completion_s, f.arrival_s);
    EXPECT_NEAR(f.macro_bits + f.smallcell_bits, f.size_bits, 1e-6);
    EXPECT_GE(f.macro_bits, -1e-6);
    EXPECT_GE(f.smallcell_bits, -1e-6);
    const auto& radio = net.ues[f.ue_id.value];
    if (f.smallcell_bits > 1e-3) {
      EXPECT_GE(f.completion_s, f.smallcell_available_s);
      EXPECT_GE(f.smallcell_available_s - f.arrival_s, delay - 1e-9);
    }
    EXPECT_LE(f.throughput_bps(), (radio.macro_peak_bps + radio.ap_solo_rate_bps) * (1.0 + 1e-9));
  }
  EXPECT_GE(res.macro_utilization, 0.0);
  EXPECT_LE(res.macro_utilization, 1.0);
  EXPECT_LE(res.smallcell_utilization, 1.0);
}

TEST_P(ScenarioProperties, Deterministic) {
  const auto [policy, delay] = GetParam();
  const auto a = simulate(toy(policy, delay), 4);
  const auto b = simulate(toy(policy, delay), 4);
  ASSERT_EQ(a.flows.size(), b.flows.size());
  for (std::size_t i = 0; i < a.flows.size(); ++i) {
    EXPECT_EQ(a.flows[i].completion_s, b.flows[i].completion_s);
    EXPECT_EQ(a.flows[i].macro_bits, b.flows[i].macro_bits);
  }
}

INSTANTIATE_TEST_SUITE_P(AllPolicies, ScenarioProperties,
                         ::testing::Combine(::testing::Values(Policy::Proposed, Policy::WP, Policy::Rel12, Policy::DE),
                                            ::testing::Values(0.0, 0.02)));

TEST(Scenario, SnapshotDominanceHolds) {
  auto cfg = toy(Policy::Proposed, 0.01);
  cfg.sim.check_snapshot_dominance = true;
  const auto res = simulate(cfg, 2);
  EXPECT_GT(res.diagnostics.dominance_checks, 0);
  EXPECT_EQ(res.diagnostics.dominance_violations, 0);
}

TEST(Scenario, PeriodicAndLaggedModesRun) {
  auto cfg = toy(Policy::Proposed, 0.02);
  cfg.sim.reallocation = Reallocation::Periodic;
  cfg.sim.feedback_lag = true;
  const auto res = simulate(cfg, 3);
  for (const auto& f : res.flows) EXPECT_TRUE(f.completed());
  EXPECT_GT(res.diagnostics.sector_reallocations, 0);
}

TEST(Scenario, CommonArrivalsAcrossPolicies) {
  const auto a = simulate(toy(Policy::Proposed, 0.0), 8);
  const auto b = simulate(toy(Policy::WP, 0.02), 8);
  ASSERT_EQ(a.flows.size(), b.flows.size());
  for (std::size_t i = 0; i < a.flows.size(); ++i) {
    EXPECT_EQ(a.flows[i].arrival_s, b.flows[i].arrival_s);
    EXPECT_EQ(a.flows[i].ue_id, b.flows[i].ue_id);
  }
}

}  // namespace
}  // namespace pfsplit
