#pragma once

// One simulation run end to end: topology, link budget, arrivals, engine,
// and metrics. Plus the empirical Rel12 threshold search built on top.

#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "pfsplit/metrics.hpp"
#include "pfsplit/radio.hpp"
#include "pfsplit/scenario.hpp"
#include "pfsplit/simulator.hpp"

namespace pfsplit {

inline std::vector<std::vector<double>> draw_arrivals(const RadioNetwork& net, const ScenarioConfig& cfg,
                                                      std::uint64_t seed) {
  const double horizon = cfg.sim.warmup_s + cfg.sim.measured_s;
  std::vector<std::vector<double>> out;
  out.reserve(net.ues.size());
  for (const auto& u : net.ues) out.push_back(arrivals(u.id, seed, horizon, cfg.traffic.mean_interarrival_s));
  return out;
}

inline SimulationResult simulate(const ScenarioConfig& cfg, std::uint64_t seed, std::ostream* trace = nullptr) {
  if (auto diags = validate(cfg); !diags.empty())
    throw std::invalid_argument("invalid scenario: " + diags.front().field + " " + diags.front().message);
  const Topology topo = generate_topology(cfg, seed);
  const RadioNetwork net = build_network(topo, cfg.radio);
  FluidSimulator engine(net, cfg.policy, cfg.traffic, cfg.sim, trace);
  return engine.run(draw_arrivals(net, cfg, seed));
}

inline MetricsReport run(const ScenarioConfig& cfg, std::uint64_t seed) { return make_report(simulate(cfg, seed)); }

struct Rel12Tuning {
  double threshold_db{0.0};
  std::vector<double> edge_rate_bps;  // per grid point, mean over seeds
};

// Picks the Rel12 SINR threshold with the best edge rate (mean over seeds);
// ties go to the smaller threshold.
inline Rel12Tuning tune_rel12(const ScenarioConfig& scenario, std::span<const double> grid,
                              std::span<const std::uint64_t> seeds) {
  if (grid.empty()) throw std::invalid_argument("tune_rel12_threshold: empty grid");
  if (seeds.empty()) throw std::invalid_argument("tune_rel12_threshold: no seeds");
  Rel12Tuning out;
  double best_edge = -std::numeric_limits<double>::infinity();
  for (double threshold : grid) {
    ScenarioConfig cfg = scenario;
    cfg.policy.policy = Policy::Rel12;
    cfg.policy.rel12_sinr_threshold_db = threshold;
    double edge = 0.0;
    for (auto seed : seeds) edge += run(cfg, seed).edge_rate_bps;
    edge /= static_cast<double>(seeds.size());
    out.edge_rate_bps.push_back(edge);
    if (edge > best_edge || (edge == best_edge && threshold < out.threshold_db)) {
      best_edge = edge;
      out.threshold_db = threshold;
    }
  }
  return out;
}

inline double tune_rel12_threshold(const ScenarioConfig& scenario, std::span<const double> grid,
                                   std::uint64_t seed) {
  const std::uint64_t seeds[] = {seed};
  return tune_rel12(scenario, grid, seeds).threshold_db;
}

}  // namespace pfsplit
