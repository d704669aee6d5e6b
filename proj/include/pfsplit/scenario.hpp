#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pfsplit/baselines.hpp"

namespace pfsplit {

struct TopologyConfig {
  int sites{7};  // 1 (isolated) or 7 (wrap-around)
  int sectors_per_site{3};
  double inter_site_distance_m{500.0};
  int small_cells_per_sector{5};
  int ue_per_sector{20};
  double hotspot_fraction{2.0 / 3.0};
  double hotspot_radius_m{40.0};
  double ap_min_site_distance_m{75.0};
  double ue_min_site_distance_m{35.0};
  int max_ue_redraws{1000};
};

struct ShannonMap {
  double efficiency{0.75};
  double cap_bps_per_hz{4.8};
  double floor_db{-6.5};
};

struct RadioConfig {
  double macro_tx_power_dbm{46.0};
  double macro_antenna_gain_dbi{14.0};
  double macro_beamwidth_deg{70.0};
  double macro_front_to_back_db{20.0};
  double macro_bandwidth_hz{20e6};
  double macro_pl_intercept_db{128.1};
  double macro_pl_slope_db{37.6};
  double macro_min_distance_m{35.0};
  double macro_shadowing_db{8.0};
  ShannonMap macro_map{0.75, 4.8, -6.5};

  double sc_tx_power_dbm{20.0};
  double sc_antenna_gain_dbi{0.0};
  double sc_bandwidth_hz{20e6};
  double sc_pl_intercept_db{140.7};
  double sc_pl_slope_db{36.7};
  double sc_min_distance_m{10.0};
  double sc_shadowing_db{10.0};
  int sc_channels{3};
  double sc_mac_efficiency{0.6};
  ShannonMap sc_map{0.75, 6.0, -6.5};
  bool sc_interference{false};

  double ue_noise_figure_db{9.0};
};

struct TrafficConfig {
  double mean_interarrival_s{1.0};
  double file_size_bits{4e6};  // 0.5 MB
};

enum class Reallocation { OnEvent, Periodic };

struct SimulationConfig {
  double warmup_s{100.0};
  double measured_s{400.0};
  double backhaul_delay_s{0.0};
  Reallocation reallocation{Reallocation::OnEvent};
  double reallocation_period_s{0.010};
  // Allocate with small-cell rates as they were one backhaul delay ago.
  bool feedback_lag{false};
  long long max_events{200'000'000};
  bool check_snapshot_dominance{false};
};

// Everything one simulation run needs.
struct ScenarioConfig {
  TopologyConfig topology;
  RadioConfig radio;
  TrafficConfig traffic;
  PolicyConfig policy;
  SimulationConfig sim;
};

struct Diagnostic {
  std::string field;
  std::string message;
  int line{0};  // 0 when not tied to a source line
};

inline std::vector<Diagnostic> validate(const ScenarioConfig& c) {
  std::vector<Diagnostic> out;
  auto positive = [&](double v, const char* field) {
    if (!std::isfinite(v) || v <= 0.0) out.push_back({field, "must be a positive number"});
  };
  auto nonneg = [&](double v, const char* field) {
    if (!std::isfinite(v) || v < 0.0) out.push_back({field, "must be a non-negative number"});
  };
  const auto& t = c.topology;
  if (t.sites != 1 && t.sites != 7) out.push_back({"topology.sites", "must be 1 or 7"});
  if (t.sectors_per_site != 3) out.push_back({"topology.sectors_per_site", "only 3-sector sites are modeled"});
  positive(t.inter_site_distance_m, "topology.inter_site_distance_m");
  if (t.small_cells_per_sector < 0) out.push_back({"topology.small_cells_per_sector", "must be >= 0"});
  if (t.ue_per_sector <= 0) out.push_back({"traffic.ue_per_sector", "must be > 0"});
  if (!(t.hotspot_fraction >= 0.0 && t.hotspot_fraction <= 1.0))
    out.push_back({"topology.hotspot_fraction", "must lie in [0, 1]"});
  positive(t.hotspot_radius_m, "topology.hotspot_radius_m");
  if (std::isfinite(t.hotspot_radius_m) && std::isfinite(t.inter_site_distance_m) &&
      t.hotspot_radius_m > t.inter_site_distance_m / std::sqrt(3.0))
    out.push_back({"topology.hotspot_radius_m", "exceeds the sector radius"});
  nonneg(t.ap_min_site_distance_m, "topology.ap_min_site_distance_m");
  nonneg(t.ue_min_site_distance_m, "topology.ue_min_site_distance_m");
  if (t.max_ue_redraws < 0) out.push_back({"topology.max_ue_redraws", "must be >= 0"});

  const auto& r = c.radio;
  positive(r.macro_bandwidth_hz, "radio.macro_bandwidth_hz");
  positive(r.sc_bandwidth_hz, "radio.sc_bandwidth_hz");
  positive(r.macro_beamwidth_deg, "radio.macro_beamwidth_deg");
  positive(r.macro_min_distance_m, "radio.macro_min_distance_m");
  positive(r.sc_min_distance_m, "radio.sc_min_distance_m");
  positive(r.macro_pl_slope_db, "radio.macro_pl_slope_db");
  positive(r.sc_pl_slope_db, "radio.sc_pl_slope_db");
  nonneg(r.macro_shadowing_db, "radio.macro_shadowing_db");
  nonneg(r.sc_shadowing_db, "radio.sc_shadowing_db");
  if (r.sc_channels <= 0) out.push_back({"radio.sc_channels", "must be > 0"});
  positive(r.sc_mac_efficiency, "radio.sc_mac_efficiency");
  positive(r.macro_map.efficiency, "radio.macro_efficiency");
  positive(r.macro_map.cap_bps_per_hz, "radio.macro_cap_bps_per_hz");
  positive(r.sc_map.efficiency, "radio.sc_efficiency");
  positive(r.sc_map.cap_bps_per_hz, "radio.sc_cap_bps_per_hz");

  positive(c.traffic.mean_interarrival_s, "traffic.mean_interarrival_s");
  positive(c.traffic.file_size_bits, "traffic.file_size_bits");

  if (std::isnan(c.policy.wp_snr_threshold_db)) out.push_back({"policy.wp_snr_threshold_db", "must be a number"});
  if (std::isnan(c.policy.rel12_sinr_threshold_db))
    out.push_back({"policy.rel12_sinr_threshold_db", "must be a number"});

  nonneg(c.sim.warmup_s, "durations.warmup_s");
  positive(c.sim.measured_s, "durations.measured_s");
  nonneg(c.sim.backhaul_delay_s, "backhaul_delay_ms");
  positive(c.sim.reallocation_period_s, "simulation.reallocation_period_ms");
  if (c.sim.max_events <= 0) out.push_back({"simulation.max_events", "must be > 0"});
  return out;
}

}  // namespace pfsplit
