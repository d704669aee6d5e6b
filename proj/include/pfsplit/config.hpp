#pragma once

// Experiment configuration: a YAML document with nested blocks. Every field
// has a default; an empty document selects the default experiment. A
// non-empty document must carry a `policy` block.

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pfsplit/baselines.hpp"
#include "pfsplit/scenario.hpp"

namespace pfsplit {

struct ExperimentConfig {
  ScenarioConfig base;
  std::vector<Policy> policies{Policy::Proposed, Policy::WP, Policy::Rel12, Policy::DE};
  std::vector<int> ue_per_sector{20};
  std::vector<double> backhaul_delay_ms{0.0, 10.0, 20.0, 50.0};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::uint64_t master_seed{0};
  // When set, Rel12 runs use a threshold tuned on this grid per (load, delay).
  bool rel12_auto{false};
  std::vector<double> rel12_tuning_grid{0.0, 5.0, 10.0, 15.0, 20.0, std::numeric_limits<double>::infinity()};
  bool write_flows{true};
  bool write_trace{false};

  ScenarioConfig scenario(Policy policy, int ues, double delay_ms) const {
    ScenarioConfig s = base;
    s.policy.policy = policy;
    s.topology.ue_per_sector = ues;
    s.sim.backhaul_delay_s = delay_ms / 1000.0;
    return s;
  }
};

struct ParseResult {
  ExperimentConfig config;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(std::vector<Diagnostic>& diags) : diags_(diags) {}

  void error(const YAML::Node& node, const std::string& field, const std::string& message) {
    const int line = node.IsDefined() && node.Mark().line >= 0 ? node.Mark().line + 1 : 0;
    diags_.push_back({field, message, line});
  }

  // Reads a mapping block, reporting keys not in `known`.
  YAML::Node block(const YAML::Node& parent, const std::string& key, const std::string& path,
                   std::initializer_list<const char*> known) {
    YAML::Node node = parent[key];
    if (!node.IsDefined() || node.IsNull()) return YAML::Node(YAML::NodeType::Map);
    if (!node.IsMap()) {
      error(node, path, "must be a mapping");
      return YAML::Node(YAML::NodeType::Map);
    }
    check_keys(node, path, known);
    return node;
  }

  void check_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> known) {
    std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) error(kv.first, path.empty() ? key : path + "." + key, "unknown field");
    }
  }

  template <typename T>
  void scalar(const YAML::Node& parent, const char* key, const std::string& path, T& out) {
    const YAML::Node node = parent[key];
    if (!node.IsDefined() || node.IsNull()) return;
    const std::string field = path.empty() ? key : path + "." + key;
    if (!node.IsScalar()) {
      error(node, field, "must be a scalar");
      return;
    }
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      error(node, field, std::string("cannot parse '") + node.Scalar() + "' as " + type_name<T>());
    }
  }

  template <typename T>
  void list(const YAML::Node& parent, const char* key, const std::string& path, std::vector<T>& out) {
    const YAML::Node node = parent[key];
    if (!node.IsDefined() || node.IsNull()) return;
    const std::string field = path.empty() ? key : path + "." + key;
    if (node.IsScalar()) {
      T v{};
      try {
        v = node.as<T>();
      } catch (const YAML::Exception&) {
        error(node, field, std::string("cannot parse '") + node.Scalar() + "' as " + type_name<T>());
        return;
      }
      out = {v};
      return;
    }
    if (!node.IsSequence()) {
      error(node, field, "must be a list");
      return;
    }
    std::vector<T> values;
    for (std::size_t i = 0; i < node.size(); ++i) {
      try {
        values.push_back(node[i].as<T>());
      } catch (const YAML::Exception&) {
        error(node[i], field + "[" + std::to_string(i) + "]", "cannot parse as " + std::string(type_name<T>()));
      }
    }
    out = std::move(values);
  }

 private:
  template <typename T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else return "a string";
  }

  std::vector<Diagnostic>& diags_;
};

inline void read_document(const YAML::Node& root, ExperimentConfig& cfg, std::vector<Diagnostic>& diags) {
  ConfigReader rd(diags);
  if (!root.IsMap()) {
    rd.error(root, "<root>", "top level must be a mapping of blocks");
    return;
  }
  rd.check_keys(root, "", {"topology", "radio", "traffic", "policy", "backhaul_delay_ms", "seeds", "master_seed",
                           "durations", "simulation", "output"});
  if (!root["policy"].IsDefined()) rd.error(YAML::Node(), "policy", "missing policy block");

  auto& t = cfg.base.topology;
  const auto topo = rd.block(root, "topology", "topology",
                             {"sites", "sectors_per_site", "inter_site_distance_m", "small_cells_per_sector",
                              "hotspot_fraction", "hotspot_radius_m", "ap_min_site_distance_m",
                              "ue_min_site_distance_m", "max_ue_redraws"});
  rd.scalar(topo, "sites", "topology", t.sites);
  rd.scalar(topo, "sectors_per_site", "topology", t.sectors_per_site);
  rd.scalar(topo, "inter_site_distance_m", "topology", t.inter_site_distance_m);
  rd.scalar(topo, "small_cells_per_sector", "topology", t.small_cells_per_sector);
  rd.scalar(topo, "hotspot_fraction", "topology", t.hotspot_fraction);
  rd.scalar(topo, "hotspot_radius_m", "topology", t.hotspot_radius_m);
  rd.scalar(topo, "ap_min_site_distance_m", "topology", t.ap_min_site_distance_m);
  rd.scalar(topo, "ue_min_site_distance_m", "topology", t.ue_min_site_distance_m);
  rd.scalar(topo, "max_ue_redraws", "topology", t.max_ue_redraws);

  auto& r = cfg.base.radio;
  const auto radio = rd.block(
      root, "radio", "radio",
      {"macro_tx_power_dbm", "macro_antenna_gain_dbi", "macro_beamwidth_deg", "macro_front_to_back_db",
       "macro_bandwidth_hz", "macro_pl_intercept_db", "macro_pl_slope_db", "macro_min_distance_m",
       "macro_shadowing_db", "macro_efficiency", "macro_cap_bps_per_hz", "macro_floor_db", "sc_tx_power_dbm",
       "sc_antenna_gain_dbi", "sc_bandwidth_hz", "sc_pl_intercept_db", "sc_pl_slope_db", "sc_min_distance_m",
       "sc_shadowing_db", "sc_channels", "sc_mac_efficiency", "sc_efficiency", "sc_cap_bps_per_hz", "sc_floor_db",
       "sc_interference", "ue_noise_figure_db"});
  rd.scalar(radio, "macro_tx_power_dbm", "radio", r.macro_tx_power_dbm);
  rd.scalar(radio, "macro_antenna_gain_dbi", "radio", r.macro_antenna_gain_dbi);
  rd.scalar(radio, "macro_beamwidth_deg", "radio", r.macro_beamwidth_deg);
  rd.scalar(radio, "macro_front_to_back_db", "radio", r.macro_front_to_back_db);
  rd.scalar(radio, "macro_bandwidth_hz", "radio", r.macro_bandwidth_hz);
  rd.scalar(radio, "macro_pl_intercept_db", "radio", r.macro_pl_intercept_db);
  rd.scalar(radio, "macro_pl_slope_db", "radio", r.macro_pl_slope_db);
  rd.scalar(radio, "macro_min_distance_m", "radio", r.macro_min_distance_m);
  rd.scalar(radio, "macro_shadowing_db", "radio", r.macro_shadowing_db);
  rd.scalar(radio, "macro_efficiency", "radio", r.macro_map.efficiency);
  rd.scalar(radio, "macro_cap_bps_per_hz", "radio", r.macro_map.cap_bps_per_hz);
  rd.scalar(radio, "macro_floor_db", "radio", r.macro_map.floor_db);
  rd.scalar(radio, "sc_tx_power_dbm", "radio", r.sc_tx_power_dbm);
  rd.scalar(radio, "sc_antenna_gain_dbi", "radio", r.sc_antenna_gain_dbi);
  rd.scalar(radio, "sc_bandwidth_hz", "radio", r.sc_bandwidth_hz);
  rd.scalar(radio, "sc_pl_intercept_db", "radio", r.sc_pl_intercept_db);
  rd.scalar(radio, "sc_pl_slope_db", "radio", r.sc_pl_slope_db);
  rd.scalar(radio, "sc_min_distance_m", "radio", r.sc_min_distance_m);
  rd.scalar(radio, "sc_shadowing_db", "radio", r.sc_shadowing_db);
  rd.scalar(radio, "sc_channels", "radio", r.sc_channels);
  rd.scalar(radio, "sc_mac_efficiency", "radio", r.sc_mac_efficiency);
  rd.scalar(radio, "sc_efficiency", "radio", r.sc_map.efficiency);
  rd.scalar(radio, "sc_cap_bps_per_hz", "radio", r.sc_map.cap_bps_per_hz);
  rd.scalar(radio, "sc_floor_db", "radio", r.sc_map.floor_db);
  rd.scalar(radio, "sc_interference", "radio", r.sc_interference);
  rd.scalar(radio, "ue_noise_figure_db", "radio", r.ue_noise_figure_db);

  const auto traffic =
      rd.block(root, "traffic", "traffic", {"ue_per_sector", "mean_interarrival_s", "file_size_bits"});
  rd.list(traffic, "ue_per_sector", "traffic", cfg.ue_per_sector);
  rd.scalar(traffic, "mean_interarrival_s", "traffic", cfg.base.traffic.mean_interarrival_s);
  rd.scalar(traffic, "file_size_bits", "traffic", cfg.base.traffic.file_size_bits);

  const auto policy = rd.block(root, "policy", "policy",
                               {"policies", "wp_snr_threshold_db", "rel12_sinr_threshold_db", "rel12_tuning_grid"});
  if (policy["policies"].IsDefined()) {
    std::vector<std::string> names;
    rd.list(policy, "policies", "policy", names);
    std::vector<Policy> parsed;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (auto p = parse_policy(names[i])) parsed.push_back(*p);
      else rd.error(policy["policies"], "policy.policies[" + std::to_string(i) + "]",
                    "unknown policy '" + names[i] + "' (expected proposed, wp, rel12, de)");
    }
    cfg.policies = parsed;
  }
  rd.scalar(policy, "wp_snr_threshold_db", "policy", cfg.base.policy.wp_snr_threshold_db);
  if (const auto node = policy["rel12_sinr_threshold_db"]; node.IsDefined() && node.IsScalar() && node.Scalar() == "auto")
    cfg.rel12_auto = true;
  else
    rd.scalar(policy, "rel12_sinr_threshold_db", "policy", cfg.base.policy.rel12_sinr_threshold_db);
  rd.list(policy, "rel12_tuning_grid", "policy", cfg.rel12_tuning_grid);

  rd.list(root, "backhaul_delay_ms", "", cfg.backhaul_delay_ms);
  rd.list(root, "seeds", "", cfg.seeds);
  rd.scalar(root, "master_seed", "", cfg.master_seed);

  const auto durations = rd.block(root, "durations", "durations", {"warmup_s", "measured_s"});
  rd.scalar(durations, "warmup_s", "durations", cfg.base.sim.warmup_s);
  rd.scalar(durations, "measured_s", "durations", cfg.base.sim.measured_s);

  const auto sim = rd.block(root, "simulation", "simulation",
                            {"reallocation", "reallocation_period_ms", "feedback_lag", "max_events",
                             "check_snapshot_dominance"});
  std::string mode = cfg.base.sim.reallocation == Reallocation::Periodic ? "periodic" : "event";
  rd.scalar(sim, "reallocation", "simulation", mode);
  if (mode == "event") cfg.base.sim.reallocation = Reallocation::OnEvent;
  else if (mode == "periodic") cfg.base.sim.reallocation = Reallocation::Periodic;
  else rd.error(sim["reallocation"], "simulation.reallocation", "must be 'event' or 'periodic'");
  double period_ms = cfg.base.sim.reallocation_period_s * 1000.0;
  rd.scalar(sim, "reallocation_period_ms", "simulation", period_ms);
  cfg.base.sim.reallocation_period_s = period_ms / 1000.0;
  rd.scalar(sim, "feedback_lag", "simulation", cfg.base.sim.feedback_lag);
  rd.scalar(sim, "max_events", "simulation", cfg.base.sim.max_events);
  rd.scalar(sim, "check_snapshot_dominance", "simulation", cfg.base.sim.check_snapshot_dominance);

  const auto output = rd.block(root, "output", "output", {"flows", "trace"});
  rd.scalar(output, "flows", "output", cfg.write_flows);
  rd.scalar(output, "trace", "output", cfg.write_trace);
}

inline void check_sweeps(const ExperimentConfig& cfg, std::vector<Diagnostic>& diags) {
  if (cfg.policies.empty()) diags.push_back({"policy.policies", "must list at least one policy"});
  if (cfg.ue_per_sector.empty()) diags.push_back({"traffic.ue_per_sector", "must not be empty"});
  for (std::size_t i = 0; i < cfg.ue_per_sector.size(); ++i)
    if (cfg.ue_per_sector[i] <= 0)
      diags.push_back({"traffic.ue_per_sector[" + std::to_string(i) + "]", "must be > 0"});
  if (cfg.backhaul_delay_ms.empty()) diags.push_back({"backhaul_delay_ms", "must not be empty"});
  for (std::size_t i = 0; i < cfg.backhaul_delay_ms.size(); ++i)
    if (!std::isfinite(cfg.backhaul_delay_ms[i]) || cfg.backhaul_delay_ms[i] < 0.0)
      diags.push_back({"backhaul_delay_ms[" + std::to_string(i) + "]", "must be a non-negative number"});
  if (cfg.seeds.empty()) diags.push_back({"seeds", "must not be empty"});
  if (cfg.rel12_auto && cfg.rel12_tuning_grid.empty())
    diags.push_back({"policy.rel12_tuning_grid", "must not be empty when the threshold is 'auto'"});

  // Sweep fields are checked above; validate the rest with a valid stand-in.
  ScenarioConfig probe = cfg.base;
  probe.topology.ue_per_sector = 1;
  probe.sim.backhaul_delay_s = 0.0;
  for (auto& d : validate(probe)) diags.push_back(std::move(d));
}

}  // namespace detail

inline ParseResult parse_config(const std::string& text) {
  ParseResult out;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    out.diagnostics.push_back({"<syntax>", e.msg, e.mark.line >= 0 ? e.mark.line + 1 : 0});
    return out;
  }
  if (root.IsDefined() && !root.IsNull()) detail::read_document(root, out.config, out.diagnostics);
  detail::check_sweeps(out.config, out.diagnostics);
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ParseResult load_config(const std::string& path) { return parse_config(read_file(path)); }

inline std::string format_diagnostic(const Diagnostic& d) {
  std::string s = d.line > 0 ? "line " + std::to_string(d.line) + ": " : "";
  return s + d.field + ": " + d.message;
}

// FNV-1a over the raw config bytes.
inline std::uint64_t content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace pfsplit
