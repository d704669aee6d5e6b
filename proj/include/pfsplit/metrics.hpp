#pragma once

// Reduction of per-flow records to the reported quantities, and the CSV
// schemas the plotting scripts consume.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfsplit/baselines.hpp"
#include "pfsplit/records.hpp"

namespace pfsplit {

// Linear-interpolation percentile, q in [0, 100].
inline double percentile(std::span<const double> samples, double q) {
  if (samples.empty()) throw std::invalid_argument("percentile: no samples");
  if (!(q >= 0.0 && q <= 100.0)) throw std::invalid_argument("percentile: q outside [0, 100]");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct FlowThroughput {
  std::uint64_t flow_id{0};
  UeId ue_id;
  double throughput_bps{0.0};
};

struct MetricsReport {
  std::vector<FlowThroughput> per_flow;  // completed measured flows, by flow_id
  std::vector<double> per_ue_mean_bps;   // UEs with at least one measured flow, by ue_id
  double edge_rate_bps{0.0};
  double median_rate_bps{0.0};
  double ue_edge_rate_bps{0.0};
  double ue_median_rate_bps{0.0};
  double sum_log_utility{0.0};
  double utilization{0.0};
  double smallcell_utilization{0.0};
  std::size_t incomplete_flows{0};
};

inline MetricsReport make_report(const SimulationResult& result) {
  MetricsReport rep;
  std::map<std::uint32_t, std::pair<double, int>> per_ue;
  for (const auto& f : result.flows) {
    if (!f.measured) continue;
    if (!f.completed()) {
      ++rep.incomplete_flows;
      continue;
    }
    const double tp = f.throughput_bps();
    rep.per_flow.push_back({f.flow_id, f.ue_id, tp});
    auto& acc = per_ue[f.ue_id.value];
    acc.first += tp;
    acc.second += 1;
  }
  std::sort(rep.per_flow.begin(), rep.per_flow.end(),
            [](const FlowThroughput& a, const FlowThroughput& b) { return a.flow_id < b.flow_id; });
  for (const auto& [ue, acc] : per_ue) {
    const double mean = acc.first / acc.second;
    rep.per_ue_mean_bps.push_back(mean);
    rep.sum_log_utility += std::log(mean);
  }
  if (!rep.per_flow.empty()) {
    std::vector<double> tps;
    tps.reserve(rep.per_flow.size());
    for (const auto& f : rep.per_flow) tps.push_back(f.throughput_bps);
    rep.edge_rate_bps = percentile(tps, 5.0);
    rep.median_rate_bps = percentile(tps, 50.0);
    rep.ue_edge_rate_bps = percentile(rep.per_ue_mean_bps, 5.0);
    rep.ue_median_rate_bps = percentile(rep.per_ue_mean_bps, 50.0);
  }
  rep.utilization = result.macro_utilization;
  rep.smallcell_utilization = result.smallcell_utilization;
  return rep;
}

// (proposed / baseline - 1) * 100.
inline double gain_percent(double proposed, double baseline) {
  if (baseline <= 0.0) throw std::invalid_argument("gain_percent: baseline must be > 0");
  return (proposed / baseline - 1.0) * 100.0;
}

struct ComparisonRow {
  Policy baseline{Policy::WP};
  double edge_gain_percent{0.0};
  double median_gain_percent{0.0};
};

using ComparisonTable = std::vector<ComparisonRow>;

inline ComparisonTable compare(const std::map<Policy, MetricsReport>& reports) {
  const auto it = reports.find(Policy::Proposed);
  if (it == reports.end()) throw std::invalid_argument("compare: no report for the proposed policy");
  ComparisonTable table;
  for (const auto& [policy, rep] : reports) {
    if (policy == Policy::Proposed) continue;
    table.push_back({policy, gain_percent(it->second.edge_rate_bps, rep.edge_rate_bps),
                     gain_percent(it->second.median_rate_bps, rep.median_rate_bps)});
  }
  return table;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline constexpr const char* kFlowsHeader = "flow_id,ue_id,policy,seed,arrival_s,completion_s,size_bits,throughput_bps";
inline constexpr const char* kSummaryHeader =
    "policy,seed,ue_per_sector,backhaul_delay_ms,edge_bps,median_bps,sum_log,utilization";
inline constexpr const char* kCdfHeader = "policy,throughput_bps,cdf";

inline void write_flow_rows(std::ostream& os, const SimulationResult& result, Policy policy, std::uint64_t seed) {
  for (const auto& f : result.flows) {
    if (!f.measured || !f.completed()) continue;
    os << f.flow_id << ',' << f.ue_id.value << ',' << to_string(policy) << ',' << seed << ','
       << format_number(f.arrival_s) << ',' << format_number(f.completion_s) << ',' << format_number(f.size_bits)
       << ',' << format_number(f.throughput_bps()) << '\n';
  }
}

struct SummaryRow {
  Policy policy{Policy::Proposed};
  std::uint64_t seed{0};
  int ue_per_sector{0};
  double backhaul_delay_ms{0.0};
  double edge_bps{0.0};
  double median_bps{0.0};
  double sum_log{0.0};
  double utilization{0.0};
};

inline void write_summary_row(std::ostream& os, const SummaryRow& r) {
  os << to_string(r.policy) << ',' << r.seed << ',' << r.ue_per_sector << ',' << format_number(r.backhaul_delay_ms)
     << ',' << format_number(r.edge_bps) << ',' << format_number(r.median_bps) << ',' << format_number(r.sum_log)
     << ',' << format_number(r.utilization) << '\n';
}

// Empirical CDF rows i/n over the sorted samples; the last row has cdf 1.
inline void write_cdf_rows(std::ostream& os, Policy policy, std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    os << to_string(policy) << ',' << format_number(samples[i]) << ','
       << format_number(static_cast<double>(i + 1) / n) << '\n';
}

}  // namespace pfsplit
