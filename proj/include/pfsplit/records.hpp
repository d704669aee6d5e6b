#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "pfsplit/allocator.hpp"

namespace pfsplit {

// One file transfer. Split sizes are the bits each leg actually carried.
struct FlowRecord {
  std::uint64_t flow_id{0};
  UeId ue_id;
  double arrival_s{0.0};
  double size_bits{0.0};
  double macro_bits{0.0};
  double smallcell_bits{0.0};
  double smallcell_available_s{std::numeric_limits<double>::quiet_NaN()};
  double completion_s{std::numeric_limits<double>::quiet_NaN()};
  bool measured{false};

  bool completed() const { return !std::isnan(completion_s); }
  double throughput_bps() const { return size_bits / (completion_s - arrival_s); }
};

struct RunDiagnostics {
  long long events{0};
  long long sector_reallocations{0};
  long long dominance_checks{0};
  long long dominance_violations{0};
  double worst_dominance_margin{std::numeric_limits<double>::infinity()};
};

struct SimulationResult {
  std::vector<FlowRecord> flows;
  RunDiagnostics diagnostics;
  double macro_utilization{0.0};      // busy fraction of sector time, measured window
  double smallcell_utilization{0.0};  // busy fraction of AP time, measured window
};

}  // namespace pfsplit
