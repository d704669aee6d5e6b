#pragma once

// Random allocator instances shared by the unit and acceptance suites.

#include <random>
#include <vector>

#include "pfsplit/allocator.hpp"

namespace pfsplit::testing {

// K in [1, max_k], p in [1e6, 1e8], r in {0} U [1e5, 1e8] (about a quarter
// uncovered), l in [0, 0.1] s, f = 4e6 bits.
inline std::vector<UeLinkState> random_instance(std::mt19937_64& rng, int max_k = 10) {
  std::uniform_int_distribution<int> k_dist(1, max_k);
  std::uniform_real_distribution<double> p_dist(1e6, 1e8);
  std::uniform_real_distribution<double> r_dist(1e5, 1e8);
  std::uniform_real_distribution<double> l_dist(0.0, 0.1);
  std::bernoulli_distribution uncovered(0.25);
  const int k = k_dist(rng);
  std::vector<UeLinkState> out;
  for (int i = 0; i < k; ++i) {
    UeLinkState s;
    s.ue_id = UeId{static_cast<std::uint32_t>(i)};
    s.macro_peak_bps = p_dist(rng);
    s.smallcell_rate_bps = uncovered(rng) ? 0.0 : r_dist(rng);
    s.backhaul_delay_s = l_dist(rng);
    s.file_size_bits = 4e6;
    out.push_back(s);
  }
  return out;
}

// States with prescribed r_eff/p ratios (zero delay, p = 1e7).
inline std::vector<UeLinkState> with_ratios(const std::vector<double>& ratios) {
  std::vector<UeLinkState> out;
  for (std::size_t i = 0; i < ratios.size(); ++i)
    out.push_back({UeId{static_cast<std::uint32_t>(i)}, 1e7, ratios[i] * 1e7, 0.0, 4e6});
  return out;
}

}  // namespace pfsplit::testing
