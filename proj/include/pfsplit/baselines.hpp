#pragma once

// RAT selection baselines. WP and Rel12 route each file over exactly one RAT;
// the delay-equalizing split lives in allocator.hpp (de_split).

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pfsplit {

enum class Policy { Proposed, WP, Rel12, DE };

enum class Route { MacroOnly, SmallCellOnly };

inline std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::Proposed: return "proposed";
    case Policy::WP: return "wp";
    case Policy::Rel12: return "rel12";
    case Policy::DE: return "de";
  }
  return "?";
}

inline std::optional<Policy> parse_policy(std::string_view s) {
  if (s == "proposed") return Policy::Proposed;
  if (s == "wp") return Policy::WP;
  if (s == "rel12") return Policy::Rel12;
  if (s == "de") return Policy::DE;
  return std::nullopt;
}

inline bool splits_traffic(Policy p) { return p == Policy::Proposed || p == Policy::DE; }

struct PolicyConfig {
  Policy policy{Policy::Proposed};
  double wp_snr_threshold_db{2.0};
  // +inf reproduces WP, -inf keeps every UE on the macro.
  double rel12_sinr_threshold_db{0.0};
};

// WLAN-preferred: take the strongest AP whenever it clears the SNR threshold
// (inclusive).
inline Route wp_decide(double /*macro_snr_db*/, std::optional<double> best_ap_snr_db,
                       const PolicyConfig& cfg) {
  if (best_ap_snr_db && *best_ap_snr_db >= cfg.wp_snr_threshold_db) return Route::SmallCellOnly;
  return Route::MacroOnly;
}

// Rel12 interworking: offload per WP only when the macro SINR is poor.
inline Route rel12_decide(double macro_sinr_db, std::optional<double> best_ap_snr_db,
                          const PolicyConfig& cfg) {
  if (macro_sinr_db < cfg.rel12_sinr_threshold_db) return wp_decide(macro_sinr_db, best_ap_snr_db, cfg);
  return Route::MacroOnly;
}

inline Route route_for(const PolicyConfig& cfg, double macro_sinr_db, std::optional<double> best_ap_snr_db) {
  switch (cfg.policy) {
    case Policy::WP: return wp_decide(macro_sinr_db, best_ap_snr_db, cfg);
    case Policy::Rel12: return rel12_decide(macro_sinr_db, best_ap_snr_db, cfg);
    default: throw std::logic_error("route_for: policy " + std::string(to_string(cfg.policy)) + " splits traffic");
  }
}

}  // namespace pfsplit
