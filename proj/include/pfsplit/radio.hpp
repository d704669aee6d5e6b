#pragma once

// Hexagonal macro layout with 7-site wrap-around, uniformly dropped small
// cells, clustered UEs, and the link abstraction that turns geometry into
// macro peak capacity and small-cell rate.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfsplit/allocator.hpp"
#include "pfsplit/random.hpp"
#include "pfsplit/scenario.hpp"

namespace pfsplit {

struct Vec2 {
  double x{0.0};
  double y{0.0};
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  double norm() const { return std::hypot(x, y); }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// ---------------------------------------------------------------------------
// Layout

class HexLayout {
 public:
  HexLayout(int sites, double isd) : isd_(isd) {
    if (sites != 1 && sites != 7) throw std::invalid_argument("HexLayout: sites must be 1 or 7");
    sites_.push_back({0.0, 0.0});
    if (sites == 7) {
      for (int i = 0; i < 6; ++i) {
        const double a = i * std::numbers::pi / 3.0;
        sites_.push_back({isd * std::cos(a), isd * std::sin(a)});
      }
      const Vec2 a1{isd, 0.0};
      const Vec2 a2{isd / 2.0, isd * std::sqrt(3.0) / 2.0};
      const Vec2 b1 = 2.0 * a1 + a2;
      const Vec2 b2 = a2 + a2 + a2 - a1;
      const Vec2 b3 = b2 - b1;
      wraps_ = {b1, -1.0 * b1, b2, -1.0 * b2, b3, -1.0 * b3};
    }
  }

  const std::vector<Vec2>& sites() const { return sites_; }
  double isd() const { return isd_; }
  double cell_radius() const { return isd_ / std::sqrt(3.0); }
  bool wraps() const { return !wraps_.empty(); }

  // Shortest displacement from `from` to any wrap image of `to`.
  Vec2 displacement(Vec2 from, Vec2 to) const {
    Vec2 best = to - from;
    double best_norm = best.norm();
    for (const auto& w : wraps_) {
      const Vec2 d = to + w - from;
      const double n = d.norm();
      if (n < best_norm) {
        best = d;
        best_norm = n;
      }
    }
    return best;
  }

  double distance(Vec2 a, Vec2 b) const { return displacement(a, b).norm(); }

  // Point relative to its site centre lies in the site's hexagon.
  bool in_hexagon(Vec2 rel) const {
    for (int i = 0; i < 3; ++i) {
      const double a = i * std::numbers::pi / 3.0;
      if (std::abs(rel.x * std::cos(a) + rel.y * std::sin(a)) > isd_ / 2.0) return false;
    }
    return true;
  }

 private:
  double isd_;
  std::vector<Vec2> sites_;
  std::vector<Vec2> wraps_;
};

inline double wrap_angle_deg(double deg) {
  deg = std::fmod(deg + 180.0, 360.0);
  if (deg < 0.0) deg += 360.0;
  return deg - 180.0;
}

inline constexpr std::array<double, 3> kSectorBoresightDeg{30.0, 150.0, 270.0};

// Parabolic azimuth pattern, in dBi.
inline double sector_antenna_gain_db(double offset_deg, const RadioConfig& r) {
  const double ratio = offset_deg / r.macro_beamwidth_deg;
  return r.macro_antenna_gain_dbi - std::min(12.0 * ratio * ratio, r.macro_front_to_back_db);
}

enum class LinkClass { Macro, SmallCell };

// Log-distance path loss, distance clamped to the class minimum.
inline double path_loss_db(LinkClass cls, double distance_m, const RadioConfig& r) {
  const bool macro = cls == LinkClass::Macro;
  const double d = std::max(distance_m, macro ? r.macro_min_distance_m : r.sc_min_distance_m);
  const double d_km = d / 1000.0;
  return macro ? r.macro_pl_intercept_db + r.macro_pl_slope_db * std::log10(d_km)
               : r.sc_pl_intercept_db + r.sc_pl_slope_db * std::log10(d_km);
}

inline double noise_dbm(double bandwidth_hz, double noise_figure_db) {
  return -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
}

// Truncated Shannon, bits/s/Hz.
inline double truncated_shannon(double sinr_db, const ShannonMap& m) {
  if (!std::isfinite(sinr_db)) {
    if (sinr_db > 0.0) return m.cap_bps_per_hz;
    return 0.0;
  }
  if (sinr_db < m.floor_db) return 0.0;
  return std::min(m.efficiency * std::log2(1.0 + db_to_linear(sinr_db)), m.cap_bps_per_hz);
}

inline double macro_spectral_efficiency(double sinr_db, const ShannonMap& m = ShannonMap{0.75, 4.8, -6.5}) {
  return truncated_shannon(sinr_db, m);
}

// Per-UE small-cell rate under fluid round-robin among `sharing_count` UEs.
inline double smallcell_rate(double snr_db, int sharing_count, double bandwidth_hz = 20e6,
                             double mac_efficiency = 0.6,
                             const ShannonMap& m = ShannonMap{0.75, 6.0, -6.5}) {
  const double solo = bandwidth_hz * mac_efficiency * truncated_shannon(snr_db, m);
  return solo / static_cast<double>(std::max(1, sharing_count));
}

inline double smallcell_rate(double snr_db, int sharing_count, const RadioConfig& r) {
  return smallcell_rate(snr_db, sharing_count, r.sc_bandwidth_hz, r.sc_mac_efficiency, r.sc_map);
}

// ---------------------------------------------------------------------------
// Topology

struct Sector {
  int site{0};
  double boresight_deg{0.0};
};

struct SmallCell {
  Vec2 position;
  int sector{0};  // sector it was dropped in
  int channel{0};
  double tx_power_dbm{0.0};
};

struct UePlacement {
  UeId id;
  Vec2 position;
  int home_sector{0};  // sector it was dropped in
  bool in_hotspot{false};
  int serving_sector{0};
  double macro_sinr_db{0.0};
  std::optional<int> covering_ap;
  std::optional<double> ap_snr_db;
};

struct Topology {
  HexLayout layout{1, 500.0};
  std::vector<Sector> sectors;
  std::vector<SmallCell> small_cells;
  std::vector<UePlacement> ues;
};

namespace detail {

inline Vec2 drop_in_sector(const HexLayout& layout, Vec2 site, double boresight_deg, double min_dist,
                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double radius = layout.cell_radius();
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double rr = radius * std::sqrt(u01(rng));
    const double th = (boresight_deg + (u01(rng) * 120.0 - 60.0)) * std::numbers::pi / 180.0;
    const Vec2 rel{rr * std::cos(th), rr * std::sin(th)};
    if (rr < min_dist || !layout.in_hexagon(rel)) continue;
    return site + rel;
  }
  throw std::runtime_error("drop_in_sector: rejection sampling failed");
}

inline Vec2 drop_in_disk(Vec2 centre, double radius, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double rr = radius * std::sqrt(u01(rng));
  const double th = 2.0 * std::numbers::pi * u01(rng);
  return centre + Vec2{rr * std::cos(th), rr * std::sin(th)};
}

struct MacroLink {
  int serving{0};
  double sinr_db{0.0};
};

inline MacroLink macro_link(const Topology& topo, Vec2 pos, std::span<const double> site_shadow_db,
                            const RadioConfig& r) {
  const auto& sites = topo.layout.sites();
  std::vector<double> rx_mw(topo.sectors.size());
  for (std::size_t s = 0; s < topo.sectors.size(); ++s) {
    const auto& sec = topo.sectors[s];
    const Vec2 d = topo.layout.displacement(sites[sec.site], pos);
    const double az = std::atan2(d.y, d.x) * 180.0 / std::numbers::pi;
    const double gain = sector_antenna_gain_db(wrap_angle_deg(az - sec.boresight_deg), r);
    const double rx = r.macro_tx_power_dbm + gain - path_loss_db(LinkClass::Macro, d.norm(), r) +
                      site_shadow_db[sec.site];
    rx_mw[s] = db_to_linear(rx);
  }
  const auto best = std::max_element(rx_mw.begin(), rx_mw.end());
  double interference = db_to_linear(noise_dbm(r.macro_bandwidth_hz, r.ue_noise_figure_db));
  for (auto it = rx_mw.begin(); it != rx_mw.end(); ++it)
    if (it != best) interference += *it;
  return {static_cast<int>(best - rx_mw.begin()), linear_to_db(*best / interference)};
}

inline double smallcell_rx_dbm(const Topology& topo, const SmallCell& ap, Vec2 pos, double shadow_db,
                               const RadioConfig& r) {
  return ap.tx_power_dbm + r.sc_antenna_gain_dbi -
         path_loss_db(LinkClass::SmallCell, topo.layout.distance(ap.position, pos), r) + shadow_db;
}

}  // namespace detail

// Deterministic in (cfg, seed). UEs with neither macro capacity nor
// small-cell coverage are redrawn (bounded by max_ue_redraws per UE).
inline Topology generate_topology(const ScenarioConfig& cfg, std::uint64_t seed) {
  if (auto diags = validate(cfg); !diags.empty())
    throw std::invalid_argument("generate_topology: " + diags.front().field + " " + diags.front().message);
  const auto& tc = cfg.topology;
  const auto& rc = cfg.radio;

  Topology topo;
  topo.layout = HexLayout(tc.sites, tc.inter_site_distance_m);
  for (int site = 0; site < tc.sites; ++site)
    for (int s = 0; s < tc.sectors_per_site; ++s) topo.sectors.push_back({site, kSectorBoresightDeg[s]});
  const auto& sites = topo.layout.sites();

  // Small cells, uniform per sector; each picks the channel with the least
  // power received from the APs placed before it.
  auto ap_rng = make_rng(seed, Stream::SmallCells);
  for (std::size_t s = 0; s < topo.sectors.size(); ++s) {
    for (int i = 0; i < tc.small_cells_per_sector; ++i) {
      SmallCell ap;
      ap.sector = static_cast<int>(s);
      ap.tx_power_dbm = rc.sc_tx_power_dbm;
      ap.position = detail::drop_in_sector(topo.layout, sites[topo.sectors[s].site], topo.sectors[s].boresight_deg,
                                           tc.ap_min_site_distance_m, ap_rng);
      std::vector<double> power_mw(rc.sc_channels, 0.0);
      for (const auto& other : topo.small_cells)
        power_mw[other.channel] += db_to_linear(detail::smallcell_rx_dbm(topo, other, ap.position, 0.0, rc));
      ap.channel = static_cast<int>(std::min_element(power_mw.begin(), power_mw.end()) - power_mw.begin());
      topo.small_cells.push_back(ap);
    }
  }

  const double sc_noise_mw = db_to_linear(noise_dbm(rc.sc_bandwidth_hz, rc.ue_noise_figure_db));
  auto ue_rng = make_rng(seed, Stream::Ues);
  auto shadow_rng = make_rng(seed, Stream::Shadowing);
  std::normal_distribution<double> macro_shadow(0.0, rc.macro_shadowing_db);
  std::normal_distribution<double> sc_shadow(0.0, rc.sc_shadowing_db);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::vector<double> site_shadow(sites.size());
  std::vector<double> ap_rx_mw(topo.small_cells.size());
  std::uint32_t next_id = 0;
  for (std::size_t s = 0; s < topo.sectors.size(); ++s) {
    std::vector<int> sector_aps;
    for (std::size_t a = 0; a < topo.small_cells.size(); ++a)
      if (topo.small_cells[a].sector == static_cast<int>(s)) sector_aps.push_back(static_cast<int>(a));

    for (int i = 0; i < tc.ue_per_sector; ++i) {
      UePlacement ue;
      ue.id = UeId{next_id++};
      ue.home_sector = static_cast<int>(s);
      bool placed = false;
      for (int attempt = 0; attempt <= tc.max_ue_redraws && !placed; ++attempt) {
        ue.in_hotspot = !sector_aps.empty() && u01(ue_rng) < tc.hotspot_fraction;
        if (ue.in_hotspot) {
          const int pick = sector_aps[std::uniform_int_distribution<std::size_t>(0, sector_aps.size() - 1)(ue_rng)];
          ue.position = detail::drop_in_disk(topo.small_cells[pick].position, tc.hotspot_radius_m, ue_rng);
        } else {
          ue.position = detail::drop_in_sector(topo.layout, sites[topo.sectors[s].site],
                                               topo.sectors[s].boresight_deg, tc.ue_min_site_distance_m, ue_rng);
        }
        for (auto& v : site_shadow) v = macro_shadow(shadow_rng);
        const auto link = detail::macro_link(topo, ue.position, site_shadow, rc);
        ue.serving_sector = link.serving;
        ue.macro_sinr_db = link.sinr_db;

        ue.covering_ap.reset();
        ue.ap_snr_db.reset();
        if (!topo.small_cells.empty()) {
          for (std::size_t a = 0; a < topo.small_cells.size(); ++a)
            ap_rx_mw[a] = db_to_linear(detail::smallcell_rx_dbm(topo, topo.small_cells[a], ue.position,
                                                                sc_shadow(shadow_rng), rc));
          const auto best = static_cast<std::size_t>(std::max_element(ap_rx_mw.begin(), ap_rx_mw.end()) - ap_rx_mw.begin());
          double interference = sc_noise_mw;
          if (rc.sc_interference)
            for (std::size_t a = 0; a < topo.small_cells.size(); ++a)
              if (a != best && topo.small_cells[a].channel == topo.small_cells[best].channel)
                interference += ap_rx_mw[a];
          const double snr_db = linear_to_db(ap_rx_mw[best] / interference);
          if (smallcell_rate(snr_db, 1, rc) > 0.0) {
            ue.covering_ap = static_cast<int>(best);
            ue.ap_snr_db = snr_db;
          }
        }
        placed = macro_spectral_efficiency(ue.macro_sinr_db, rc.macro_map) > 0.0 || ue.covering_ap.has_value();
      }
      if (!placed)
        throw std::runtime_error("generate_topology: ue " + std::to_string(ue.id.value) +
                                 " has no coverage after " + std::to_string(tc.max_ue_redraws) + " redraws");
      topo.ues.push_back(ue);
    }
  }
  return topo;
}

// ---------------------------------------------------------------------------
// Per-UE radio view consumed by the simulator.

struct UeRadio {
  UeId id;
  int sector{0};
  double macro_sinr_db{0.0};
  double macro_peak_bps{0.0};
  std::optional<int> ap;
  std::optional<double> ap_snr_db;
  double ap_solo_rate_bps{0.0};  // rate with the AP to itself
};

struct RadioNetwork {
  int sector_count{0};
  int ap_count{0};
  std::vector<UeRadio> ues;  // ues[i].id.value == i
};

inline RadioNetwork build_network(const Topology& topo, const RadioConfig& rc) {
  RadioNetwork net;
  net.sector_count = static_cast<int>(topo.sectors.size());
  net.ap_count = static_cast<int>(topo.small_cells.size());
  net.ues.reserve(topo.ues.size());
  for (const auto& u : topo.ues) {
    UeRadio ur;
    ur.id = u.id;
    ur.sector = u.serving_sector;
    ur.macro_sinr_db = u.macro_sinr_db;
    ur.macro_peak_bps = rc.macro_bandwidth_hz * macro_spectral_efficiency(u.macro_sinr_db, rc.macro_map);
    ur.ap = u.covering_ap;
    ur.ap_snr_db = u.ap_snr_db;
    ur.ap_solo_rate_bps = u.ap_snr_db ? smallcell_rate(*u.ap_snr_db, 1, rc) : 0.0;
    net.ues.push_back(ur);
  }
  return net;
}

inline void write_topology_csv(std::ostream& os, const Topology& topo, const RadioConfig& rc) {
  os << "kind,id,x_m,y_m,sector,channel,serving_sector,macro_sinr_db,macro_peak_bps,ap,ap_snr_db,ap_solo_rate_bps\n";
  for (std::size_t a = 0; a < topo.small_cells.size(); ++a) {
    const auto& ap = topo.small_cells[a];
    os << "ap," << a << ',' << ap.position.x << ',' << ap.position.y << ',' << ap.sector << ',' << ap.channel
       << ",,,,,,\n";
  }
  for (const auto& u : topo.ues) {
    os << "ue," << u.id.value << ',' << u.position.x << ',' << u.position.y << ',' << u.home_sector << ",,"
       << u.serving_sector << ',' << u.macro_sinr_db << ','
       << rc.macro_bandwidth_hz * macro_spectral_efficiency(u.macro_sinr_db, rc.macro_map) << ',';
    if (u.covering_ap)
      os << *u.covering_ap << ',' << *u.ap_snr_db << ',' << smallcell_rate(*u.ap_snr_db, 1, rc);
    else
      os << ",,0";
    os << '\n';
  }
}

}  // namespace pfsplit
