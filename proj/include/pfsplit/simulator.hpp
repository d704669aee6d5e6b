#pragma once

// Fluid-flow discrete-event engine. Files arrive per UE as a Poisson process
// and are served FIFO; the head-of-line file drains over a macro leg and a
// small-cell leg whose rates stay constant between events. The small-cell
// leg of a file opens one backhaul delay after its first bits are assigned
// to it. Every arrival, leg completion, and backhaul gate opening
// re-allocates the affected sectors and APs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfsplit/allocator.hpp"
#include "pfsplit/baselines.hpp"
#include "pfsplit/radio.hpp"
#include "pfsplit/random.hpp"
#include "pfsplit/records.hpp"
#include "pfsplit/scenario.hpp"

namespace pfsplit {

// Poisson arrival times in [0, duration_s) for one UE; the substream depends
// only on (seed, ue_id).
inline std::vector<double> arrivals(UeId ue_id, std::uint64_t seed, double duration_s,
                                    double mean_interarrival_s = 1.0) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw std::invalid_argument("arrivals: duration must be > 0");
  if (!(mean_interarrival_s > 0.0)) throw std::invalid_argument("arrivals: mean inter-arrival must be > 0");
  auto rng = make_rng(seed, Stream::Arrivals, ue_id.value);
  std::exponential_distribution<double> gap(1.0 / mean_interarrival_s);
  std::vector<double> out;
  for (double t = gap(rng); t < duration_s; t += gap(rng)) out.push_back(t);
  return out;
}

class FluidSimulator {
 public:
  // Remaining pieces smaller than this are not worth a leg of their own.
  static constexpr double kFragmentBits = 1e-3;

  FluidSimulator(const RadioNetwork& net, PolicyConfig policy, TrafficConfig traffic, SimulationConfig sim,
                 std::ostream* trace = nullptr)
      : net_(net), policy_(policy), traffic_(traffic), sim_(sim), trace_(trace) {
    for (std::size_t i = 0; i < net_.ues.size(); ++i) {
      const auto& u = net_.ues[i];
      if (u.id.value != i) throw std::invalid_argument("RadioNetwork: ue ids must equal their index");
      if (u.sector < 0 || u.sector >= net_.sector_count) throw std::invalid_argument("RadioNetwork: bad sector");
      if (u.ap && (*u.ap < 0 || *u.ap >= net_.ap_count)) throw std::invalid_argument("RadioNetwork: bad ap");
      if (u.macro_peak_bps <= 0.0 && (!u.ap || u.ap_solo_rate_bps <= 0.0))
        throw std::invalid_argument("scenario infeasible: ue " + std::to_string(i) + " has no coverage on either RAT");
    }
    sector_ues_.resize(net_.sector_count);
    ap_ues_.resize(net_.ap_count);
    for (std::size_t i = 0; i < net_.ues.size(); ++i) {
      sector_ues_[net_.ues[i].sector].push_back(static_cast<std::uint32_t>(i));
      if (net_.ues[i].ap) ap_ues_[*net_.ues[i].ap].push_back(static_cast<std::uint32_t>(i));
    }
  }

  SimulationResult run(const std::vector<std::vector<double>>& arrival_times);

 private:
  enum class EventKind : std::uint8_t { LegCompletion = 0, ReallocationDue = 1, Arrival = 2 };
  enum class Leg : std::uint8_t { Macro, Small };
  static constexpr std::uint64_t kNoFlow = std::numeric_limits<std::uint64_t>::max();

  struct Event {
    double time;
    EventKind kind;
    std::uint64_t flow_id;
    std::uint32_t ue;
    Leg leg;
    std::uint64_t version;
    std::uint64_t seq;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      if (a.kind != b.kind) return a.kind > b.kind;
      if (a.flow_id != b.flow_id) return a.flow_id > b.flow_id;
      return a.seq > b.seq;
    }
  };

  struct UeState {
    std::deque<std::uint64_t> queue;
    double macro_rate{0.0};
    double small_rate{0.0};
    double last_update{0.0};
    std::uint64_t version{0};
    Route route{Route::MacroOnly};
    bool reschedule{false};
  };
  struct FlowState {
    double macro_rem{0.0};
    double small_rem{0.0};
    double macro_served{0.0};
    double small_served{0.0};
    double gate{std::numeric_limits<double>::quiet_NaN()};
  };
  struct BusyClock {
    bool busy{false};
    double since{0.0};
    double accumulated{0.0};
  };

  bool has_head(std::uint32_t u) const { return !ues_[u].queue.empty(); }
  FlowState& head(std::uint32_t u) { return flow_state_[ues_[u].queue.front()]; }
  const FlowState& head(std::uint32_t u) const { return flow_state_[ues_[u].queue.front()]; }

  bool small_open(const FlowState& f) const { return !std::isnan(f.gate) && f.gate <= now_; }
  bool is_member(std::uint32_t u) const {
    return has_head(u) && net_.ues[u].ap && small_open(head(u)) && head(u).small_rem > 0.0;
  }

  void trace(const char* kind, std::uint64_t flow, std::uint32_t ue, const std::string& detail) {
    if (!trace_) return;
    *trace_ << now_ << ',' << kind << ',';
    if (flow != kNoFlow) *trace_ << flow;
    *trace_ << ',';
    if (ue != std::numeric_limits<std::uint32_t>::max()) *trace_ << ue;
    *trace_ << ',' << detail << '\n';
  }

  void push(double time, EventKind kind, std::uint64_t flow, std::uint32_t ue, Leg leg = Leg::Macro,
            std::uint64_t version = 0) {
    heap_.push(Event{time, kind, flow, ue, leg, version, seq_++});
  }

  void advance(std::uint32_t u) {
    auto& st = ues_[u];
    const double dt = now_ - st.last_update;
    st.last_update = now_;
    if (dt <= 0.0 || st.queue.empty()) return;
    auto& f = head(u);
    const double dm = std::min(f.macro_rem, st.macro_rate * dt);
    f.macro_rem -= dm;
    f.macro_served += dm;
    const double ds = std::min(f.small_rem, st.small_rate * dt);
    f.small_rem -= ds;
    f.small_served += ds;
  }

  void mark_ue(std::uint32_t u) {
    dirty_sectors_.insert(net_.ues[u].sector);
    if (net_.ues[u].ap) dirty_aps_.insert(*net_.ues[u].ap);
  }

  void set_gate(std::uint32_t u, std::uint64_t flow_id) {
    auto& f = flow_state_[flow_id];
    if (!std::isnan(f.gate)) return;
    f.gate = now_ + sim_.backhaul_delay_s;
    flows_[flow_id].smallcell_available_s = f.gate;
    if (sim_.backhaul_delay_s > 0.0) push(f.gate, EventKind::ReallocationDue, flow_id, u);
  }

  void start_head(std::uint32_t u) {
    auto& st = ues_[u];
    const auto id = st.queue.front();
    auto& f = flow_state_[id];
    const auto& radio = net_.ues[u];
    f.macro_rem = flows_[id].size_bits;
    st.reschedule = true;
    if (splits_traffic(policy_.policy)) return;  // split at the next sector reallocation

    Route route = route_for(policy_, radio.macro_sinr_db, radio.ap ? radio.ap_snr_db : std::nullopt);
    if (route == Route::MacroOnly && radio.macro_peak_bps <= 0.0) route = Route::SmallCellOnly;
    if (route == Route::SmallCellOnly && radio.ap_solo_rate_bps <= 0.0) route = Route::MacroOnly;
    st.route = route;
    if (route == Route::SmallCellOnly) {
      f.small_rem = f.macro_rem;
      f.macro_rem = 0.0;
      set_gate(u, id);
    }
  }

  void complete_head(std::uint32_t u) {
    auto& st = ues_[u];
    const auto id = st.queue.front();
    auto& f = flow_state_[id];
    auto& rec = flows_[id];
    rec.completion_s = now_;
    rec.macro_bits = f.macro_served + f.macro_rem;
    rec.smallcell_bits = rec.size_bits - rec.macro_bits;
    trace("complete", id, u, "macro_bits=" + std::to_string(rec.macro_bits));
    st.queue.pop_front();
    st.macro_rate = 0.0;
    st.small_rate = 0.0;
    st.reschedule = true;
    ++st.version;
    ++completed_;
    mark_ue(u);
    if (!st.queue.empty()) start_head(u);
  }

  // Brings u up to date and retires head files with nothing left to send.
  void settle(std::uint32_t u) {
    advance(u);
    while (has_head(u) && head(u).macro_rem + head(u).small_rem < kFragmentBits) complete_head(u);
  }

  void resplit(std::uint32_t u, double macro_fraction) {
    auto& f = head(u);
    const double total = f.macro_rem + f.small_rem;
    double x = macro_fraction;
    if (total * (1.0 - x) < kFragmentBits) x = 1.0;
    else if (total * x < kFragmentBits) x = 0.0;
    const double macro = x * total;
    const double small = total - macro;
    if (macro != f.macro_rem || small != f.small_rem) ues_[u].reschedule = true;
    f.macro_rem = macro;
    f.small_rem = small;
    if (small > 0.0) set_gate(u, ues_[u].queue.front());
  }

  void set_macro_rate(std::uint32_t u, double rate) {
    auto& st = ues_[u];
    if (st.macro_rate != rate) st.reschedule = true;
    st.macro_rate = rate;
  }

  // Small-cell rate the macro believes u would get if served now.
  double reported_small_rate(std::uint32_t u) const {
    const auto& radio = net_.ues[u];
    if (!radio.ap) return 0.0;
    int count = ap_count_[*radio.ap];
    if (sim_.feedback_lag && sim_.backhaul_delay_s > 0.0) count = lagged_count(*radio.ap);
    if (!is_member(u)) ++count;
    return radio.ap_solo_rate_bps / std::max(1, count);
  }

  int lagged_count(int ap) const {
    const auto& log = ap_history_[ap];
    const double t = now_ - sim_.backhaul_delay_s;
    int count = 0;
    for (auto it = log.rbegin(); it != log.rend(); ++it)
      if (it->first <= t) {
        count = it->second;
        break;
      }
    return count;
  }

  void update_busy(BusyClock& clock, bool busy) {
    if (busy == clock.busy) return;
    if (clock.busy) clock.accumulated += overlap(clock.since, now_);
    clock.busy = busy;
    clock.since = now_;
  }
  double overlap(double a, double b) const {
    return std::max(0.0, std::min(b, window_end_) - std::max(a, window_start_));
  }

  void reallocate_sector(int sector);
  void reallocate_ap(int ap, bool cascade);
  void reallocate();
  void schedule(std::uint32_t u);

  const RadioNetwork& net_;
  PolicyConfig policy_;
  TrafficConfig traffic_;
  SimulationConfig sim_;
  std::ostream* trace_;

  std::vector<std::vector<std::uint32_t>> sector_ues_;
  std::vector<std::vector<std::uint32_t>> ap_ues_;
  std::vector<UeState> ues_;
  std::vector<FlowRecord> flows_;
  std::vector<FlowState> flow_state_;
  std::vector<int> ap_count_;
  std::vector<std::vector<std::pair<double, int>>> ap_history_;
  std::vector<BusyClock> sector_busy_;
  std::vector<BusyClock> ap_busy_;
  std::set<int> dirty_sectors_;
  std::set<int> dirty_aps_;
  std::vector<std::uint32_t> touched_;
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t seq_{0};
  std::size_t completed_{0};
  double now_{0.0};
  double window_start_{0.0};
  double window_end_{0.0};
  RunDiagnostics diag_;
};

inline void FluidSimulator::reallocate_sector(int sector) {
  ++diag_.sector_reallocations;
  std::vector<std::uint32_t> active;
  for (auto u : sector_ues_[sector]) {
    if (!has_head(u)) continue;
    settle(u);
    if (has_head(u)) active.push_back(u);
  }
  for (auto u : active) {
    touched_.push_back(u);
    if (net_.ues[u].ap) dirty_aps_.insert(*net_.ues[u].ap);
  }

  if (!active.empty()) {
    switch (policy_.policy) {
      case Policy::Proposed: {
        std::vector<UeLinkState> states;
        states.reserve(active.size());
        for (auto u : active) {
          const auto& f = head(u);
          const double residual = std::isnan(f.gate) ? sim_.backhaul_delay_s : std::max(0.0, f.gate - now_);
          states.push_back({net_.ues[u].id, net_.ues[u].macro_peak_bps, reported_small_rate(u), residual,
                            f.macro_rem + f.small_rem});
        }
        const Allocation alloc = opt_alloc(states);
        for (std::size_t k = 0; k < active.size(); ++k) {
          const double alpha = alloc.fractions[k];
          resplit(active[k], split_ratio(alpha, states[k].macro_peak_bps, effective_rate(states[k])));
          set_macro_rate(active[k], alpha * states[k].macro_peak_bps);
        }
        if (sim_.check_snapshot_dominance) {
          const double best = objective(states, alloc.fractions);
          std::vector<double> equal(states.size(), 1.0 / static_cast<double>(states.size()));
          std::size_t with_macro = 0;
          for (const auto& s : states) with_macro += s.macro_peak_bps > 0.0;
          std::vector<double> de(states.size(), 0.0);
          for (std::size_t k = 0; k < states.size(); ++k)
            if (states[k].macro_peak_bps > 0.0) de[k] = 1.0 / static_cast<double>(with_macro);
          for (const auto* other : {&equal, &de}) {
            const double value = objective(states, *other);
            const double margin = best - value;
            ++diag_.dominance_checks;
            diag_.worst_dominance_margin = std::min(diag_.worst_dominance_margin, margin);
            if (margin < -1e-9 * std::max(1.0, std::abs(value))) ++diag_.dominance_violations;
          }
        }
        break;
      }
      case Policy::DE: {
        std::size_t with_macro = 0;
        for (auto u : active) with_macro += net_.ues[u].macro_peak_bps > 0.0;
        for (auto u : active) {
          const double p = net_.ues[u].macro_peak_bps;
          const double alpha = p > 0.0 ? 1.0 / static_cast<double>(with_macro) : 0.0;
          const auto& f = head(u);
          const double residual = std::isnan(f.gate) ? sim_.backhaul_delay_s : std::max(0.0, f.gate - now_);
          resplit(u, de_split(alpha, p, reported_small_rate(u), residual, f.macro_rem + f.small_rem));
          set_macro_rate(u, alpha * p);
        }
        break;
      }
      case Policy::WP:
      case Policy::Rel12: {
        std::size_t on_macro = 0;
        for (auto u : active) on_macro += head(u).macro_rem > 0.0;
        for (auto u : active)
          set_macro_rate(u, head(u).macro_rem > 0.0 ? net_.ues[u].macro_peak_bps / static_cast<double>(on_macro) : 0.0);
        break;
      }
    }
  }
  bool busy = false;
  for (auto u : active) busy = busy || ues_[u].macro_rate > 0.0;
  update_busy(sector_busy_[sector], busy);
}

inline void FluidSimulator::reallocate_ap(int ap, bool cascade) {
  for (auto u : ap_ues_[ap])
    if (has_head(u)) settle(u);
  int count = 0;
  for (auto u : ap_ues_[ap]) count += is_member(u);
  if (count != ap_count_[ap]) {
    ap_count_[ap] = count;
    if (sim_.feedback_lag) {
      auto& log = ap_history_[ap];
      log.emplace_back(now_, count);
      // Keep one entry at or before the lag horizon.
      std::size_t drop = 0;
      while (drop + 1 < log.size() && log[drop + 1].first <= now_ - sim_.backhaul_delay_s) ++drop;
      log.erase(log.begin(), log.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    if (cascade && splits_traffic(policy_.policy))
      for (auto u : ap_ues_[ap])
        if (has_head(u)) dirty_sectors_.insert(net_.ues[u].sector);
  }
  for (auto u : ap_ues_[ap]) {
    if (!has_head(u)) continue;
    const double rate = is_member(u) ? net_.ues[u].ap_solo_rate_bps / count : 0.0;
    if (ues_[u].small_rate != rate) ues_[u].reschedule = true;
    ues_[u].small_rate = rate;
    touched_.push_back(u);
  }
  update_busy(ap_busy_[ap], count > 0);
}

inline void FluidSimulator::reallocate() {
  // Rate changes on an AP feed back into the split of its UEs' sectors; the
  // feedback is followed for a few rounds, activity changes always.
  constexpr int kCascadeRounds = 3;
  for (int round = 0; !dirty_sectors_.empty() || !dirty_aps_.empty(); ++round) {
    if (round > 1000) throw std::runtime_error("reallocation did not settle");
    while (!dirty_sectors_.empty()) {
      const int s = *dirty_sectors_.begin();
      dirty_sectors_.erase(dirty_sectors_.begin());
      reallocate_sector(s);
    }
    std::set<int> aps;
    aps.swap(dirty_aps_);
    for (int a : aps) reallocate_ap(a, round < kCascadeRounds);
  }
  std::sort(touched_.begin(), touched_.end());
  touched_.erase(std::unique(touched_.begin(), touched_.end()), touched_.end());
  for (auto u : touched_) schedule(u);
  touched_.clear();
}

inline void FluidSimulator::schedule(std::uint32_t u) {
  auto& st = ues_[u];
  if (!st.reschedule) return;
  st.reschedule = false;
  ++st.version;
  if (!has_head(u)) return;
  const auto& f = head(u);
  double best = std::numeric_limits<double>::infinity();
  Leg leg = Leg::Macro;
  if (st.macro_rate > 0.0 && f.macro_rem > 0.0) best = now_ + f.macro_rem / st.macro_rate;
  if (st.small_rate > 0.0 && f.small_rem > 0.0) {
    const double t = now_ + f.small_rem / st.small_rate;
    if (t < best) {
      best = t;
      leg = Leg::Small;
    }
  }
  if (std::isfinite(best)) push(best, EventKind::LegCompletion, st.queue.front(), u, leg, st.version);
}

inline SimulationResult FluidSimulator::run(const std::vector<std::vector<double>>& arrival_times) {
  if (arrival_times.size() != net_.ues.size()) throw std::invalid_argument("run: one arrival list per UE required");

  struct Pending {
    double time;
    std::uint32_t ue;
  };
  std::vector<Pending> pending;
  for (std::uint32_t u = 0; u < arrival_times.size(); ++u)
    for (double t : arrival_times[u]) {
      if (!std::isfinite(t) || t < 0.0) throw std::invalid_argument("run: arrival times must be finite and >= 0");
      pending.push_back({t, u});
    }
  std::sort(pending.begin(), pending.end(),
            [](const Pending& a, const Pending& b) { return a.time != b.time ? a.time < b.time : a.ue < b.ue; });

  ues_.assign(net_.ues.size(), UeState{});
  flows_.assign(pending.size(), FlowRecord{});
  flow_state_.assign(pending.size(), FlowState{});
  ap_count_.assign(net_.ap_count, 0);
  ap_history_.assign(net_.ap_count, {{-std::numeric_limits<double>::infinity(), 0}});
  sector_busy_.assign(net_.sector_count, BusyClock{});
  ap_busy_.assign(net_.ap_count, BusyClock{});
  heap_ = {};
  seq_ = 0;
  completed_ = 0;
  now_ = 0.0;
  diag_ = RunDiagnostics{};
  window_start_ = sim_.warmup_s;
  window_end_ = sim_.warmup_s + sim_.measured_s;

  for (std::size_t i = 0; i < pending.size(); ++i) {
    auto& rec = flows_[i];
    rec.flow_id = i;
    rec.ue_id = net_.ues[pending[i].ue].id;
    rec.arrival_s = pending[i].time;
    rec.size_bits = traffic_.file_size_bits;
    rec.measured = rec.arrival_s >= window_start_ && rec.arrival_s < window_end_;
  }
  if (sim_.reallocation == Reallocation::Periodic && !pending.empty())
    push(sim_.reallocation_period_s, EventKind::ReallocationDue, kNoFlow, std::numeric_limits<std::uint32_t>::max());

  std::size_t next_arrival = 0;
  while (next_arrival < pending.size() || !heap_.empty()) {
    if (++diag_.events > sim_.max_events)
      throw std::runtime_error("event limit of " + std::to_string(sim_.max_events) + " exceeded");
    const bool take_arrival =
        next_arrival < pending.size() &&
        (heap_.empty() || Later{}(heap_.top(), Event{pending[next_arrival].time, EventKind::Arrival,
                                                     next_arrival, 0, Leg::Macro, 0, 0}));
    if (take_arrival) {
      const auto id = static_cast<std::uint64_t>(next_arrival++);
      const std::uint32_t u = pending[id].ue;
      now_ = flows_[id].arrival_s;
      trace("arrival", id, u, "size_bits=" + std::to_string(flows_[id].size_bits));
      advance(u);
      ues_[u].queue.push_back(id);
      if (ues_[u].queue.size() == 1) start_head(u);
      mark_ue(u);
    } else {
      const Event ev = heap_.top();
      heap_.pop();
      if (ev.kind == EventKind::LegCompletion) {
        auto& st = ues_[ev.ue];
        if (ev.version != st.version || !has_head(ev.ue) || st.queue.front() != ev.flow_id) continue;
        now_ = ev.time;
        advance(ev.ue);
        auto& f = head(ev.ue);
        if (ev.leg == Leg::Macro) {
          f.macro_served += f.macro_rem;
          f.macro_rem = 0.0;
        } else {
          f.small_served += f.small_rem;
          f.small_rem = 0.0;
        }
        trace("leg_completion", ev.flow_id, ev.ue, ev.leg == Leg::Macro ? "macro" : "small");
        st.reschedule = true;
        settle(ev.ue);
        mark_ue(ev.ue);
        touched_.push_back(ev.ue);
      } else if (ev.flow_id == kNoFlow) {
        now_ = ev.time;
        trace("reallocation", kNoFlow, ev.ue, "periodic");
        for (int s = 0; s < net_.sector_count; ++s)
          for (auto u : sector_ues_[s])
            if (has_head(u)) {
              dirty_sectors_.insert(s);
              break;
            }
        if (next_arrival < pending.size() || completed_ < flows_.size())
          push(now_ + sim_.reallocation_period_s, EventKind::ReallocationDue, kNoFlow, ev.ue);
      } else {
        const std::uint32_t u = ev.ue;
        if (flows_[ev.flow_id].completed()) continue;
        now_ = ev.time;
        trace("reallocation", ev.flow_id, u, "backhaul_gate");
        if (has_head(u) && ues_[u].queue.front() == ev.flow_id) {
          settle(u);
          mark_ue(u);
        }
      }
    }
    reallocate();
  }

  const double end = now_;
  for (auto& c : sector_busy_) update_busy(c, false);
  for (auto& c : ap_busy_) update_busy(c, false);
  const double window = overlap(window_start_, std::max(end, window_end_));
  auto utilization = [&](const std::vector<BusyClock>& clocks) {
    if (clocks.empty() || window <= 0.0) return 0.0;
    double sum = 0.0;
    for (const auto& c : clocks) sum += c.accumulated;
    return sum / (window * static_cast<double>(clocks.size()));
  };

  SimulationResult result;
  result.macro_utilization = utilization(sector_busy_);
  result.smallcell_utilization = utilization(ap_busy_);
  result.diagnostics = diag_;
  result.flows = std::move(flows_);
  return result;
}

}  // namespace pfsplit
