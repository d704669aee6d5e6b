#pragma once

// Proportional-fair split of macro resources across UEs that aggregate a
// macrocell (anchor) leg with a small-cell (booster) leg reached over a
// delayed backhaul.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfsplit {

struct UeId {
  std::uint32_t value{};
  friend auto operator<=>(const UeId&, const UeId&) = default;
};

// Radio snapshot of one UE as seen by the macrocell at allocation time.
struct UeLinkState {
  UeId ue_id;
  double macro_peak_bps{0.0};      // W * c_k
  double smallcell_rate_bps{0.0};  // 0 outside small-cell coverage
  double backhaul_delay_s{0.0};
  double file_size_bits{0.0};
};

// Macro resource fractions, reported in the same order as the input states.
struct Allocation {
  std::vector<UeId> ue_ids;
  std::vector<double> fractions;
  double water_level{0.0};
  std::vector<UeId> active_set;  // ascending ue_id

  std::size_t size() const { return fractions.size(); }

  double fraction_of(UeId id) const {
    for (std::size_t i = 0; i < ue_ids.size(); ++i)
      if (ue_ids[i] == id) return fractions[i];
    throw std::out_of_range("ue " + std::to_string(id.value) + " not in allocation");
  }
};

namespace detail {

inline void require_finite_nonneg(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0)
    throw std::invalid_argument(std::string(what) + " must be finite and >= 0");
}

inline void validate_state(const UeLinkState& s) {
  require_finite_nonneg(s.macro_peak_bps, "macro_peak_bps");
  require_finite_nonneg(s.smallcell_rate_bps, "smallcell_rate_bps");
  require_finite_nonneg(s.backhaul_delay_s, "backhaul_delay_s");
  if (!std::isfinite(s.file_size_bits) || s.file_size_bits <= 0.0)
    throw std::invalid_argument("file_size_bits must be finite and > 0");
  if (s.macro_peak_bps == 0.0 && s.smallcell_rate_bps == 0.0)
    throw std::invalid_argument("ue " + std::to_string(s.ue_id.value) +
                                " has no macro capacity and no small-cell rate");
}

}  // namespace detail

// Rate seen on the small-cell leg once the one-off backhaul delay is
// amortized over the file: f / (l + f / r).
inline double effective_rate(double r_bps, double delay_s, double file_bits) {
  detail::require_finite_nonneg(r_bps, "rate");
  detail::require_finite_nonneg(delay_s, "delay");
  if (!std::isfinite(file_bits) || file_bits <= 0.0)
    throw std::invalid_argument("file size must be finite and > 0");
  if (r_bps == 0.0) return 0.0;
  if (delay_s == 0.0) return r_bps;
  return 1.0 / (1.0 / r_bps + delay_s / file_bits);
}

inline double effective_rate(const UeLinkState& s) {
  return effective_rate(s.smallcell_rate_bps, s.backhaul_delay_s, s.file_size_bits);
}

// r_eff / p, the height of the UE's "cup". +inf for a UE without macro
// capacity, which is therefore never given macro resources.
inline double rate_ratio(const UeLinkState& s) {
  if (s.macro_peak_bps == 0.0) return std::numeric_limits<double>::infinity();
  return effective_rate(s) / s.macro_peak_bps;
}

// Sum-log utility of an allocation, sum_k log(r_eff,k + alpha_k p_k).
inline double objective(std::span<const UeLinkState> states, std::span<const double> alpha) {
  if (states.size() != alpha.size()) throw std::invalid_argument("size mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k)
    total += std::log(effective_rate(states[k]) + alpha[k] * states[k].macro_peak_bps);
  return total;
}

namespace detail {

inline Allocation finish_allocation(std::span<const UeLinkState> states, std::vector<double> alpha,
                                    double level) {
  Allocation out;
  out.ue_ids.reserve(states.size());
  out.active_set.reserve(states.size());
  for (const auto& s : states) out.ue_ids.push_back(s.ue_id);
  for (std::size_t k = 0; k < states.size(); ++k)
    if (alpha[k] > 0.0) out.active_set.push_back(states[k].ue_id);
  if (!std::is_sorted(out.active_set.begin(), out.active_set.end()))
    std::sort(out.active_set.begin(), out.active_set.end());
  out.fractions = std::move(alpha);
  out.water_level = level;
  return out;
}

// Correctly rounded running sum (Shewchuk partials). The rounded value depends
// only on the multiset of addends, never on their order.
class ExactSum {
 public:
  void add(double x) {
    std::size_t used = 0;
    for (double y : partials_) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[used++] = lo;
      x = hi;
    }
    partials_.resize(used);
    partials_.push_back(x);
  }

  double value() const {
    if (partials_.empty()) return 0.0;
    auto i = partials_.size() - 1;
    double hi = partials_[i];
    double lo = 0.0;
    while (i > 0) {
      const double x = hi;
      const double y = partials_[--i];
      hi = x + y;
      lo = y - (hi - x);
      if (lo != 0.0) break;
    }
    // Half-way case: the remaining partials decide the rounding direction.
    if (i > 0 && ((lo < 0.0 && partials_[i - 1] < 0.0) || (lo > 0.0 && partials_[i - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

 private:
  std::vector<double> partials_;
};

}  // namespace detail

// Water-filling allocation maximizing sum_k log(r_eff,k + alpha_k p_k) over
// the simplex. With UEs ranked by r_eff/p, the survivors are the longest
// prefix whose last member still gets a positive fraction at the common level
// B = (sum of survivor ratios + 1) / survivors; each survivor gets
// B - r_eff/p. A ratio x survives iff sum over ratios y <= x of (x - y) < 1,
// which is monotone in x, so the prefix is found by a median-pivot search
// instead of a full sort (linear in K).
//
// When every UE lacks macro capacity the macro carries nothing: all
// fractions are zero and the level is +inf.
inline Allocation opt_alloc(std::span<const UeLinkState> states) {
  if (states.empty()) throw std::invalid_argument("opt_alloc: empty input");
  for (const auto& s : states) detail::validate_state(s);

  const std::size_t count = states.size();
  std::vector<double> ratio(count);
  std::vector<double> work;
  work.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    ratio[k] = rate_ratio(states[k]);
    if (std::isfinite(ratio[k])) work.push_back(ratio[k]);  // macro-dead UEs never survive
  }
  std::vector<double> alpha(count, 0.0);
  if (work.empty()) return detail::finish_allocation(states, std::move(alpha), std::numeric_limits<double>::infinity());

  detail::ExactSum survivor_sum;
  std::size_t survivors = 0;
  auto lo = work.begin(), hi = work.end();
  while (lo != hi) {
    const auto mid = lo + (hi - lo) / 2;
    std::nth_element(lo, mid, hi);
    const double pivot = *mid;
    const auto less_end = std::partition(lo, hi, [pivot](double x) { return x < pivot; });
    const auto equal_end = std::partition(less_end, hi, [pivot](double x) { return x == pivot; });
    auto sum = survivor_sum;
    for (auto it = lo; it != equal_end; ++it) sum.add(*it);
    const std::size_t n = survivors + static_cast<std::size_t>(equal_end - lo);
    if (static_cast<double>(n) * pivot - sum.value() < 1.0) {
      survivor_sum = sum;
      survivors = n;
      lo = equal_end;
    } else {
      hi = less_end;
    }
  }
  // The smallest ratio always survives.
  assert(survivors >= 1);

  const double level = (survivor_sum.value() + 1.0) / static_cast<double>(survivors);
  for (std::size_t k = 0; k < count; ++k)
    if (ratio[k] < level) alpha[k] = level - ratio[k];
  return detail::finish_allocation(states, std::move(alpha), level);
}

inline Allocation opt_alloc(const std::vector<UeLinkState>& states) {
  return opt_alloc(std::span<const UeLinkState>(states));
}

// Fraction of a file's bits sent over the macro leg so that both legs carry
// bits in proportion to their rates.
inline double split_ratio(double alpha, double macro_peak_bps, double r_eff_bps) {
  detail::require_finite_nonneg(alpha, "alpha");
  detail::require_finite_nonneg(macro_peak_bps, "macro_peak_bps");
  detail::require_finite_nonneg(r_eff_bps, "r_eff");
  const double macro_rate = alpha * macro_peak_bps;
  if (macro_rate == 0.0 && r_eff_bps == 0.0)
    throw std::invalid_argument("split_ratio: both legs have zero rate");
  return macro_rate / (macro_rate + r_eff_bps);
}

// Delay-equalizing split: macro fraction x minimizing
// max(x f / (alpha p), l + (1 - x) f / r).
inline double de_split(double alpha, double macro_peak_bps, double r_bps, double delay_s,
                       double file_bits) {
  detail::require_finite_nonneg(alpha, "alpha");
  detail::require_finite_nonneg(macro_peak_bps, "macro_peak_bps");
  detail::require_finite_nonneg(r_bps, "rate");
  detail::require_finite_nonneg(delay_s, "delay");
  if (!std::isfinite(file_bits) || file_bits <= 0.0)
    throw std::invalid_argument("file size must be finite and > 0");
  const double macro_rate = alpha * macro_peak_bps;
  if (macro_rate == 0.0 && r_bps == 0.0)
    throw std::invalid_argument("de_split: both legs have zero rate");
  if (r_bps == 0.0) return 1.0;
  if (macro_rate == 0.0) return 0.0;
  const double macro_time = file_bits / macro_rate;
  const double small_time = file_bits / r_bps;
  // Macro alone beats the backhaul delay: nothing is worth sending the slow way.
  if (delay_s >= macro_time) return 1.0;
  return (delay_s + small_time) / (macro_time + small_time);
}

// Reference solver for opt_alloc: bisection on the water level A such that
// sum_k max(0, A - r_eff,k/p_k) = 1. Independent of the sort-and-eliminate
// path; used by tests and benchmarks only.
inline Allocation oracle_alloc(std::span<const UeLinkState> states, double tol,
                               int max_iterations = 400) {
  if (states.empty()) throw std::invalid_argument("oracle_alloc: empty input");
  if (!(tol > 0.0)) throw std::invalid_argument("oracle_alloc: tol must be > 0");
  for (const auto& s : states) detail::validate_state(s);

  std::vector<double> ratio(states.size());
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < states.size(); ++k) {
    ratio[k] = rate_ratio(states[k]);
    lo = std::min(lo, ratio[k]);
  }
  std::vector<double> alpha(states.size(), 0.0);
  if (std::isinf(lo))
    return detail::finish_allocation(states, std::move(alpha), lo);

  auto poured = [&](double level) {
    double sum = 0.0;
    for (double r : ratio)
      if (level > r) sum += level - r;
    return sum;
  };
  // poured(lo) = 0 and poured(lo + 1) >= 1.
  double hi = lo + 1.0;
  int it = 0;
  for (; it < max_iterations && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (poured(mid) < 1.0 ? lo : hi) = mid;
  }
  const double level = 0.5 * (lo + hi);
  for (std::size_t k = 0; k < states.size(); ++k) alpha[k] = std::max(0.0, level - ratio[k]);

  // The bracket width bounds each fraction's error; the objective moves by at
  // most sum_k p_k * err / (r_eff,k + alpha_k p_k).
  const double width = hi - lo;
  double objective_error = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (ratio[k] >= hi) continue;
    const double denom = effective_rate(states[k]) + alpha[k] * states[k].macro_peak_bps;
    objective_error += states[k].macro_peak_bps * width / denom;
  }
  if (objective_error > tol)
    throw std::runtime_error("oracle_alloc: did not converge within " +
                             std::to_string(max_iterations) + " iterations");
  return detail::finish_allocation(states, std::move(alpha), level);
}

inline Allocation oracle_alloc(const std::vector<UeLinkState>& states, double tol) {
  return oracle_alloc(std::span<const UeLinkState>(states), tol);
}

}  // namespace pfsplit
