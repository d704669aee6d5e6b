#pragma once

// Experiment orchestration: expands the policy x load x delay x seed
// cross-product, runs it on a worker pool, and writes flows.csv,
// summary.csv, cdf.csv (plus per-point CDFs) and manifest.json.

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "pfsplit/config.hpp"
#include "pfsplit/metrics.hpp"
#include "pfsplit/pipeline.hpp"
#include "pfsplit/random.hpp"

#ifndef PFSPLIT_VERSION
#define PFSPLIT_VERSION "unknown"
#endif

namespace pfsplit {

// Topology and arrivals depend on (master seed, load, replicate) only, so
// every policy and every delay of a replicate sees the same drop and traffic.
inline std::uint64_t run_seed(std::uint64_t master_seed, int ue_per_sector, std::uint64_t replicate_seed) {
  return derive_seed({master_seed, static_cast<std::uint64_t>(ue_per_sector), replicate_seed});
}

// Runs job(0..n-1) on `jobs` threads. The first exception is rethrown.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& job) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers == 1 || n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

struct RunSpec {
  Policy policy{Policy::Proposed};
  int ue_per_sector{0};
  double backhaul_delay_ms{0.0};
  std::uint64_t replicate_seed{0};
  std::uint64_t seed{0};
  double rel12_threshold_db{0.0};
};

inline std::vector<RunSpec> expand_runs(const ExperimentConfig& cfg) {
  std::vector<RunSpec> runs;
  for (int ues : cfg.ue_per_sector)
    for (double delay : cfg.backhaul_delay_ms)
      for (Policy p : cfg.policies)
        for (auto rep : cfg.seeds)
          runs.push_back({p, ues, delay, rep, run_seed(cfg.master_seed, ues, rep),
                          cfg.base.policy.rel12_sinr_threshold_db});
  return runs;
}

struct TuningPoint {
  int ue_per_sector{0};
  double backhaul_delay_ms{0.0};
  Rel12Tuning tuning;
};

// Rel12 threshold search for every (load, delay) of the experiment.
inline std::vector<TuningPoint> tune_rel12_points(const ExperimentConfig& cfg, const std::vector<double>& grid,
                                                  int jobs) {
  struct Cell {
    std::size_t point;
    std::size_t grid_index;
    std::uint64_t seed;
  };
  std::vector<TuningPoint> points;
  std::vector<Cell> cells;
  for (int ues : cfg.ue_per_sector)
    for (double delay : cfg.backhaul_delay_ms) {
      points.push_back({ues, delay, {}});
      for (std::size_t g = 0; g < grid.size(); ++g)
        for (auto rep : cfg.seeds) cells.push_back({points.size() - 1, g, run_seed(cfg.master_seed, ues, rep)});
    }
  std::vector<double> edge(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const auto& c = cells[i];
    ScenarioConfig s = cfg.scenario(Policy::Rel12, points[c.point].ue_per_sector, points[c.point].backhaul_delay_ms);
    s.policy.rel12_sinr_threshold_db = grid[c.grid_index];
    edge[i] = run(s, c.seed).edge_rate_bps;
  });
  // Same reduction as tune_rel12, replayed over the parallel results.
  std::vector<std::vector<double>> sums(points.size(), std::vector<double>(grid.size(), 0.0));
  for (std::size_t i = 0; i < cells.size(); ++i) sums[cells[i].point][cells[i].grid_index] += edge[i];
  for (std::size_t p = 0; p < points.size(); ++p) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double mean = sums[p][g] / static_cast<double>(cfg.seeds.size());
      points[p].tuning.edge_rate_bps.push_back(mean);
      if (mean > best || (mean == best && grid[g] < points[p].tuning.threshold_db)) {
        best = mean;
        points[p].tuning.threshold_db = grid[g];
      }
    }
  }
  return points;
}

struct ExperimentOptions {
  std::filesystem::path out_dir;
  int jobs{1};
  std::string config_text;  // hashed into the manifest
  std::string config_path;
};

struct ExperimentOutcome {
  std::vector<RunSpec> runs;
  std::vector<MetricsReport> reports;
  std::vector<TuningPoint> tuning;
};

namespace detail {

inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

inline std::string delay_tag(double ms) { return format_number(ms); }

class StagingDir {
 public:
  explicit StagingDir(const std::filesystem::path& out) : out_(out) {
    std::filesystem::create_directories(out_);
    path_ = out_ / ".staging";
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~StagingDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

  void commit() {
    for (const auto& entry : std::filesystem::directory_iterator(path_)) {
      if (entry.path().filename() == "parts") continue;
      const auto target = out_ / entry.path().filename();
      std::filesystem::remove_all(target);
      std::filesystem::rename(entry.path(), target);
    }
  }

 private:
  std::filesystem::path out_;
  std::filesystem::path path_;
};

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

}  // namespace detail

// Output files appear in out_dir only once every run has succeeded.
inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const ExperimentOptions& opts) {
  namespace fs = std::filesystem;
  detail::StagingDir staging(opts.out_dir);
  const fs::path parts = staging.path() / "parts";
  fs::create_directories(parts);
  if (cfg.write_trace) fs::create_directories(staging.path() / "traces");

  ExperimentOutcome outcome;
  outcome.runs = expand_runs(cfg);

  const bool needs_tuning =
      cfg.rel12_auto && std::find(cfg.policies.begin(), cfg.policies.end(), Policy::Rel12) != cfg.policies.end();
  if (needs_tuning) {
    outcome.tuning = tune_rel12_points(cfg, cfg.rel12_tuning_grid, opts.jobs);
    for (auto& r : outcome.runs)
      for (const auto& t : outcome.tuning)
        if (t.ue_per_sector == r.ue_per_sector && t.backhaul_delay_ms == r.backhaul_delay_ms)
          r.rel12_threshold_db = t.tuning.threshold_db;
  }

  outcome.reports.resize(outcome.runs.size());
  std::vector<std::vector<double>> throughputs(outcome.runs.size());
  parallel_for(outcome.runs.size(), opts.jobs, [&](std::size_t i) {
    const auto& spec = outcome.runs[i];
    ScenarioConfig s = cfg.scenario(spec.policy, spec.ue_per_sector, spec.backhaul_delay_ms);
    s.policy.rel12_sinr_threshold_db = spec.rel12_threshold_db;
    std::ofstream trace;
    if (cfg.write_trace) {
      trace = detail::open_out(staging.path() / "traces" /
                               ("trace_" + std::string(to_string(spec.policy)) + "_ue" +
                                std::to_string(spec.ue_per_sector) + "_d" + detail::delay_tag(spec.backhaul_delay_ms) +
                                "ms_s" + std::to_string(spec.replicate_seed) + ".csv"));
      trace << "time,kind,flow_id,ue_id,detail\n";
    }
    const SimulationResult result = simulate(s, spec.seed, cfg.write_trace ? &trace : nullptr);
    outcome.reports[i] = make_report(result);
    for (const auto& f : outcome.reports[i].per_flow) throughputs[i].push_back(f.throughput_bps);
    if (cfg.write_flows) {
      auto os = detail::open_out(parts / (std::to_string(i) + ".csv"));
      write_flow_rows(os, result, spec.policy, spec.replicate_seed);
    }
  });

  {
    auto flows = detail::open_out(staging.path() / "flows.csv");
    flows << kFlowsHeader << '\n';
    if (cfg.write_flows)
      for (std::size_t i = 0; i < outcome.runs.size(); ++i) {
        std::ifstream part(parts / (std::to_string(i) + ".csv"), std::ios::binary);
        flows << part.rdbuf();
      }
  }
  {
    auto summary = detail::open_out(staging.path() / "summary.csv");
    summary << kSummaryHeader << '\n';
    for (std::size_t i = 0; i < outcome.runs.size(); ++i) {
      const auto& spec = outcome.runs[i];
      const auto& rep = outcome.reports[i];
      write_summary_row(summary, {spec.policy, spec.replicate_seed, spec.ue_per_sector, spec.backhaul_delay_ms,
                                  rep.edge_rate_bps, rep.median_rate_bps, rep.sum_log_utility, rep.utilization});
    }
  }
  {
    // Pooled over every run, and per (load, delay) point.
    std::map<Policy, std::vector<double>> pooled;
    std::map<std::tuple<int, double>, std::map<Policy, std::vector<double>>> by_point;
    for (std::size_t i = 0; i < outcome.runs.size(); ++i) {
      const auto& spec = outcome.runs[i];
      auto& all = pooled[spec.policy];
      all.insert(all.end(), throughputs[i].begin(), throughputs[i].end());
      auto& point = by_point[{spec.ue_per_sector, spec.backhaul_delay_ms}][spec.policy];
      point.insert(point.end(), throughputs[i].begin(), throughputs[i].end());
    }
    auto cdf = detail::open_out(staging.path() / "cdf.csv");
    cdf << kCdfHeader << '\n';
    for (auto& [policy, samples] : pooled) write_cdf_rows(cdf, policy, std::move(samples));
    for (auto& [key, per_policy] : by_point) {
      auto os = detail::open_out(staging.path() / ("cdf_ue" + std::to_string(std::get<0>(key)) + "_delay" +
                                                   detail::delay_tag(std::get<1>(key)) + "ms.csv"));
      os << kCdfHeader << '\n';
      for (auto& [policy, samples] : per_policy) write_cdf_rows(os, policy, std::move(samples));
    }
  }
  {
    nlohmann::json manifest;
    manifest["tool"] = "pfsplit";
    manifest["version"] = PFSPLIT_VERSION;
    manifest["config_path"] = opts.config_path;
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(content_hash(opts.config_text)));
    manifest["config_hash"] = hash;
    manifest["master_seed"] = cfg.master_seed;
    auto& runs = manifest["runs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < outcome.runs.size(); ++i) {
      const auto& r = outcome.runs[i];
      runs.push_back({{"index", i},
                      {"policy", std::string(to_string(r.policy))},
                      {"ue_per_sector", r.ue_per_sector},
                      {"backhaul_delay_ms", r.backhaul_delay_ms},
                      {"replicate_seed", r.replicate_seed},
                      {"run_seed", r.seed},
                      {"rel12_sinr_threshold_db", detail::json_number(r.rel12_threshold_db)},
                      {"completed_flows", outcome.reports[i].per_flow.size()},
                      {"incomplete_flows", outcome.reports[i].incomplete_flows}});
    }
    auto& tuning = manifest["rel12_tuning"] = nlohmann::json::array();
    for (const auto& t : outcome.tuning) {
      nlohmann::json grid = nlohmann::json::array();
      for (std::size_t g = 0; g < cfg.rel12_tuning_grid.size(); ++g)
        grid.push_back({{"threshold_db", detail::json_number(cfg.rel12_tuning_grid[g])},
                        {"edge_bps", t.tuning.edge_rate_bps[g]}});
      tuning.push_back({{"ue_per_sector", t.ue_per_sector},
                        {"backhaul_delay_ms", t.backhaul_delay_ms},
                        {"selected_threshold_db", detail::json_number(t.tuning.threshold_db)},
                        {"grid", grid}});
    }
    auto os = detail::open_out(staging.path() / "manifest.json");
    os << manifest.dump(2) << '\n';
  }
  staging.commit();
  return outcome;
}

}  // namespace pfsplit
