// pfsplit command line: run experiments, validate configs, tune the Rel12
// threshold, and dump drop topologies.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pfsplit/config.hpp"
#include "pfsplit/experiment.hpp"
#include "pfsplit/pipeline.hpp"
#include "pfsplit/radio.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

std::optional<pfsplit::ParseResult> load_or_report(const std::string& path) {
  pfsplit::ParseResult parsed;
  try {
    parsed = pfsplit::load_config(path);
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << '\n';
    return std::nullopt;
  }
  for (const auto& d : parsed.diagnostics) std::cerr << path << ": " << pfsplit::format_diagnostic(d) << '\n';
  if (!parsed.ok()) return std::nullopt;
  return parsed;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "inf" || item == "+inf") grid.push_back(std::numeric_limits<double>::infinity());
    else if (item == "-inf") grid.push_back(-std::numeric_limits<double>::infinity());
    else {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument("bad grid value '" + item + "'");
      grid.push_back(v);
    }
  }
  if (grid.empty()) throw std::invalid_argument("empty grid");
  return grid;
}

int default_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proportional-fair LTE/WLAN traffic splitting simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = default_jobs();
  std::optional<std::uint64_t> master_seed;
  auto* run_cmd = app.add_subcommand("run", "Run the experiment cross-product and write CSV outputs");
  run_cmd->add_option("config", config_path, "Experiment config (YAML)")->required();
  run_cmd->add_option("--out", out_dir, "Output directory (PFSPLIT_OUT_DIR overrides)");
  run_cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_option("--master-seed", master_seed, "Override master_seed from the config");

  auto* validate_cmd = app.add_subcommand("validate", "Parse and check a config without running it");
  validate_cmd->add_option("config", config_path, "Experiment config (YAML)")->required();

  std::string grid_text;
  auto* tune_cmd = app.add_subcommand("tune-rel12", "Search the Rel12 SINR threshold per (load, delay)");
  tune_cmd->add_option("config", config_path, "Experiment config (YAML)")->required();
  tune_cmd->add_option("--grid", grid_text, "Comma-separated thresholds in dB (inf allowed)")->required();
  tune_cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::string topo_out;
  std::uint64_t topo_seed = 1;
  int topo_ues = 0;
  auto* topo_cmd = app.add_subcommand("topology", "Write one drop's positions, associations and SNRs as CSV");
  topo_cmd->add_option("config", config_path, "Experiment config (YAML)")->required();
  topo_cmd->add_option("--out", topo_out, "CSV path (stdout when omitted)");
  topo_cmd->add_option("--seed", topo_seed, "Replicate seed");
  topo_cmd->add_option("--ue-per-sector", topo_ues, "Load (defaults to the first sweep value)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  auto parsed = load_or_report(config_path);
  if (!parsed) return kConfigError;
  auto& cfg = parsed->config;

  try {
    if (*validate_cmd) {
      std::cout << config_path << ": ok (" << cfg.policies.size() * cfg.ue_per_sector.size() *
                                                  cfg.backhaul_delay_ms.size() * cfg.seeds.size()
                << " runs)\n";
      return kOk;
    }

    if (*run_cmd) {
      if (const char* env = std::getenv("PFSPLIT_OUT_DIR"); env && *env) out_dir = env;
      if (out_dir.empty()) {
        std::cerr << "run: no output directory (--out or PFSPLIT_OUT_DIR)\n";
        return kConfigError;
      }
      if (master_seed) cfg.master_seed = *master_seed;
      pfsplit::ExperimentOptions opts;
      opts.out_dir = out_dir;
      opts.jobs = jobs;
      opts.config_path = config_path;
      opts.config_text = pfsplit::read_file(config_path);
      const auto outcome = pfsplit::run_experiment(cfg, opts);
      std::cout << "wrote " << outcome.runs.size() << " runs to " << out_dir << '\n';
      return kOk;
    }

    if (*tune_cmd) {
      std::vector<double> grid;
      try {
        grid = parse_grid(grid_text);
      } catch (const std::exception& e) {
        std::cerr << "--grid: " << e.what() << '\n';
        return kConfigError;
      }
      const auto points = pfsplit::tune_rel12_points(cfg, grid, jobs);
      std::cout << "ue_per_sector,backhaul_delay_ms,threshold_db,edge_bps,selected\n";
      for (const auto& p : points)
        for (std::size_t g = 0; g < grid.size(); ++g)
          std::cout << p.ue_per_sector << ',' << pfsplit::format_number(p.backhaul_delay_ms) << ','
                    << pfsplit::format_number(grid[g]) << ',' << pfsplit::format_number(p.tuning.edge_rate_bps[g])
                    << ',' << (grid[g] == p.tuning.threshold_db ? 1 : 0) << '\n';
      return kOk;
    }

    if (*topo_cmd) {
      const int ues = topo_ues > 0 ? topo_ues : cfg.ue_per_sector.front();
      auto scenario = cfg.scenario(pfsplit::Policy::Proposed, ues, cfg.backhaul_delay_ms.front());
      const auto topo =
          pfsplit::generate_topology(scenario, pfsplit::run_seed(cfg.master_seed, ues, topo_seed));
      if (topo_out.empty()) {
        pfsplit::write_topology_csv(std::cout, topo, scenario.radio);
      } else {
        std::ofstream os(topo_out);
        if (!os) throw std::runtime_error("cannot write " + topo_out);
        pfsplit::write_topology_csv(os, topo, scenario.radio);
      }
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
