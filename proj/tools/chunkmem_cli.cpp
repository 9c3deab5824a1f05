// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

// chunkmem: run streaming rollouts, ablation grids, the oracle suite and
// throughput benches from the command line.
//
// Exit codes: 0 success, 1 validation failure, 2 verify/acceptance failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "chunkmem/error.hpp"
#include "chunkmem/harness.hpp"
#include "chunkmem/hash.hpp"
#include "criteria.hpp"

namespace {

using namespace chunkmem;

constexpr int kExitValidation = 1;
constexpr int kExitVerify = 2;

template <typename Write>
void write_out(const std::string& path, Write write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kParse, "cannot write " + path);
  write(out);
}

ModelConfig load_config(const std::string& path) {
  return path.empty() ? ModelConfig{} : parse_config(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming KV-cache memory bank simulator"};
  app.require_subcommand(1);

  std::string script_path, config_path, out_path, mode_name = "nam_sma", grid_path;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::size_t repeat = 5;
  bool skip_throughput = false;

  auto* run = app.add_subcommand("run", "Run one rollout and write its metrics as JSON");
  run->add_option("--script", script_path, "Narrative script (JSON)")->required();
  run->add_option("--mode", mode_name, "no_memory | frame_sink | nam | nam_sma");
  run->add_option("--config", config_path, "Model config (JSON)");
  run->add_option("--out", out_path, "Report path, '-' for stdout");
  run->add_option("--seed", seed, "Override the script seed (wins over $" + std::string(kSeedEnvVar) + ")");

  auto* ablate = app.add_subcommand("ablate", "Run a mode x capacity grid and write CSV");
  ablate->add_option("--script", script_path, "Narrative script (JSON)")->required();
  ablate->add_option("--grid", grid_path, "Grid file (JSON): {modes, b_values, repeat}")->required();
  ablate->add_option("--config", config_path, "Model config (JSON)");
  ablate->add_option("--out", out_path, "CSV path, '-' for stdout");
  ablate->add_option("--seed", seed, "Override the script seed");
  ablate->add_option("--jobs", jobs, "Parallel grid cells (timings are only meaningful with 1)");

  auto* verify = app.add_subcommand("verify", "Run the oracle and acceptance suite");
  verify->add_flag("--skip-throughput", skip_throughput, "Skip the timing-based criterion");

  auto* bench = app.add_subcommand("bench", "Median throughput of all four modes");
  bench->add_option("--repeat", repeat, "Runs per mode")->check(CLI::PositiveNumber);
  bench->add_option("--config", config_path, "Model config (JSON); defaults to the bench config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; any usage error is a validation failure.
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run) {
      NarrativeScript script = parse_script(script_path);
      ModelConfig cfg = load_config(config_path);
      cfg.seed = resolve_seed(seed, script);
      const RunReport report = run_rollout(script, cfg, parse_mode(mode_name));
      write_out(out_path, [&](std::ostream& os) { write_metrics_json(os, report); });
      const RolloutMetrics& m = report.metrics;
      std::cerr << to_string(report.mode) << ": " << m.chunks << " chunks, "
                << format_number(m.chunks_per_second) << " chunks/s, keys/query "
                << format_number(m.mean_attended_keys) << ", hash " << hex64(m.determinism_hash)
                << '\n';
      return 0;
    }
    if (*ablate) {
      NarrativeScript script = parse_script(script_path);
      ModelConfig cfg = load_config(config_path);
      cfg.seed = resolve_seed(seed, script);
      const GridSpec grid = parse_grid(grid_path);
      const AblationReport report = run_ablation_grid(script, cfg, grid, jobs);
      write_out(out_path, [&](std::ostream& os) { write_ablation_csv(os, report); });
      print_summary(std::cerr, report);
      return 0;
    }
    if (*verify) {
      bool ok = true;
      const auto criteria = acceptance::all_criteria();
      for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (skip_throughput && i + 1 == 7) continue;
        const acceptance::CriterionResult r = criteria[i]();
        acceptance::print_result(std::cout, r);
        ok = ok && r.passed;
      }
      return ok ? 0 : kExitVerify;
    }
    if (*bench) {
      const ModelConfig cfg = config_path.empty() ? acceptance::throughput_config() : parse_config(config_path);
      const auto cps = acceptance::measure_throughput(acceptance::throughput_script(), cfg, repeat);
      for (std::size_t m = 0; m < cps.size(); ++m) {
        std::cout << to_string(kAllModes[m]) << ' ' << format_number(cps[m]) << " chunks/s\n";
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
