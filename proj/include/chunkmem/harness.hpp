// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "chunkmem/engine.hpp"
#include "chunkmem/toymodel.hpp"

namespace chunkmem {

/// Script files are JSON: {"seed": u64, "segments": [{"prompt_text", "topic", "chunks"}]}.
NarrativeScript parse_script_text(std::string_view json_text);
NarrativeScript parse_script(const std::filesystem::path& path);
std::string script_to_json(const NarrativeScript& script);

/// Config files carry any subset of ModelConfig's fields by name; the rest
/// keep their defaults. "seed" is accepted but scripts normally supply it.
ModelConfig parse_config_text(std::string_view json_text, ModelConfig base = {});
ModelConfig parse_config(const std::filesystem::path& path, ModelConfig base = {});

struct PrecisionResult {
  std::size_t eligible_updates = 0;
  std::size_t hits = 0;
  /// nullopt when no update was eligible.
  std::optional<double> precision() const;
};

/// Over updates whose pre-update bank holds a frame of the incoming chunk's
/// topic, the fraction that retained at least one such frame. Topics are
/// recovered from the script, never from the frames.
PrecisionResult retrieval_precision(const RolloutTrace& trace, const NarrativeScript& script,
                                    const ModelConfig& cfg);

struct RolloutMetrics {
  std::optional<double> retrieval_precision;
  std::size_t eligible_updates = 0;
  std::optional<double> sma_vs_full_l2;
  double mean_attended_keys = 0.0;
  double chunks_per_second = 0.0;
  std::uint64_t determinism_hash = 0;
  std::size_t prompt_switches = 0;
  std::size_t chunks = 0;
};

RolloutMetrics compute_metrics(const RolloutTrace& trace, const NarrativeScript& script,
                               const ModelConfig& cfg);

struct RunReport {
  Mode mode = Mode::kNamSma;
  ModelConfig cfg;
  RolloutTrace trace;
  RolloutMetrics metrics;
};

/// Rollout with fidelity measurement on, plus metrics.
RunReport run_rollout(const NarrativeScript& script, const ModelConfig& cfg, Mode mode);

struct GridSpec {
  std::vector<Mode> modes;
  std::vector<std::size_t> b_values;
  std::size_t repeat = 3;
};

GridSpec parse_grid_text(std::string_view json_text);
GridSpec parse_grid(const std::filesystem::path& path);

struct AblationRow {
  Mode mode = Mode::kNamSma;
  std::size_t bank_capacity = 0;
  RolloutMetrics metrics;  // chunks_per_second is the median over repeats
  std::vector<double> chunks_per_second_runs;
};

struct OrderingCheck {
  std::size_t bank_capacity = 0;
  bool memory_free_fastest = false;  // no_memory > nam_sma > nam, frame_sink > nam_sma
  bool full_order = false;           // no_memory > frame_sink > nam_sma > nam
};

struct AblationReport {
  std::vector<AblationRow> rows;
  std::vector<OrderingCheck> ordering;  // one per b with all four modes present
};

/// One row per (mode, b). Cells run on up to `jobs` threads; use 1 when the
/// throughput numbers matter.
AblationReport run_ablation_grid(const NarrativeScript& script, const ModelConfig& cfg,
                                 const GridSpec& grid, std::size_t jobs = 1);

void write_metrics_json(std::ostream& out, const RunReport& report);
void write_ablation_csv(std::ostream& out, const AblationReport& report);
void write_ablation_json(std::ostream& out, const AblationReport& report);
void print_summary(std::ostream& out, const AblationReport& report);

/// 9 significant digits, the report number format.
std::string format_number(double x);

/// Seed precedence: explicit flag, then the environment variable, then the script.
inline constexpr const char* kSeedEnvVar = "CHUNKMEM_SEED";
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, const NarrativeScript& script);

}  // namespace chunkmem
