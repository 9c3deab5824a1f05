// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "chunkmem/engine.hpp"
#include "chunkmem/harness.hpp"

namespace chunkmem::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  std::optional<double> time_limit;  // seconds, when the criterion has one
};

CriterionResult gated_attention_identity();   // 1
CriterionResult top_k_optimality();           // 2
CriterionResult text_relevance_oracle();      // 3
CriterionResult capacity_invariant();         // 4
CriterionResult planted_retrieval();          // 5
CriterionResult sma_fidelity();               // 6
CriterionResult throughput_ordering();        // 7
CriterionResult attended_key_accounting();    // 8
CriterionResult determinism();                // 9

std::vector<std::function<CriterionResult()>> all_criteria();

/// "[PASS] 3 name (1.23 s) detail"
void print_result(std::ostream& out, const CriterionResult& r);

/// Seeded 6-segment script over `topics` topics in which at least one topic
/// recurs after a different one.
NarrativeScript revisiting_script(std::uint64_t seed, std::size_t segments = 6,
                                  std::size_t topics = 4);

/// The throughput configuration: P=64, b=12, sma_k=3, n=6, T=3.
ModelConfig throughput_config();
/// 40 chunks over four segments that revisit topics.
NarrativeScript throughput_script();

/// Median chunks/s per mode over `repeat` interleaved rollouts.
std::vector<double> measure_throughput(const NarrativeScript& script, const ModelConfig& cfg,
                                       std::size_t repeat);

}  // namespace chunkmem::acceptance
