// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

// Noise sweeps behind the retrieval thresholds pinned in the tests. Prints
// markdown tables; docs/retrieval_sweep.md holds the recorded output.

#include <cstdio>

#include "oracles.hpp"

int main() {
  using namespace chunkmem;
  constexpr std::size_t kTrials = 500;

  std::printf("## Planted alignment (4 frames, P=16, d=16, gain 2)\n\n");
  std::printf("| eps | target ranked first |\n|---|---|\n");
  for (double eps : {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 5.5, 6.0, 7.0, 8.0, 10.0, 12.0, 16.0}) {
    std::size_t hits = 0;
    for (std::uint64_t s = 0; s < kTrials; ++s) hits += oracle::planted_alignment_trial(s, 4, 16, 16, 2.0, eps);
    std::printf("| %.1f | %zu/%zu |\n", eps, hits, kTrials);
  }

  std::printf("\n## Toy-model separability (default config)\n\n");
  std::printf("| noise_eps | same-topic above cross-topic |\n|---|---|\n");
  for (double eps : {0.0, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 6.4, 12.8, 25.6}) {
    std::size_t hits = 0;
    for (std::uint64_t s = 0; s < kTrials; ++s) hits += oracle::toy_separability_trial(s, eps);
    std::printf("| %.2f | %zu/%zu |\n", eps, hits, kTrials);
  }
  return 0;
}
