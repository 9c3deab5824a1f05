// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chunkmem/memory.hpp"
#include "chunkmem/numerics.hpp"

namespace chunkmem {

/// Pooled prompt query, one vector per (layer, head).
struct TextQuery {
  std::size_t layers = 0;
  std::size_t heads = 0;
  std::vector<Vec> per_head;  // layer-major

  const Vec& at(std::size_t layer, std::size_t head) const { return per_head[layer * heads + head]; }
};

/// One relevance score per bank frame, aligned with bank order.
struct RelevanceScores {
  std::vector<double> per_frame;
};

/// Text-to-memory relevance.
///
/// For every (layer, head) the prompt query attends over the keys of all bank
/// frames at once: a single softmax over the concatenated b*P logits. Each
/// frame's score is the mean of its own attention weights, and the final score
/// is the mean over all (layer, head) pairs. With P tokens per frame the
/// scores sum to 1/P.
RelevanceScores text_relevance_scores(const TextQuery& query, const MemoryBank& bank);

/// Indices of the r highest scores, ascending. Equal scores prefer the larger
/// index (the more recent frame).
std::vector<std::size_t> retrieve_top(const RelevanceScores& scores, std::size_t r);

/// A chunk's single-frame representative: its first frame, shared not copied.
FramePtr chunk_prototype(std::span<const FramePtr> chunk_frames);

struct MemoryUpdate {
  MemoryBank bank;
  RelevanceScores scores;               // empty when the incoming bank was empty
  std::vector<std::size_t> retained;    // indices into the incoming bank
};

/// Retain the top min(b-1, size) frames for `query`, then append the prototype
/// of `prev_chunk`.
MemoryUpdate memory_update_detailed(const MemoryBank& bank, const TextQuery& query,
                                    std::span<const FramePtr> prev_chunk);

/// The retention half of memory_update_detailed, for callers that already hold
/// the scores of `bank`.
MemoryUpdate apply_retention(const MemoryBank& bank, RelevanceScores scores,
                             std::span<const FramePtr> prev_chunk);

inline MemoryBank memory_update(const MemoryBank& bank, const TextQuery& query,
                                std::span<const FramePtr> prev_chunk) {
  return memory_update_detailed(bank, query, prev_chunk).bank;
}

/// Shared by NAM retention and SMA selection: top-`count` indices by score,
/// recency tie-break, returned ascending.
std::vector<std::size_t> top_indices_recency(std::span<const double> scores, std::size_t count);

}  // namespace chunkmem
