// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "chunkmem/memory.hpp"
#include "chunkmem/numerics.hpp"

namespace chunkmem {

struct Descriptor {
  Vec vec;
  std::optional<std::uint64_t> frame_id;  // nullopt for a query descriptor
};

/// Frames chosen for attention. indices are ascending positions into the
/// candidate list; scores are aligned with indices.
struct ActivationSet {
  std::vector<std::size_t> indices;
  std::vector<double> scores;

  friend bool operator==(const ActivationSet&, const ActivationSet&) = default;
};

Descriptor query_descriptor(const Mat& q_vis);

std::vector<Descriptor> frame_descriptors(std::span<const FramePtr> candidates, std::size_t layer,
                                          std::size_t head);

double relevance(const Descriptor& query, const Descriptor& frame);

/// Top-k by score with the recency tie rule; all indices when k >= size.
ActivationSet select_top_k(std::span<const double> scores, std::size_t k);

/// Per-frame relevance for a whole layer: the mean over heads of the
/// query/frame descriptor inner products. One selection per layer is shared by
/// every head.
std::vector<double> layer_frame_scores(std::span<const Mat> q_vis_per_head,
                                       std::span<const FramePtr> candidates, std::size_t layer);

struct GatedAttention {
  Mat output;
  ActivationSet active;
  std::size_t keys_per_query = 0;  // rows of the concatenated K actually attended
};

/// Attention of q_vis over the K/V of the selected candidates only,
/// concatenated in candidate order.
GatedAttention attend_selected(const Mat& q_vis, std::span<const FramePtr> candidates,
                               const ActivationSet& active, std::size_t layer, std::size_t head,
                               double scale);

/// Single-head gating: descriptors, inner-product scores and top-k from this
/// head alone, then restricted attention.
GatedAttention gated_attention(const Mat& q_vis, std::span<const FramePtr> candidates,
                               std::size_t k, std::size_t layer, std::size_t head, double scale);

/// Stacked K (or V) of the given frames at (layer, head), in list order.
Mat stack_keys(std::span<const FramePtr> frames, std::size_t layer, std::size_t head);
Mat stack_values(std::span<const FramePtr> frames, std::size_t layer, std::size_t head);

}  // namespace chunkmem
