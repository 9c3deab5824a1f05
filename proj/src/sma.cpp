// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "chunkmem/sma.hpp"

#include <string>

#include "chunkmem/error.hpp"
#include "chunkmem/nam.hpp"

namespace chunkmem {

namespace {

template <typename Get>
Mat stack(std::span<const FramePtr> frames, Get get) {
  std::vector<const Mat*> parts;
  parts.reserve(frames.size());
  for (const FramePtr& f : frames) parts.push_back(&get(*f));
  return concat_rows(parts);
}

}  // namespace

Mat stack_keys(std::span<const FramePtr> frames, std::size_t layer, std::size_t head) {
  return stack(frames, [&](const FrameKV& f) -> const Mat& { return f.keys(layer, head); });
}

Mat stack_values(std::span<const FramePtr> frames, std::size_t layer, std::size_t head) {
  return stack(frames, [&](const FrameKV& f) -> const Mat& { return f.values(layer, head); });
}

Descriptor query_descriptor(const Mat& q_vis) { return Descriptor{mean_pool_rows(q_vis), {}}; }

std::vector<Descriptor> frame_descriptors(std::span<const FramePtr> candidates, std::size_t layer,
                                          std::size_t head) {
  if (candidates.empty()) throw Error(ErrorKind::kEmptyInput, "no candidate frames");
  std::vector<Descriptor> out;
  out.reserve(candidates.size());
  for (const FramePtr& f : candidates) {
    out.push_back(Descriptor{mean_pool_rows(f->keys(layer, head)), f->frame_id()});
  }
  return out;
}

double relevance(const Descriptor& query, const Descriptor& frame) {
  return dot(query.vec.data(), frame.vec.data());
}

ActivationSet select_top_k(std::span<const double> scores, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::kInvalidConfig, "activation count k must be >= 1");
  ActivationSet out;
  out.indices = top_indices_recency(scores, std::min(k, scores.size()));
  out.scores.reserve(out.indices.size());
  for (std::size_t i : out.indices) out.scores.push_back(scores[i]);
  return out;
}

std::vector<double> layer_frame_scores(std::span<const Mat> q_vis_per_head,
                                       std::span<const FramePtr> candidates, std::size_t layer) {
  if (q_vis_per_head.empty()) throw Error(ErrorKind::kEmptyInput, "no query heads");
  std::vector<double> scores(candidates.size(), 0.0);
  for (std::size_t h = 0; h < q_vis_per_head.size(); ++h) {
    const Descriptor qd = query_descriptor(q_vis_per_head[h]);
    const std::vector<Descriptor> kds = frame_descriptors(candidates, layer, h);
    for (std::size_t j = 0; j < kds.size(); ++j) scores[j] += relevance(qd, kds[j]);
  }
  const double inv = 1.0 / static_cast<double>(q_vis_per_head.size());
  for (double& s : scores) s *= inv;
  return scores;
}

GatedAttention attend_selected(const Mat& q_vis, std::span<const FramePtr> candidates,
                               const ActivationSet& active, std::size_t layer, std::size_t head,
                               double scale) {
  std::vector<FramePtr> selected;
  selected.reserve(active.indices.size());
  for (std::size_t i : active.indices) {
    if (i >= candidates.size()) {
      throw Error(ErrorKind::kBounds, "activation index " + std::to_string(i) + " of " +
                                          std::to_string(candidates.size()) + " candidates");
    }
    selected.push_back(candidates[i]);
  }
  Mat k = stack_keys(selected, layer, head);
  Mat v = stack_values(selected, layer, head);
  GatedAttention out;
  out.keys_per_query = k.rows();
  out.output = sdp_attention(q_vis, k, v, scale);
  out.active = active;
  return out;
}

GatedAttention gated_attention(const Mat& q_vis, std::span<const FramePtr> candidates,
                               std::size_t k, std::size_t layer, std::size_t head, double scale) {
  const Descriptor qd = query_descriptor(q_vis);
  const std::vector<Descriptor> kds = frame_descriptors(candidates, layer, head);
  std::vector<double> scores;
  scores.reserve(kds.size());
  for (const Descriptor& kd : kds) scores.push_back(relevance(qd, kd));
  return attend_selected(q_vis, candidates, select_top_k(scores, k), layer, head, scale);
}

}  // namespace chunkmem
