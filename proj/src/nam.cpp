// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "chunkmem/nam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "chunkmem/error.hpp"

namespace chunkmem {

std::vector<std::size_t> top_indices_recency(std::span<const double> scores, std::size_t count) {
  if (count > scores.size()) {
    throw Error(ErrorKind::kBounds, "top " + std::to_string(count) + " of " +
                                        std::to_string(scores.size()) + " scores");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a > b;
                    });
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

RelevanceScores text_relevance_scores(const TextQuery& query, const MemoryBank& bank) {
  if (bank.empty()) throw Error(ErrorKind::kEmptyMemory, "relevance over an empty bank");
  const FrameKV& first = bank[0];
  if (query.layers != first.layers() || query.heads != first.heads() ||
      query.per_head.size() != query.layers * query.heads) {
    throw Error(ErrorKind::kShape, "text query layout does not match bank frames");
  }

  const std::size_t n_frames = bank.size();
  std::vector<double> totals(n_frames, 0.0);
  std::vector<double> logits;

  for (std::size_t l = 0; l < query.layers; ++l) {
    for (std::size_t h = 0; h < query.heads; ++h) {
      const Vec& q = query.at(l, h);
      const double scale = default_scale(q.dim());

      logits.clear();
      for (const FramePtr& f : bank.frames()) {
        const Mat& k = f->keys(l, h);
        if (k.cols() != q.dim()) throw Error(ErrorKind::kShape, "text query dim vs key dim");
        for (std::size_t t = 0; t < k.rows(); ++t) logits.push_back(dot(q.data(), k.row(t)) * scale);
      }
      Mat weights = softmax_rows(Mat(1, logits.size(), logits));

      std::size_t offset = 0;
      for (std::size_t i = 0; i < n_frames; ++i) {
        const std::size_t p = bank[i].tokens();
        double s = 0.0;
        for (std::size_t t = 0; t < p; ++t) s += weights(0, offset + t);
        totals[i] += s / static_cast<double>(p);
        offset += p;
      }
    }
  }

  const double inv = 1.0 / static_cast<double>(query.layers * query.heads);
  for (double& s : totals) s *= inv;
  return RelevanceScores{std::move(totals)};
}

std::vector<std::size_t> retrieve_top(const RelevanceScores& scores, std::size_t r) {
  return top_indices_recency(scores.per_frame, r);
}

FramePtr chunk_prototype(std::span<const FramePtr> chunk_frames) {
  if (chunk_frames.empty()) throw Error(ErrorKind::kEmptyInput, "prototype of an empty chunk");
  return chunk_frames.front();
}

MemoryUpdate apply_retention(const MemoryBank& bank, RelevanceScores scores,
                             std::span<const FramePtr> prev_chunk) {
  FramePtr proto = chunk_prototype(prev_chunk);
  if (bank.empty()) return MemoryUpdate{bank.append(std::move(proto)), {}, {}};
  if (scores.per_frame.size() != bank.size()) {
    throw Error(ErrorKind::kShape, "scores do not match bank size");
  }
  const std::size_t keep = std::min(bank.capacity() - 1, bank.size());
  std::vector<std::size_t> retained = retrieve_top(scores, keep);
  MemoryBank next = bank.retain(retained).append(std::move(proto));
  return MemoryUpdate{std::move(next), std::move(scores), std::move(retained)};
}

MemoryUpdate memory_update_detailed(const MemoryBank& bank, const TextQuery& query,
                                    std::span<const FramePtr> prev_chunk) {
  if (prev_chunk.empty()) throw Error(ErrorKind::kEmptyInput, "prototype of an empty chunk");
  RelevanceScores scores;
  if (!bank.empty()) scores = text_relevance_scores(query, bank);
  return apply_retention(bank, std::move(scores), prev_chunk);
}

}  // namespace chunkmem
