// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "chunkmem/numerics.hpp"

namespace chunkmem {

struct HeadKV {
  Mat keys;    // P x d
  Mat values;  // P x d
};

/// Key/value cache of one latent frame across every layer and head.
///
/// topic_label is ground truth for oracle metrics only; retrieval and
/// selection never read it.
class FrameKV {
 public:
  FrameKV(std::uint64_t frame_id, std::uint64_t chunk_id, std::optional<int> topic_label,
          std::size_t layers, std::size_t heads, std::vector<HeadKV> kv);

  std::uint64_t frame_id() const { return frame_id_; }
  std::uint64_t chunk_id() const { return chunk_id_; }
  std::optional<int> topic_label() const { return topic_label_; }
  std::size_t layers() const { return layers_; }
  std::size_t heads() const { return heads_; }
  std::size_t tokens() const { return kv_.front().keys.rows(); }
  std::size_t head_dim() const { return kv_.front().keys.cols(); }

  const Mat& keys(std::size_t layer, std::size_t head) const { return at(layer, head).keys; }
  const Mat& values(std::size_t layer, std::size_t head) const { return at(layer, head).values; }

  std::uint64_t content_hash() const;

 private:
  const HeadKV& at(std::size_t layer, std::size_t head) const;

  std::uint64_t frame_id_;
  std::uint64_t chunk_id_;
  std::optional<int> topic_label_;
  std::size_t layers_;
  std::size_t heads_;
  std::vector<HeadKV> kv_;
};

using FramePtr = std::shared_ptr<const FrameKV>;

/// Capacity-bounded, oldest-first collection of frames. Every mutation
/// returns a new snapshot; frames are shared, never copied.
class MemoryBank {
 public:
  explicit MemoryBank(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  bool full() const { return frames_.size() == capacity_; }
  const std::vector<FramePtr>& frames() const { return frames_; }
  const FrameKV& operator[](std::size_t i) const { return *frames_[i]; }

  std::vector<std::uint64_t> frame_ids() const;

  /// Keeps the frames at `indices` (ascending, unique), preserving order.
  MemoryBank retain(std::span<const std::size_t> indices) const;
  MemoryBank append(FramePtr frame) const;

  std::uint64_t content_hash() const;

 private:
  std::size_t capacity_;
  std::vector<FramePtr> frames_;
};

inline MemoryBank bank_new(std::size_t capacity) { return MemoryBank(capacity); }
inline MemoryBank bank_retain(const MemoryBank& bank, std::span<const std::size_t> indices) {
  return bank.retain(indices);
}
inline MemoryBank bank_append(const MemoryBank& bank, FramePtr frame) {
  return bank.append(std::move(frame));
}

/// The first chunk's frames, fixed once and then read-only.
class FrameSink {
 public:
  void set(std::vector<FramePtr> chunk_frames);
  bool is_set() const { return set_; }
  const std::vector<FramePtr>& frames() const { return frames_; }
  std::size_t size() const { return frames_.size(); }
  std::uint64_t content_hash() const;

 private:
  bool set_ = false;
  std::vector<FramePtr> frames_;
};

}  // namespace chunkmem
