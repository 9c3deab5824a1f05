// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "chunkmem/memory.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

#include "chunkmem/error.hpp"
#include "chunkmem/hash.hpp"

namespace chunkmem {

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

FrameKV::FrameKV(std::uint64_t frame_id, std::uint64_t chunk_id, std::optional<int> topic_label,
                 std::size_t layers, std::size_t heads, std::vector<HeadKV> kv)
    : frame_id_(frame_id),
      chunk_id_(chunk_id),
      topic_label_(topic_label),
      layers_(layers),
      heads_(heads),
      kv_(std::move(kv)) {
  if (layers_ == 0 || heads_ == 0) {
    throw Error(ErrorKind::kInvalidConfig, "frame needs at least one layer and head");
  }
  if (kv_.size() != layers_ * heads_) {
    throw Error(ErrorKind::kShape, "frame has " + std::to_string(kv_.size()) +
                                       " head blocks, expected " +
                                       std::to_string(layers_ * heads_));
  }
  const std::size_t p = kv_.front().keys.rows();
  const std::size_t d = kv_.front().keys.cols();
  if (p == 0 || d == 0) throw Error(ErrorKind::kShape, "frame keys must be non-empty");
  for (const HeadKV& h : kv_) {
    if (h.keys.rows() != p || h.keys.cols() != d || h.values.rows() != p ||
        h.values.cols() != d) {
      throw Error(ErrorKind::kShape, "inconsistent K/V block shapes in frame " +
                                         std::to_string(frame_id_));
    }
  }
}

const HeadKV& FrameKV::at(std::size_t layer, std::size_t head) const {
  if (layer >= layers_ || head >= heads_) {
    throw Error(ErrorKind::kBounds, "layer/head (" + std::to_string(layer) + "," +
                                        std::to_string(head) + ") out of range");
  }
  return kv_[layer * heads_ + head];
}

std::uint64_t FrameKV::content_hash() const {
  Hasher h;
  h.u64(frame_id_);
  h.u64(chunk_id_);
  for (const HeadKV& b : kv_) {
    h.f64s(b.keys.data());
    h.f64s(b.values.data());
  }
  return h.digest();
}

MemoryBank::MemoryBank(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error(ErrorKind::kInvalidConfig, "bank capacity must be >= 1");
}

std::vector<std::uint64_t> MemoryBank::frame_ids() const {
  std::vector<std::uint64_t> ids;
  ids.reserve(frames_.size());
  for (const FramePtr& f : frames_) ids.push_back(f->frame_id());
  return ids;
}

MemoryBank MemoryBank::retain(std::span<const std::size_t> indices) const {
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  MemoryBank out(capacity_);
  for (std::size_t i : sorted) {
    if (i >= frames_.size()) {
      throw Error(ErrorKind::kBounds, "retain index " + std::to_string(i) + " with bank size " +
                                          std::to_string(frames_.size()));
    }
    out.frames_.push_back(frames_[i]);
  }
  return out;
}

MemoryBank MemoryBank::append(FramePtr frame) const {
  if (!frame) throw Error(ErrorKind::kEmptyInput, "append of null frame");
  if (frames_.size() >= capacity_) {
    throw Error(ErrorKind::kCapacity, "bank already holds " + std::to_string(frames_.size()) +
                                          " of " + std::to_string(capacity_) + " frames");
  }
  if (!frames_.empty() && frame->frame_id() <= frames_.back()->frame_id()) {
    throw Error(ErrorKind::kInvalidConfig,
                "frame id " + std::to_string(frame->frame_id()) + " not newer than bank tail " +
                    std::to_string(frames_.back()->frame_id()));
  }
  MemoryBank out = *this;
  out.frames_.push_back(std::move(frame));
  return out;
}

std::uint64_t MemoryBank::content_hash() const {
  Hasher h;
  h.u64(capacity_);
  for (const FramePtr& f : frames_) h.u64(f->content_hash());
  return h.digest();
}

void FrameSink::set(std::vector<FramePtr> chunk_frames) {
  if (set_) throw Error(ErrorKind::kAlreadySet, "frame sink is write-once");
  if (chunk_frames.empty()) throw Error(ErrorKind::kEmptyInput, "frame sink needs frames");
  frames_ = std::move(chunk_frames);
  set_ = true;
}

std::uint64_t FrameSink::content_hash() const {
  Hasher h;
  h.u64(set_ ? 1 : 0);
  for (const FramePtr& f : frames_) h.u64(f->content_hash());
  return h.digest();
}

}  // namespace chunkmem
