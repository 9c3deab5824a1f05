// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chunkmem/memory.hpp"
#include "chunkmem/nam.hpp"
#include "chunkmem/sma.hpp"
#include "chunkmem/toymodel.hpp"

namespace chunkmem {

enum class Mode {
  kNoMemory,   // local window only
  kFrameSink,  // first chunk kept as memory
  kNamFull,    // sink + retrieved bank, no pruning
  kNamSma,     // sink + retrieved bank, top-k frames per layer
};

const char* to_string(Mode mode);
Mode parse_mode(std::string_view name);
inline constexpr Mode kAllModes[] = {Mode::kNoMemory, Mode::kFrameSink, Mode::kNamFull,
                                     Mode::kNamSma};

struct Segment {
  std::string prompt_text;
  int topic = 0;
  std::size_t chunks = 1;
};

struct NarrativeScript {
  std::uint64_t seed = 0;
  std::vector<Segment> segments;

  std::size_t total_chunks() const;
  /// Topic planted in chunk `chunk_id`.
  int topic_of_chunk(std::uint64_t chunk_id) const;
  std::size_t segment_of_chunk(std::uint64_t chunk_id) const;
};

struct RolloutState {
  Mode mode = Mode::kNamSma;
  std::uint64_t chunk_counter = 0;
  FrameSink sink;
  MemoryBank bank{1};
  std::vector<FramePtr> local_window;  // oldest first, at most n
  std::vector<FramePtr> prev_chunk;

  static RolloutState initial(const ModelConfig& cfg, Mode mode);
};

struct PhaseTimes {
  double retrieval = 0.0;  // seconds
  double update = 0.0;
  double selection = 0.0;
  double attention = 0.0;

  double total() const { return retrieval + update + selection + attention; }
};

struct ChunkResult {
  std::uint64_t chunk_id = 0;
  std::size_t segment = 0;
  std::vector<Mat> attention_outputs;          // per layer, (T*P) x (H*d)
  std::vector<ActivationSet> activation_sets;  // per layer, into candidate_ids
  std::vector<std::uint64_t> candidate_ids;    // sink ++ bank after update
  std::size_t window_frames = 0;               // local frames visible to this chunk
  std::size_t attended_key_count = 0;          // instrumented, summed over layers/heads/queries

  bool memory_updated = false;
  std::vector<std::uint64_t> pre_update_bank_ids;
  std::vector<std::uint64_t> retained_bank_ids;  // historical frames kept, prototype excluded
  std::vector<std::uint64_t> bank_ids;           // after update

  std::optional<double> sma_vs_full_l2;  // relative, only when measured
  PhaseTimes wall_time;

  /// Everything except wall time and the optional fidelity measurement.
  std::uint64_t hash() const;
};

struct StepOptions {
  /// In kNamSma mode also run unpruned memory attention and record the
  /// relative L2 gap. Excluded from wall time.
  bool measure_fidelity = false;
};

struct StepOutput {
  RolloutState state;
  ChunkResult result;
};

/// One chunk: retrieve with the incoming prompt and update the bank, gather
/// and gate memory candidates, attend over memory ++ window ++ causal chunk,
/// roll the window. The first chunk also fixes the sink.
StepOutput step_chunk(const RolloutState& state, const TextQuery& prompt,
                      const ChunkTokens& chunk, const ModelConfig& cfg,
                      const ModelWeights& weights, const StepOptions& opts = {});

/// Keys attended per the closed form H * sum_l [T*P*P*(selected_l + window) + P*P*T(T+1)/2].
std::size_t expected_attended_keys(const ModelConfig& cfg, std::span<const std::size_t> selected_per_layer,
                                   std::size_t window_frames);

struct RolloutTrace {
  Mode mode = Mode::kNamSma;
  std::vector<ChunkResult> chunks;
  std::size_t prompt_switches = 0;
};

/// Chunk-at-a-time rollout over a script. Several runners can be advanced in
/// lockstep, which is how the throughput bench interleaves modes.
class RolloutRunner {
 public:
  RolloutRunner(const NarrativeScript& script, const ModelConfig& cfg, Mode mode,
                const StepOptions& opts = {});

  bool done() const { return segment_ >= script_.segments.size(); }
  /// Generates the next chunk. Throws kBounds once done().
  const ChunkResult& step();
  const RolloutState& state() const { return state_; }
  const RolloutTrace& trace() const { return trace_; }
  RolloutTrace take_trace() { return std::move(trace_); }

 private:
  NarrativeScript script_;
  ModelConfig cfg_;
  StepOptions opts_;
  TopicSpace space_;
  ModelWeights weights_;
  RolloutState state_;
  RolloutTrace trace_;
  std::size_t segment_ = 0;
  std::size_t chunk_in_segment_ = 0;
  std::uint64_t chunk_id_ = 0;
  std::optional<TextQuery> prompt_;
};

RolloutTrace rollout(const NarrativeScript& script, const ModelConfig& cfg, Mode mode,
                     const StepOptions& opts = {});

/// Unrestricted attention of q_vis over memory ++ local keys for one
/// (layer, head), written as plain loops with no shared kernels.
Mat full_memory_attention_oracle(const Mat& q_vis, std::span<const FramePtr> memory,
                                 std::span<const FramePtr> local, std::size_t layer,
                                 std::size_t head, double scale);

}  // namespace chunkmem
