// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "chunkmem/engine.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "chunkmem/error.hpp"
#include "chunkmem/hash.hpp"

namespace chunkmem {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Mat prefix_rows(const Mat& m, std::size_t rows) {
  auto d = m.data();
  return Mat(rows, m.cols(), std::vector<double>(d.begin(), d.begin() + rows * m.cols()));
}

Mat row_block(const Mat& m, std::size_t first, std::size_t count) {
  auto d = m.data();
  return Mat(count, m.cols(), std::vector<double>(d.begin() + first * m.cols(),
                                                  d.begin() + (first + count) * m.cols()));
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

struct LayerAttention {
  Mat output;  // (T*P) x (H*d)
  std::size_t keys = 0;
};

// One layer: every head attends over [memory] ++ [window] ++ [chunk frames <= i].
LayerAttention attend_layer(std::span<const Mat> queries, std::span<const FramePtr> memory,
                            std::span<const FramePtr> window, std::span<const FramePtr> chunk,
                            const ModelConfig& cfg, std::size_t layer) {
  const std::size_t p = cfg.tokens_per_frame;
  const std::size_t d = cfg.head_dim;
  const std::size_t t_frames = chunk.size();
  const double scale = default_scale(d);

  LayerAttention out{Mat(t_frames * p, cfg.heads * d), 0};
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const Mat mem_k = stack_keys(memory, layer, h);
    const Mat mem_v = stack_values(memory, layer, h);
    const Mat win_k = stack_keys(window, layer, h);
    const Mat win_v = stack_values(window, layer, h);
    const Mat cur_k = stack_keys(chunk, layer, h);
    const Mat cur_v = stack_values(chunk, layer, h);
    const Mat* k_parts[] = {&mem_k, &win_k, &cur_k};
    const Mat* v_parts[] = {&mem_v, &win_v, &cur_v};
    const Mat all_k = concat_rows(k_parts);
    const Mat all_v = concat_rows(v_parts);
    const std::size_t context = mem_k.rows() + win_k.rows();

    for (std::size_t i = 0; i < t_frames; ++i) {
      const std::size_t visible = context + (i + 1) * p;
      const Mat q = row_block(queries[h], i * p, p);
      const Mat o = sdp_attention(q, prefix_rows(all_k, visible), prefix_rows(all_v, visible), scale);
      out.keys += q.rows() * visible;
      for (std::size_t r = 0; r < p; ++r) {
        auto src = o.row(r);
        auto dst = out.output.row(i * p + r);
        std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(h * d));
      }
    }
  }
  return out;
}

double l2_norm_sq(const Mat& m) {
  double s = 0.0;
  for (double x : m.data()) s += x * x;
  return s;
}

}  // namespace

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::kNoMemory: return "no_memory";
    case Mode::kFrameSink: return "frame_sink";
    case Mode::kNamFull: return "nam";
    case Mode::kNamSma: return "nam_sma";
  }
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : kAllModes) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorKind::kInvalidConfig,
              "unknown mode '" + std::string(name) + "' (expected no_memory, frame_sink, nam, nam_sma)");
}

std::size_t NarrativeScript::total_chunks() const {
  std::size_t n = 0;
  for (const Segment& s : segments) n += s.chunks;
  return n;
}

std::size_t NarrativeScript::segment_of_chunk(std::uint64_t chunk_id) const {
  std::uint64_t end = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    end += segments[i].chunks;
    if (chunk_id < end) return i;
  }
  throw Error(ErrorKind::kBounds, "chunk " + std::to_string(chunk_id) + " beyond script end");
}

int NarrativeScript::topic_of_chunk(std::uint64_t chunk_id) const {
  return segments[segment_of_chunk(chunk_id)].topic;
}

RolloutState RolloutState::initial(const ModelConfig& cfg, Mode mode) {
  cfg.validate();
  RolloutState s;
  s.mode = mode;
  s.bank = MemoryBank(cfg.bank_capacity);
  return s;
}

std::uint64_t ChunkResult::hash() const {
  Hasher h;
  h.u64(chunk_id);
  h.u64(segment);
  for (const Mat& m : attention_outputs) h.f64s(m.data());
  for (const ActivationSet& a : activation_sets) {
    h.u64(a.indices.size());
    for (std::size_t i : a.indices) h.u64(i);
    h.f64s(a.scores);
  }
  for (auto id : candidate_ids) h.u64(id);
  h.u64(window_frames);
  h.u64(attended_key_count);
  h.u64(memory_updated ? 1 : 0);
  for (const auto* ids : {&pre_update_bank_ids, &retained_bank_ids, &bank_ids}) {
    h.u64(ids->size());
    for (auto id : *ids) h.u64(id);
  }
  return h.digest();
}

std::size_t expected_attended_keys(const ModelConfig& cfg,
                                   std::span<const std::size_t> selected_per_layer,
                                   std::size_t window_frames) {
  const std::size_t p = cfg.tokens_per_frame;
  const std::size_t t = cfg.chunk_frames;
  std::size_t total = 0;
  for (std::size_t selected : selected_per_layer) {
    total += t * p * p * (selected + window_frames) + p * p * t * (t + 1) / 2;
  }
  return total * cfg.heads;
}

StepOutput step_chunk(const RolloutState& state, const TextQuery& prompt, const ChunkTokens& chunk,
                      const ModelConfig& cfg, const ModelWeights& weights, const StepOptions& opts) {
  if (chunk.frames.size() != cfg.chunk_frames) {
    throw Error(ErrorKind::kShape, "chunk has " + std::to_string(chunk.frames.size()) +
                                       " frames, config expects " +
                                       std::to_string(cfg.chunk_frames));
  }
  for (const Mat& f : chunk.frames) {
    if (f.rows() != cfg.tokens_per_frame || f.cols() != cfg.model_dim()) {
      throw Error(ErrorKind::kShape, "chunk frame tokens do not match config");
    }
  }

  StepOutput out{state, {}};
  RolloutState& next = out.state;
  ChunkResult& res = out.result;
  res.chunk_id = chunk.chunk_id;

  const bool nam = state.mode == Mode::kNamFull || state.mode == Mode::kNamSma;

  // Retrieval with the incoming prompt, then update.
  if (nam && !state.prev_chunk.empty()) {
    res.memory_updated = true;
    res.pre_update_bank_ids = state.bank.frame_ids();
    auto t0 = Clock::now();
    RelevanceScores scores;
    if (!state.bank.empty()) scores = text_relevance_scores(prompt, state.bank);
    res.wall_time.retrieval = seconds_since(t0);

    t0 = Clock::now();
    MemoryUpdate upd = apply_retention(state.bank, std::move(scores), state.prev_chunk);
    res.wall_time.update = seconds_since(t0);
    for (std::size_t i : upd.retained) res.retained_bank_ids.push_back(state.bank[i].frame_id());
    next.bank = std::move(upd.bank);
  }
  res.bank_ids = next.bank.frame_ids();

  std::vector<FramePtr> candidates;
  if (state.mode != Mode::kNoMemory) {
    candidates = next.sink.frames();
    if (nam) candidates.insert(candidates.end(), next.bank.frames().begin(), next.bank.frames().end());
  }
  for (const FramePtr& f : candidates) res.candidate_ids.push_back(f->frame_id());

  const std::vector<FramePtr> cur_frames = project_kv(chunk, cfg, weights);
  const std::vector<const Mat*> token_parts = [&] {
    std::vector<const Mat*> v;
    for (const Mat& f : chunk.frames) v.push_back(&f);
    return v;
  }();
  const Mat tokens = concat_rows(token_parts);
  res.window_frames = state.local_window.size();

  double fidelity_num = 0.0;
  double fidelity_den = 0.0;

  for (std::size_t l = 0; l < cfg.layers; ++l) {
    std::vector<Mat> queries;
    queries.reserve(cfg.heads);
    for (std::size_t h = 0; h < cfg.heads; ++h) queries.push_back(project_queries(tokens, weights, l, h));

    auto t0 = Clock::now();
    ActivationSet active;
    if (!candidates.empty()) {
      if (state.mode == Mode::kNamSma) {
        active = select_top_k(layer_frame_scores(queries, candidates, l), cfg.sma_k);
      } else {
        active.indices = all_indices(candidates.size());
        active.scores.assign(candidates.size(), 0.0);
      }
    }
    std::vector<FramePtr> memory;
    memory.reserve(active.indices.size());
    for (std::size_t i : active.indices) memory.push_back(candidates[i]);
    res.wall_time.selection += seconds_since(t0);

    t0 = Clock::now();
    LayerAttention la = attend_layer(queries, memory, state.local_window, cur_frames, cfg, l);
    res.wall_time.attention += seconds_since(t0);

    if (opts.measure_fidelity && state.mode == Mode::kNamSma && !candidates.empty()) {
      LayerAttention full = attend_layer(queries, candidates, state.local_window, cur_frames, cfg, l);
      Mat diff = la.output;
      for (std::size_t i = 0; i < diff.data().size(); ++i) diff.data()[i] -= full.output.data()[i];
      fidelity_num += l2_norm_sq(diff);
      fidelity_den += l2_norm_sq(full.output);
    }

    res.attended_key_count += la.keys;
    res.attention_outputs.push_back(std::move(la.output));
    res.activation_sets.push_back(std::move(active));
  }
  if (opts.measure_fidelity && state.mode == Mode::kNamSma && !candidates.empty()) {
    res.sma_vs_full_l2 = fidelity_den > 0.0 ? std::sqrt(fidelity_num / fidelity_den) : 0.0;
  }

  // Roll the local window and remember this chunk for the next update.
  next.local_window.insert(next.local_window.end(), cur_frames.begin(), cur_frames.end());
  if (next.local_window.size() > cfg.window_frames) {
    next.local_window.erase(next.local_window.begin(),
                            next.local_window.end() - static_cast<std::ptrdiff_t>(cfg.window_frames));
  }
  if (!next.sink.is_set()) next.sink.set(cur_frames);
  next.prev_chunk = cur_frames;
  ++next.chunk_counter;
  return out;
}

RolloutRunner::RolloutRunner(const NarrativeScript& script, const ModelConfig& cfg, Mode mode,
                             const StepOptions& opts)
    : script_(script),
      cfg_(cfg),
      opts_(opts),
      space_(make_topic_space(cfg)),
      weights_(init_weights(cfg)),
      state_(RolloutState::initial(cfg, mode)) {
  if (script_.segments.empty()) throw Error(ErrorKind::kEmptyInput, "script has no segments");
  for (const Segment& seg : script_.segments) {
    if (seg.chunks == 0) throw Error(ErrorKind::kInvalidConfig, "segment with zero chunks");
  }
  trace_.mode = mode;
  trace_.chunks.reserve(script_.total_chunks());
}

const ChunkResult& RolloutRunner::step() {
  if (done()) throw Error(ErrorKind::kBounds, "rollout already finished");
  const Segment& seg = script_.segments[segment_];
  if (chunk_in_segment_ == 0) {
    prompt_ = encode_prompt(seg.prompt_text, seg.topic, cfg_, space_, weights_);
    ++trace_.prompt_switches;
  }
  const ChunkTokens chunk = synth_chunk(seg.topic, chunk_id_, cfg_, space_);
  StepOutput out = step_chunk(state_, *prompt_, chunk, cfg_, weights_, opts_);
  out.result.segment = segment_;
  state_ = std::move(out.state);
  trace_.chunks.push_back(std::move(out.result));

  ++chunk_id_;
  if (++chunk_in_segment_ == seg.chunks) {
    chunk_in_segment_ = 0;
    ++segment_;
  }
  return trace_.chunks.back();
}

RolloutTrace rollout(const NarrativeScript& script, const ModelConfig& cfg, Mode mode,
                     const StepOptions& opts) {
  RolloutRunner runner(script, cfg, mode, opts);
  while (!runner.done()) runner.step();
  return runner.take_trace();
}

Mat full_memory_attention_oracle(const Mat& q_vis, std::span<const FramePtr> memory,
                                 std::span<const FramePtr> local, std::size_t layer,
                                 std::size_t head, double scale) {
  std::vector<const Mat*> keys;
  std::vector<const Mat*> values;
  for (auto frames : {memory, local}) {
    for (const FramePtr& f : frames) {
      keys.push_back(&f->keys(layer, head));
      values.push_back(&f->values(layer, head));
    }
  }
  if (keys.empty()) throw Error(ErrorKind::kEmptyInput, "oracle attention over zero keys");
  const std::size_t d = q_vis.cols();
  const std::size_t dv = values.front()->cols();
  for (const Mat* k : keys) {
    if (k->cols() != d) throw Error(ErrorKind::kShape, "oracle key dim mismatch");
  }

  Mat out(q_vis.rows(), dv);
  for (std::size_t r = 0; r < q_vis.rows(); ++r) {
    std::vector<double> logits;
    for (const Mat* k : keys) {
      for (std::size_t t = 0; t < k->rows(); ++t) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += q_vis(r, c) * (*k)(t, c);
        logits.push_back(s * scale);
      }
    }
    double mx = logits[0];
    for (double x : logits) mx = x > mx ? x : mx;
    double z = 0.0;
    for (double& x : logits) {
      x = std::exp(x - mx);
      z += x;
    }
    std::size_t j = 0;
    for (const Mat* v : values) {
      for (std::size_t t = 0; t < v->rows(); ++t, ++j) {
        const double w = logits[j] / z;
        for (std::size_t c = 0; c < dv; ++c) out(r, c) += w * (*v)(t, c);
      }
    }
  }
  return out;
}

}  // namespace chunkmem
