// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

// Training-free stand-in for a video transformer: seeded projections turn
// planted-topic frame tokens and prompt tokens into per-layer Q/K/V.

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "chunkmem/memory.hpp"
#include "chunkmem/nam.hpp"
#include "chunkmem/numerics.hpp"

namespace chunkmem {

struct ModelConfig {
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t head_dim = 16;
  std::size_t tokens_per_frame = 16;
  std::size_t chunk_frames = 3;   // T
  std::size_t window_frames = 6;  // n
  std::size_t bank_capacity = 3;  // b
  std::size_t sma_k = 2;
  std::uint64_t seed = 0;

  // Planted-topic generator.
  std::size_t num_topics = 8;
  double noise_eps = 0.05;
  double prompt_noise = 0.2;

  std::size_t model_dim() const { return heads * head_dim; }

  /// Throws kInvalidConfig on zero counts, sma_k > b + T, or more topics than
  /// model dimensions.
  void validate() const;
};

/// mt19937_64 with a Box-Muller normal sampler. std::normal_distribution is
/// implementation-defined; this keeps draws bit-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double normal();

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Mixes any number of words into one seed.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

struct TopicSpace {
  std::vector<Vec> centroids;  // orthonormal, model_dim each
  double noise_eps = 0.0;
  double prompt_noise = 0.0;
};

TopicSpace make_topic_space(const ModelConfig& cfg);

struct HeadWeights {
  Mat wq;  // model_dim x head_dim; also projects prompt tokens
  Mat wk;
  Mat wv;
};

struct ModelWeights {
  std::size_t layers = 0;
  std::size_t heads = 0;
  std::vector<HeadWeights> per_head;  // layer-major

  const HeadWeights& at(std::size_t layer, std::size_t head) const {
    return per_head[layer * heads + head];
  }
  std::uint64_t hash() const;
};

/// Query and key projections are tied (wq == wk) so that prompt queries,
/// chunk queries and cached keys share one geometry; wv is independent.
ModelWeights init_weights(const ModelConfig& cfg);

TextQuery encode_prompt(std::string_view text, int topic, const ModelConfig& cfg,
                        const TopicSpace& space, const ModelWeights& weights);

struct ChunkTokens {
  std::uint64_t chunk_id = 0;
  int topic_label = 0;
  std::vector<Mat> frames;  // T matrices, P x model_dim
};

ChunkTokens synth_chunk(int topic, std::uint64_t chunk_id, const ModelConfig& cfg,
                        const TopicSpace& space);

/// Frame ids are chunk_id * T + i.
std::vector<FramePtr> project_kv(const ChunkTokens& chunk, const ModelConfig& cfg,
                                 const ModelWeights& weights);

/// tokens · wq for one (layer, head).
Mat project_queries(const Mat& tokens, const ModelWeights& weights, std::size_t layer,
                    std::size_t head);

}  // namespace chunkmem
