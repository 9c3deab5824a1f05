// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "chunkmem/toymodel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "chunkmem/error.hpp"
#include "chunkmem/hash.hpp"

namespace chunkmem {

namespace {

// Stream tags keep independent draws from sharing a generator state.
constexpr std::uint64_t kTagTopics = 0x746f70696373ULL;
constexpr std::uint64_t kTagWeights = 0x77656967687473ULL;
constexpr std::uint64_t kTagChunk = 0x6368756e6bULL;
constexpr std::uint64_t kTagPrompt = 0x70726f6d7074ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Mat gaussian(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
  Mat m(rows, cols);
  for (double& x : m.data()) x = rng.normal() * stddev;
  return m;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::kInvalidConfig, what);
}

}  // namespace

void ModelConfig::validate() const {
  require(layers >= 1 && heads >= 1 && head_dim >= 1, "layers, heads and head_dim must be >= 1");
  require(tokens_per_frame >= 1, "tokens_per_frame must be >= 1");
  require(chunk_frames >= 1 && window_frames >= 1, "chunk_frames and window_frames must be >= 1");
  require(bank_capacity >= 1, "bank_capacity must be >= 1");
  require(sma_k >= 1, "sma_k must be >= 1");
  require(sma_k <= bank_capacity + chunk_frames, "sma_k must not exceed bank_capacity + chunk_frames");
  require(num_topics >= 1 && num_topics <= model_dim(), "num_topics must be in [1, heads*head_dim]");
  require(noise_eps >= 0.0 && std::isfinite(noise_eps), "noise_eps must be finite and >= 0");
  require(prompt_noise >= 0.0 && std::isfinite(prompt_noise), "prompt_noise must be finite and >= 0");
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

TopicSpace make_topic_space(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t dim = cfg.model_dim();
  Rng rng(mix_seed({cfg.seed, kTagTopics}));
  TopicSpace space;
  space.noise_eps = cfg.noise_eps;
  space.prompt_noise = cfg.prompt_noise;
  // Gram-Schmidt over Gaussian draws; redraw in the (measure-zero) degenerate case.
  while (space.centroids.size() < cfg.num_topics) {
    Vec v(dim);
    for (std::size_t i = 0; i < dim; ++i) v[i] = rng.normal();
    for (const Vec& c : space.centroids) {
      const double proj = dot(v.data(), c.data());
      for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * c[i];
    }
    const double norm = std::sqrt(dot(v.data(), v.data()));
    if (norm < 1e-8) continue;
    for (std::size_t i = 0; i < dim; ++i) v[i] /= norm;
    space.centroids.push_back(std::move(v));
  }
  return space;
}

std::uint64_t ModelWeights::hash() const {
  Hasher h;
  h.u64(layers);
  h.u64(heads);
  for (const HeadWeights& w : per_head) {
    h.f64s(w.wq.data());
    h.f64s(w.wk.data());
    h.f64s(w.wv.data());
  }
  return h.digest();
}

ModelWeights init_weights(const ModelConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed({cfg.seed, kTagWeights}));
  const double stddev = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim));
  ModelWeights w;
  w.layers = cfg.layers;
  w.heads = cfg.heads;
  w.per_head.reserve(cfg.layers * cfg.heads);
  for (std::size_t i = 0; i < cfg.layers * cfg.heads; ++i) {
    HeadWeights hw;
    hw.wk = gaussian(rng, cfg.model_dim(), cfg.head_dim, stddev);
    hw.wq = hw.wk;
    hw.wv = gaussian(rng, cfg.model_dim(), cfg.head_dim, stddev);
    w.per_head.push_back(std::move(hw));
  }
  return w;
}

Mat project_queries(const Mat& tokens, const ModelWeights& weights, std::size_t layer,
                    std::size_t head) {
  return matmul(tokens, weights.at(layer, head).wq);
}

TextQuery encode_prompt(std::string_view text, int topic, const ModelConfig& cfg,
                        const TopicSpace& space, const ModelWeights& weights) {
  if (topic < 0 || static_cast<std::size_t>(topic) >= space.centroids.size()) {
    throw Error(ErrorKind::kUnknownTopic, "topic " + std::to_string(topic) + " with " +
                                              std::to_string(space.centroids.size()) + " topics");
  }
  std::vector<std::string> words;
  {
    std::istringstream in{std::string(text)};
    std::string w;
    while (in >> w) words.push_back(w);
  }
  if (words.empty()) throw Error(ErrorKind::kEmptyInput, "prompt text has no tokens");

  const std::size_t dim = cfg.model_dim();
  const Vec& centroid = space.centroids[static_cast<std::size_t>(topic)];
  const double stddev = space.prompt_noise / std::sqrt(static_cast<double>(dim));
  Mat tokens(words.size(), dim);
  for (std::size_t t = 0; t < words.size(); ++t) {
    Hasher wh;
    wh.str(words[t]);
    Rng rng(mix_seed({cfg.seed, kTagPrompt, wh.digest(), t}));
    auto row = tokens.row(t);
    for (std::size_t i = 0; i < dim; ++i) row[i] = centroid[i] + rng.normal() * stddev;
  }

  TextQuery q;
  q.layers = cfg.layers;
  q.heads = cfg.heads;
  q.per_head.reserve(cfg.layers * cfg.heads);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      q.per_head.push_back(mean_pool_rows(project_queries(tokens, weights, l, h)));
    }
  }
  return q;
}

ChunkTokens synth_chunk(int topic, std::uint64_t chunk_id, const ModelConfig& cfg,
                        const TopicSpace& space) {
  if (topic < 0 || static_cast<std::size_t>(topic) >= space.centroids.size()) {
    throw Error(ErrorKind::kUnknownTopic, "topic " + std::to_string(topic));
  }
  const std::size_t dim = cfg.model_dim();
  const Vec& centroid = space.centroids[static_cast<std::size_t>(topic)];
  const double stddev = space.noise_eps / std::sqrt(static_cast<double>(dim));
  ChunkTokens chunk;
  chunk.chunk_id = chunk_id;
  chunk.topic_label = topic;
  chunk.frames.reserve(cfg.chunk_frames);
  for (std::size_t f = 0; f < cfg.chunk_frames; ++f) {
    Rng rng(mix_seed({cfg.seed, kTagChunk, chunk_id, f}));
    Mat tokens(cfg.tokens_per_frame, dim);
    for (std::size_t t = 0; t < cfg.tokens_per_frame; ++t) {
      auto row = tokens.row(t);
      for (std::size_t i = 0; i < dim; ++i) row[i] = centroid[i] + rng.normal() * stddev;
    }
    chunk.frames.push_back(std::move(tokens));
  }
  return chunk;
}

std::vector<FramePtr> project_kv(const ChunkTokens& chunk, const ModelConfig& cfg,
                                 const ModelWeights& weights) {
  if (weights.layers != cfg.layers || weights.heads != cfg.heads) {
    throw Error(ErrorKind::kShape, "weights do not match config layers/heads");
  }
  std::vector<FramePtr> out;
  out.reserve(chunk.frames.size());
  for (std::size_t f = 0; f < chunk.frames.size(); ++f) {
    const Mat& tokens = chunk.frames[f];
    if (tokens.cols() != cfg.model_dim()) {
      throw Error(ErrorKind::kShape, "frame tokens have " + std::to_string(tokens.cols()) +
                                         " columns, model_dim is " +
                                         std::to_string(cfg.model_dim()));
    }
    std::vector<HeadKV> kv;
    kv.reserve(cfg.layers * cfg.heads);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      for (std::size_t h = 0; h < cfg.heads; ++h) {
        const HeadWeights& w = weights.at(l, h);
        kv.push_back(HeadKV{matmul(tokens, w.wk), matmul(tokens, w.wv)});
      }
    }
    out.push_back(std::make_shared<const FrameKV>(chunk.chunk_id * cfg.chunk_frames + f,
                                                  chunk.chunk_id, chunk.topic_label, cfg.layers,
                                                  cfg.heads, std::move(kv)));
  }
  return out;
}

}  // namespace chunkmem
