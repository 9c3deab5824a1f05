// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "chunkmem/error.hpp"
#include "chunkmem/toymodel.hpp"

namespace chunkmem {
namespace {

double cosine(const TextQuery& a, const TextQuery& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.per_head.size(); ++i) {
    for (std::size_t c = 0; c < a.per_head[i].dim(); ++c) {
      ab += a.per_head[i][c] * b.per_head[i][c];
      aa += a.per_head[i][c] * a.per_head[i][c];
      bb += b.per_head[i][c] * b.per_head[i][c];
    }
  }
  return ab / std::sqrt(aa * bb);
}

TEST(ConfigTest, DefaultsValidate) {
  ModelConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.model_dim(), 32u);
  EXPECT_EQ(cfg.window_frames, 2 * cfg.bank_capacity);
}

TEST(ConfigTest, RejectsBadValues) {
  auto rejects = [](auto mutate) {
    ModelConfig cfg;
    mutate(cfg);
    try {
      cfg.validate();
    } catch (const Error& e) {
      return e.kind() == ErrorKind::kInvalidConfig;
    }
    return false;
  };
  EXPECT_TRUE(rejects([](ModelConfig& c) { c.layers = 0; }));
  EXPECT_TRUE(rejects([](ModelConfig& c) { c.tokens_per_frame = 0; }));
  EXPECT_TRUE(rejects([](ModelConfig& c) { c.bank_capacity = 0; }));
  EXPECT_TRUE(rejects([](ModelConfig& c) { c.sma_k = 0; }));
  EXPECT_TRUE(rejects([](ModelConfig& c) { c.sma_k = 7; }));
  EXPECT_TRUE(rejects([](ModelConfig& c) { c.num_topics = 33; }));
  EXPECT_TRUE(rejects([](ModelConfig& c) { c.noise_eps = -1; }));
  EXPECT_FALSE(rejects([](ModelConfig& c) { c.sma_k = 6; }));
}

TEST(RngTest, DeterministicAndRoughlyStandard) {
  Rng a(42), b(42);
  double sum = 0, sq = 0;
  constexpr int kN = 20000;
  for (int i = 0; i < kN; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / kN, 0.0, 0.05);
  EXPECT_NEAR(sq / kN, 1.0, 0.05);
  EXPECT_NE(mix_seed({1, 2}), mix_seed({2, 1}));
  const double u = a.uniform();
  EXPECT_GE(u, 0.0);
  EXPECT_LT(u, 1.0);
}

TEST(TopicSpaceTest, CentroidsOrthonormal) {
  ModelConfig cfg;
  cfg.num_topics = cfg.model_dim();
  const TopicSpace s = make_topic_space(cfg);
  ASSERT_EQ(s.centroids.size(), cfg.model_dim());
  for (std::size_t i = 0; i < s.centroids.size(); ++i) {
    for (std::size_t j = 0; j < s.centroids.size(); ++j) {
      double d = 0;
      for (std::size_t c = 0; c < cfg.model_dim(); ++c) d += s.centroids[i][c] * s.centroids[j][c];
      if (i == j) {
        EXPECT_NEAR(d, 1.0, 1e-12);
      } else {
        EXPECT_LE(std::abs(d), 0.1);
      }
    }
  }
}

TEST(WeightsTest, DeterminismAndShapes) {
  ModelConfig cfg;
  cfg.seed = 9;
  const ModelWeights a = init_weights(cfg);
  EXPECT_EQ(a.hash(), init_weights(cfg).hash());
  cfg.seed = 10;
  EXPECT_NE(a.hash(), init_weights(cfg).hash());
  ASSERT_EQ(a.per_head.size(), cfg.layers * cfg.heads);
  for (const HeadWeights& w : a.per_head) {
    EXPECT_EQ(w.wq.rows(), cfg.model_dim());
    EXPECT_EQ(w.wq.cols(), cfg.head_dim);
    EXPECT_EQ(w.wv.rows(), cfg.model_dim());
    EXPECT_EQ(w.wv.cols(), cfg.head_dim);
    EXPECT_EQ(w.wq, w.wk);
    EXPECT_NE(w.wq, w.wv);
  }
}

TEST(PromptTest, DeterministicAndValidated) {
  ModelConfig cfg;
  const TopicSpace space = make_topic_space(cfg);
  const ModelWeights w = init_weights(cfg);
  const TextQuery a = encode_prompt("a red kite over the dunes", 2, cfg, space, w);
  const TextQuery b = encode_prompt("a red kite over the dunes", 2, cfg, space, w);
  ASSERT_EQ(a.per_head.size(), cfg.layers * cfg.heads);
  EXPECT_EQ(a.per_head, b.per_head);
  EXPECT_EQ(a.at(1, 1).dim(), cfg.head_dim);
  try {
    encode_prompt("x", 8, cfg, space, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnknownTopic);
  }
  EXPECT_THROW(encode_prompt("x", -1, cfg, space, w), Error);
  try {
    encode_prompt("   ", 0, cfg, space, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyInput);
  }
}

TEST(PromptTest, SameTopicPromptsAreCloser) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ModelConfig cfg;
    cfg.seed = seed;
    const TopicSpace space = make_topic_space(cfg);
    const ModelWeights w = init_weights(cfg);
    const int t = static_cast<int>(seed % cfg.num_topics);
    const int u = static_cast<int>((seed + 3) % cfg.num_topics);
    const TextQuery a = encode_prompt("boats drift in the harbor", t, cfg, space, w);
    const TextQuery b = encode_prompt("gulls circle the old pier", t, cfg, space, w);
    const TextQuery c = encode_prompt("gulls circle the old pier", u, cfg, space, w);
    wins += cosine(a, b) > cosine(a, c);
  }
  EXPECT_EQ(wins, 100);
}

TEST(SynthChunkTest, ZeroNoiseGivesCentroid) {
  ModelConfig cfg;
  cfg.noise_eps = 0.0;
  const TopicSpace space = make_topic_space(cfg);
  const ChunkTokens chunk = synth_chunk(5, 3, cfg, space);
  ASSERT_EQ(chunk.frames.size(), cfg.chunk_frames);
  EXPECT_EQ(chunk.topic_label, 5);
  for (const Mat& f : chunk.frames) {
    ASSERT_EQ(f.rows(), cfg.tokens_per_frame);
    for (std::size_t r = 0; r < f.rows(); ++r) {
      for (std::size_t c = 0; c < f.cols(); ++c) EXPECT_EQ(f(r, c), space.centroids[5][c]);
    }
  }
  EXPECT_THROW(synth_chunk(8, 0, cfg, space), Error);
}

TEST(SynthChunkTest, Deterministic) {
  ModelConfig cfg;
  const TopicSpace space = make_topic_space(cfg);
  EXPECT_EQ(synth_chunk(1, 4, cfg, space).frames, synth_chunk(1, 4, cfg, space).frames);
  EXPECT_NE(synth_chunk(1, 4, cfg, space).frames, synth_chunk(1, 5, cfg, space).frames);
}

TEST(SynthChunkTest, ChunkMeanConcentrates) {
  ModelConfig cfg;
  cfg.noise_eps = 0.1;
  const TopicSpace space = make_topic_space(cfg);
  const double n = static_cast<double>(cfg.tokens_per_frame * cfg.chunk_frames);
  const double bound = 3.0 * cfg.noise_eps / std::sqrt(n);
  for (std::uint64_t id = 0; id < 1000; ++id) {
    const int topic = static_cast<int>(id % cfg.num_topics);
    const ChunkTokens chunk = synth_chunk(topic, id, cfg, space);
    std::vector<double> mean(cfg.model_dim(), 0.0);
    for (const Mat& f : chunk.frames)
      for (std::size_t r = 0; r < f.rows(); ++r)
        for (std::size_t c = 0; c < f.cols(); ++c) mean[c] += f(r, c) / n;
    double dist = 0.0;
    for (std::size_t c = 0; c < mean.size(); ++c) {
      const double d = mean[c] - space.centroids[static_cast<std::size_t>(topic)][c];
      dist += d * d;
    }
    ASSERT_LE(std::sqrt(dist), bound) << "chunk " << id;
  }
}

TEST(ProjectKvTest, IdsShapesAndDeterminism) {
  ModelConfig cfg;
  const TopicSpace space = make_topic_space(cfg);
  const ModelWeights w = init_weights(cfg);
  const ChunkTokens chunk = synth_chunk(0, 4, cfg, space);
  const auto frames = project_kv(chunk, cfg, w);
  ASSERT_EQ(frames.size(), cfg.chunk_frames);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    EXPECT_EQ(frames[i]->frame_id(), 4 * cfg.chunk_frames + i);
    EXPECT_EQ(frames[i]->chunk_id(), 4u);
    EXPECT_EQ(frames[i]->tokens(), cfg.tokens_per_frame);
    EXPECT_EQ(frames[i]->head_dim(), cfg.head_dim);
  }
  const auto again = project_kv(chunk, cfg, w);
  EXPECT_EQ(frames[2]->content_hash(), again[2]->content_hash());
}

TEST(ProjectKvTest, ZeroTokensGiveZeroKv) {
  ModelConfig cfg;
  const ModelWeights w = init_weights(cfg);
  ChunkTokens chunk;
  chunk.frames.assign(cfg.chunk_frames, Mat(cfg.tokens_per_frame, cfg.model_dim()));
  for (const FramePtr& f : project_kv(chunk, cfg, w)) {
    EXPECT_EQ(f->keys(1, 0), Mat(cfg.tokens_per_frame, cfg.head_dim));
    EXPECT_EQ(f->values(0, 1), Mat(cfg.tokens_per_frame, cfg.head_dim));
  }
  chunk.frames[0] = Mat(cfg.tokens_per_frame, 3);
  EXPECT_THROW(project_kv(chunk, cfg, w), Error);
}

}  // namespace
}  // namespace chunkmem
