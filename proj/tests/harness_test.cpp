// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "chunkmem/error.hpp"
#include "chunkmem/harness.hpp"

namespace chunkmem {
namespace {

const std::filesystem::path kData = std::filesystem::path(CHUNKMEM_SOURCE_DIR) / "data";

ErrorKind script_error(std::string_view text) {
  try {
    parse_script_text(text);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "accepted: " << text;
  return ErrorKind::kBounds;
}

NarrativeScript script_of(std::initializer_list<std::pair<int, std::size_t>> segs) {
  NarrativeScript s;
  s.seed = 5;
  int i = 0;
  for (auto [topic, chunks] : segs) s.segments.push_back({"segment " + std::to_string(i++), topic, chunks});
  return s;
}

TEST(ScriptTest, MinimalFile) {
  const NarrativeScript s = parse_script(kData / "scripts" / "minimal.json");
  ASSERT_EQ(s.segments.size(), 1u);
  EXPECT_EQ(s.seed, 1u);
  EXPECT_EQ(s.segments[0].chunks, 4u);
}

TEST(ScriptTest, MissingTopicIsSchemaError) {
  try {
    parse_script(kData / "scripts" / "missing_topic.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSchema);
    EXPECT_NE(std::string(e.what()).find("segments[1]"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("topic"), std::string::npos) << e.what();
  }
}

TEST(ScriptTest, SixSegmentsInOrder) {
  const NarrativeScript s = parse_script(kData / "scripts" / "six_prompts.json");
  ASSERT_EQ(s.segments.size(), 6u);
  const int topics[] = {0, 1, 2, 0, 1, 2};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(s.segments[i].topic, topics[i]);
  EXPECT_EQ(s.total_chunks(), 24u);
}

TEST(ScriptTest, MalformedJsonReportsLine) {
  try {
    parse_script_text("{\n  \"seed\": 1,\n  \"segments\": [\n}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(ScriptTest, SchemaViolations) {
  EXPECT_EQ(script_error("[]"), ErrorKind::kSchema);
  EXPECT_EQ(script_error(R"({"seed": 1, "segments": []})"), ErrorKind::kSchema);
  EXPECT_EQ(script_error(R"({"segments": [{"prompt_text": "a", "topic": 0, "chunks": 1}]})"),
            ErrorKind::kSchema);
  EXPECT_EQ(script_error(R"({"seed": 1, "segments": [{"prompt_text": "a", "topic": 0, "chunks": 0}]})"),
            ErrorKind::kSchema);
  EXPECT_EQ(script_error(R"({"seed": 1, "segments": [{"prompt_text": 3, "topic": 0, "chunks": 1}]})"),
            ErrorKind::kSchema);
  EXPECT_EQ(script_error(R"({"seed": -1, "segments": [{"prompt_text": "a", "topic": 0, "chunks": 1}]})"),
            ErrorKind::kSchema);
  EXPECT_THROW(parse_script(kData / "no_such_file.json"), Error);
}

TEST(ScriptTest, RoundTrip) {
  const NarrativeScript s = parse_script(kData / "scripts" / "six_prompts.json");
  const NarrativeScript back = parse_script_text(script_to_json(s));
  ASSERT_EQ(back.segments.size(), s.segments.size());
  EXPECT_EQ(back.seed, s.seed);
  EXPECT_EQ(back.segments[4].prompt_text, s.segments[4].prompt_text);
}

TEST(ConfigTest, NamedFieldsAndDefaults) {
  const ModelConfig c = parse_config_text(R"({"bank_capacity": 6, "noise_eps": 0.1})");
  EXPECT_EQ(c.bank_capacity, 6u);
  EXPECT_EQ(c.noise_eps, 0.1);
  EXPECT_EQ(c.layers, ModelConfig{}.layers);
  const ModelConfig d = parse_config(kData / "configs" / "default.json");
  EXPECT_EQ(d.sma_k, 2u);
  EXPECT_THROW(parse_config_text(R"({"bank_size": 6})"), Error);
  EXPECT_THROW(parse_config_text(R"({"layers": "two"})"), Error);
  EXPECT_THROW(parse_config_text(R"({"sma_k": 9})"), Error);
}

TEST(PrecisionTest, SingleTopicIsPerfect) {
  const NarrativeScript s = script_of({{3, 8}});
  ModelConfig cfg;
  const RolloutTrace t = rollout(s, cfg, Mode::kNamFull);
  const PrecisionResult p = retrieval_precision(t, s, cfg);
  EXPECT_GT(p.eligible_updates, 0u);
  EXPECT_EQ(p.precision(), 1.0);
}

TEST(PrecisionTest, NoiselessRevisitIsPerfect) {
  const NarrativeScript s = script_of({{0, 2}, {1, 1}, {0, 3}, {2, 2}, {1, 2}});
  ModelConfig cfg;
  cfg.noise_eps = 0.0;
  for (Mode mode : {Mode::kNamFull, Mode::kNamSma}) {
    const PrecisionResult p = retrieval_precision(rollout(s, cfg, mode), s, cfg);
    EXPECT_GT(p.eligible_updates, 0u);
    EXPECT_EQ(p.precision(), 1.0);
  }
}

TEST(PrecisionTest, NoRevisitsHasNoEligibleUpdates) {
  const NarrativeScript s = script_of({{0, 1}, {1, 1}, {2, 1}, {3, 1}});
  ModelConfig cfg;
  const RunReport r = run_rollout(s, cfg, Mode::kNamSma);
  EXPECT_EQ(r.metrics.eligible_updates, 0u);
  EXPECT_FALSE(r.metrics.retrieval_precision.has_value());
  std::ostringstream out;
  write_metrics_json(out, r);
  EXPECT_NE(out.str().find("no eligible updates"), std::string::npos);
}

TEST(PrecisionTest, WrongModeIsInapplicable) {
  const NarrativeScript s = script_of({{0, 2}});
  ModelConfig cfg;
  try {
    retrieval_precision(rollout(s, cfg, Mode::kFrameSink), s, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInapplicableMetric);
  }
}

TEST(MetricsTest, FieldsAndDeterminism) {
  const NarrativeScript s = script_of({{0, 2}, {1, 2}, {0, 2}});
  ModelConfig cfg;
  const RunReport a = run_rollout(s, cfg, Mode::kNamSma);
  const RunReport b = run_rollout(s, cfg, Mode::kNamSma);
  EXPECT_EQ(a.metrics.determinism_hash, b.metrics.determinism_hash);
  EXPECT_EQ(a.metrics.chunks, 6u);
  EXPECT_EQ(a.metrics.prompt_switches, 3u);
  ASSERT_TRUE(a.metrics.sma_vs_full_l2.has_value());
  EXPECT_GE(*a.metrics.sma_vs_full_l2, 0.0);
  EXPECT_GT(a.metrics.chunks_per_second, 0.0);
  EXPECT_EQ(run_rollout(s, cfg, Mode::kNamFull).metrics.sma_vs_full_l2, 0.0);
  EXPECT_FALSE(run_rollout(s, cfg, Mode::kNoMemory).metrics.sma_vs_full_l2.has_value());
  EXPECT_NE(run_rollout(s, cfg, Mode::kNamFull).metrics.determinism_hash, a.metrics.determinism_hash);

  std::ostringstream out;
  write_metrics_json(out, a);
  for (const char* field : {"retrieval_precision", "sma_vs_full_l2", "mean_attended_keys",
                            "chunks_per_second", "determinism_hash"}) {
    EXPECT_NE(out.str().find(std::string("\"") + field + "\""), std::string::npos) << field;
  }
}

TEST(GridTest, RowCounts) {
  const NarrativeScript s = script_of({{0, 2}, {1, 1}});
  ModelConfig cfg;
  const AblationReport mech = run_ablation_grid(s, cfg, parse_grid_text(R"({"modes": ["no_memory",
      "frame_sink", "nam", "nam_sma"], "b_values": [3], "repeat": 1})"));
  EXPECT_EQ(mech.rows.size(), 4u);
  EXPECT_EQ(mech.ordering.size(), 1u);
  const AblationReport cap = run_ablation_grid(s, cfg, parse_grid(kData / "grids" / "capacity.json"));
  ASSERT_EQ(cap.rows.size(), 3u);
  EXPECT_EQ(cap.rows[2].bank_capacity, 9u);
  EXPECT_EQ(cap.rows[0].chunks_per_second_runs.size(), 3u);
  EXPECT_TRUE(cap.ordering.empty());
  GridSpec empty;
  empty.b_values = {3};
  EXPECT_THROW(run_ablation_grid(s, cfg, empty), Error);
  EXPECT_THROW(parse_grid_text(R"({"modes": ["fast"], "b_values": [3]})"), Error);
}

TEST(GridTest, ParallelCellsMatchSerialExceptTiming) {
  const NarrativeScript s = script_of({{0, 2}, {1, 2}});
  ModelConfig cfg;
  GridSpec g{{Mode::kNamSma, Mode::kNamFull}, {3, 6}, 1};
  const AblationReport a = run_ablation_grid(s, cfg, g, 1);
  const AblationReport b = run_ablation_grid(s, cfg, g, 3);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].mode, b.rows[i].mode);
    EXPECT_EQ(a.rows[i].metrics.determinism_hash, b.rows[i].metrics.determinism_hash);
    EXPECT_EQ(a.rows[i].metrics.sma_vs_full_l2, b.rows[i].metrics.sma_vs_full_l2);
  }
}

TEST(ReportTest, CsvHeaderAndNumberFormat) {
  AblationReport r;
  AblationRow row;
  row.mode = Mode::kNamSma;
  row.bank_capacity = 3;
  row.metrics.retrieval_precision = 2.0 / 3.0;
  row.metrics.mean_attended_keys = 123.0;
  row.metrics.chunks_per_second = 1234.56789012;
  r.rows.push_back(row);
  std::ostringstream out;
  write_ablation_csv(out, r);
  std::istringstream in(out.str());
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  EXPECT_EQ(header, "mode,bank_capacity,retrieval_precision,sma_vs_full_l2,mean_attended_keys,"
                    "chunks_per_second,determinism_hash");
  EXPECT_EQ(line, "nam_sma,3,0.666666667,,123,1234.56789,0000000000000000");
  EXPECT_EQ(format_number(1.0 / 7.0), "0.142857143");
}

TEST(SeedTest, FlagBeatsEnvBeatsScript) {
  NarrativeScript s;
  s.seed = 7;
  unsetenv(kSeedEnvVar);
  EXPECT_EQ(resolve_seed(std::nullopt, s), 7u);
  setenv(kSeedEnvVar, "99", 1);
  EXPECT_EQ(resolve_seed(std::nullopt, s), 99u);
  EXPECT_EQ(resolve_seed(3, s), 3u);
  setenv(kSeedEnvVar, "abc", 1);
  EXPECT_THROW(resolve_seed(std::nullopt, s), Error);
  unsetenv(kSeedEnvVar);
}

}  // namespace
}  // namespace chunkmem
