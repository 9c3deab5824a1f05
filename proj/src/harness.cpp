// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "chunkmem/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "chunkmem/error.hpp"
#include "chunkmem/hash.hpp"
#include "json.hpp"

namespace chunkmem {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kParse, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // nlohmann reports "at line L, column C" in what().
    throw Error(ErrorKind::kParse, e.what());
  }
}

const json& require_field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorKind::kSchema, where + ": missing field '" + key + "'");
  return *it;
}

std::uint64_t as_u64(const json& v, const std::string& where) {
  // nlohmann stores every non-negative integer literal as unsigned.
  if (!v.is_number_unsigned()) {
    throw Error(ErrorKind::kSchema, where + ": expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// Round to 9 significant digits so JSON and CSV carry the same values.
json num9(double x) { return json(std::stod(format_number(x))); }

json metrics_json(const RolloutMetrics& m) {
  json j;
  j["retrieval_precision"] = m.retrieval_precision ? num9(*m.retrieval_precision) : json(nullptr);
  if (!m.retrieval_precision) j["retrieval_note"] = "no eligible updates";
  j["eligible_updates"] = m.eligible_updates;
  j["sma_vs_full_l2"] = m.sma_vs_full_l2 ? num9(*m.sma_vs_full_l2) : json(nullptr);
  j["mean_attended_keys"] = num9(m.mean_attended_keys);
  j["chunks_per_second"] = num9(m.chunks_per_second);
  j["determinism_hash"] = hex64(m.determinism_hash);
  j["prompt_switches"] = m.prompt_switches;
  j["chunks"] = m.chunks;
  return j;
}

json config_json(const ModelConfig& c) {
  return json{{"layers", c.layers},
              {"heads", c.heads},
              {"head_dim", c.head_dim},
              {"tokens_per_frame", c.tokens_per_frame},
              {"chunk_frames", c.chunk_frames},
              {"window_frames", c.window_frames},
              {"bank_capacity", c.bank_capacity},
              {"sma_k", c.sma_k},
              {"seed", c.seed},
              {"num_topics", c.num_topics},
              {"noise_eps", c.noise_eps},
              {"prompt_noise", c.prompt_noise}};
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

NarrativeScript parse_script_text(std::string_view json_text) {
  const json doc = parse_json(json_text);
  if (!doc.is_object()) throw Error(ErrorKind::kSchema, "script: top level must be an object");
  NarrativeScript script;
  script.seed = as_u64(require_field(doc, "seed", "script"), "script.seed");
  const json& segs = require_field(doc, "segments", "script");
  if (!segs.is_array()) throw Error(ErrorKind::kSchema, "script.segments: expected an array");
  if (segs.empty()) throw Error(ErrorKind::kSchema, "script.segments: need at least one segment");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string where = "script.segments[" + std::to_string(i) + "]";
    const json& s = segs[i];
    if (!s.is_object()) throw Error(ErrorKind::kSchema, where + ": expected an object");
    Segment seg;
    const json& text = require_field(s, "prompt_text", where);
    if (!text.is_string()) throw Error(ErrorKind::kSchema, where + ".prompt_text: expected a string");
    seg.prompt_text = text.get<std::string>();
    const json& topic = require_field(s, "topic", where);
    seg.topic = static_cast<int>(as_u64(topic, where + ".topic"));
    seg.chunks = as_u64(require_field(s, "chunks", where), where + ".chunks");
    if (seg.chunks == 0) throw Error(ErrorKind::kSchema, where + ".chunks: must be >= 1");
    script.segments.push_back(std::move(seg));
  }
  return script;
}

NarrativeScript parse_script(const std::filesystem::path& path) {
  try {
    return parse_script_text(read_file(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string script_to_json(const NarrativeScript& script) {
  json segs = json::array();
  for (const Segment& s : script.segments) {
    segs.push_back({{"prompt_text", s.prompt_text}, {"topic", s.topic}, {"chunks", s.chunks}});
  }
  return json{{"seed", script.seed}, {"segments", segs}}.dump(2);
}

ModelConfig parse_config_text(std::string_view json_text, ModelConfig base) {
  const json doc = parse_json(json_text);
  if (!doc.is_object()) throw Error(ErrorKind::kSchema, "config: top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    const std::string where = "config." + key;
    auto count = [&](std::size_t& field) { field = as_u64(value, where); };
    auto real = [&](double& field) {
      if (!value.is_number()) throw Error(ErrorKind::kSchema, where + ": expected a number");
      field = value.get<double>();
    };
    if (key == "layers") count(base.layers);
    else if (key == "heads") count(base.heads);
    else if (key == "head_dim") count(base.head_dim);
    else if (key == "tokens_per_frame") count(base.tokens_per_frame);
    else if (key == "chunk_frames") count(base.chunk_frames);
    else if (key == "window_frames") count(base.window_frames);
    else if (key == "bank_capacity") count(base.bank_capacity);
    else if (key == "sma_k") count(base.sma_k);
    else if (key == "num_topics") count(base.num_topics);
    else if (key == "seed") base.seed = as_u64(value, where);
    else if (key == "noise_eps") real(base.noise_eps);
    else if (key == "prompt_noise") real(base.prompt_noise);
    else throw Error(ErrorKind::kSchema, where + ": unknown field");
  }
  base.validate();
  return base;
}

ModelConfig parse_config(const std::filesystem::path& path, ModelConfig base) {
  return parse_config_text(read_file(path), base);
}

GridSpec parse_grid_text(std::string_view json_text) {
  const json doc = parse_json(json_text);
  if (!doc.is_object()) throw Error(ErrorKind::kSchema, "grid: top level must be an object");
  GridSpec grid;
  const json& modes = require_field(doc, "modes", "grid");
  if (!modes.is_array()) throw Error(ErrorKind::kSchema, "grid.modes: expected an array");
  for (const json& m : modes) {
    if (!m.is_string()) throw Error(ErrorKind::kSchema, "grid.modes: expected strings");
    grid.modes.push_back(parse_mode(m.get<std::string>()));
  }
  const json& bs = require_field(doc, "b_values", "grid");
  if (!bs.is_array()) throw Error(ErrorKind::kSchema, "grid.b_values: expected an array");
  for (const json& b : bs) grid.b_values.push_back(as_u64(b, "grid.b_values"));
  if (auto it = doc.find("repeat"); it != doc.end()) grid.repeat = as_u64(*it, "grid.repeat");
  return grid;
}

GridSpec parse_grid(const std::filesystem::path& path) { return parse_grid_text(read_file(path)); }

std::optional<double> PrecisionResult::precision() const {
  if (eligible_updates == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(eligible_updates);
}

PrecisionResult retrieval_precision(const RolloutTrace& trace, const NarrativeScript& script,
                                    const ModelConfig& cfg) {
  if (trace.mode != Mode::kNamFull && trace.mode != Mode::kNamSma) {
    throw Error(ErrorKind::kInapplicableMetric,
                std::string("retrieval precision needs a NAM mode, got ") + to_string(trace.mode));
  }
  auto topic_of_frame = [&](std::uint64_t frame_id) {
    return script.topic_of_chunk(frame_id / cfg.chunk_frames);
  };
  PrecisionResult out;
  for (const ChunkResult& r : trace.chunks) {
    if (!r.memory_updated) continue;
    const int active = script.topic_of_chunk(r.chunk_id);
    const bool eligible = std::any_of(r.pre_update_bank_ids.begin(), r.pre_update_bank_ids.end(),
                                      [&](std::uint64_t id) { return topic_of_frame(id) == active; });
    if (!eligible) continue;
    ++out.eligible_updates;
    if (std::any_of(r.retained_bank_ids.begin(), r.retained_bank_ids.end(),
                    [&](std::uint64_t id) { return topic_of_frame(id) == active; })) {
      ++out.hits;
    }
  }
  return out;
}

RolloutMetrics compute_metrics(const RolloutTrace& trace, const NarrativeScript& script,
                               const ModelConfig& cfg) {
  RolloutMetrics m;
  m.chunks = trace.chunks.size();
  m.prompt_switches = trace.prompt_switches;

  if (trace.mode == Mode::kNamFull || trace.mode == Mode::kNamSma) {
    const PrecisionResult p = retrieval_precision(trace, script, cfg);
    m.retrieval_precision = p.precision();
    m.eligible_updates = p.eligible_updates;
  }

  if (trace.mode == Mode::kNamFull) {
    m.sma_vs_full_l2 = 0.0;
  } else if (trace.mode == Mode::kNamSma) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const ChunkResult& r : trace.chunks) {
      if (r.sma_vs_full_l2) {
        sum += *r.sma_vs_full_l2;
        ++n;
      }
    }
    if (n > 0) m.sma_vs_full_l2 = sum / static_cast<double>(n);
  }

  const double queries_per_chunk =
      static_cast<double>(cfg.layers * cfg.heads * cfg.chunk_frames * cfg.tokens_per_frame);
  double keys = 0.0;
  double seconds = 0.0;
  Hasher h;
  h.str(to_string(trace.mode));
  h.u64(cfg.seed);
  for (const ChunkResult& r : trace.chunks) {
    keys += static_cast<double>(r.attended_key_count) / queries_per_chunk;
    seconds += r.wall_time.total();
    h.u64(r.hash());
  }
  if (m.chunks > 0) m.mean_attended_keys = keys / static_cast<double>(m.chunks);
  m.chunks_per_second = seconds > 0.0 ? static_cast<double>(m.chunks) / seconds : 0.0;
  m.determinism_hash = h.digest();
  return m;
}

RunReport run_rollout(const NarrativeScript& script, const ModelConfig& cfg, Mode mode) {
  RunReport r;
  r.mode = mode;
  r.cfg = cfg;
  r.trace = rollout(script, cfg, mode, StepOptions{.measure_fidelity = true});
  r.metrics = compute_metrics(r.trace, script, cfg);
  return r;
}

AblationReport run_ablation_grid(const NarrativeScript& script, const ModelConfig& cfg,
                                 const GridSpec& grid, std::size_t jobs) {
  if (grid.modes.empty()) throw Error(ErrorKind::kInvalidConfig, "ablation grid has no modes");
  if (grid.b_values.empty()) throw Error(ErrorKind::kInvalidConfig, "ablation grid has no b values");
  if (grid.repeat == 0) throw Error(ErrorKind::kInvalidConfig, "ablation repeat must be >= 1");

  struct Cell {
    Mode mode;
    ModelConfig cfg;
  };
  std::vector<Cell> cells;
  for (std::size_t b : grid.b_values) {
    for (Mode mode : grid.modes) {
      ModelConfig c = cfg;
      c.bank_capacity = b;
      c.sma_k = std::min(c.sma_k, b + c.chunk_frames);
      c.validate();
      cells.push_back({mode, c});
    }
  }

  auto run_cell = [&](const Cell& cell) {
    AblationRow row;
    row.mode = cell.mode;
    row.bank_capacity = cell.cfg.bank_capacity;
    for (std::size_t rep = 0; rep < grid.repeat; ++rep) {
      // Fidelity is measured once; timed repeats skip the shadow pass.
      StepOptions opts{.measure_fidelity = rep == 0};
      RolloutTrace trace = rollout(script, cell.cfg, cell.mode, opts);
      RolloutMetrics m = compute_metrics(trace, script, cell.cfg);
      row.chunks_per_second_runs.push_back(m.chunks_per_second);
      if (rep == 0) row.metrics = m;
    }
    row.metrics.chunks_per_second = median(row.chunks_per_second_runs);
    return row;
  };

  AblationReport report;
  report.rows.resize(cells.size());
  jobs = std::max<std::size_t>(jobs, 1);
  if (jobs == 1) {
    // Cells sharing a capacity advance one chunk at a time in lockstep, so
    // host slowdowns hit every mode of the ordering check alike.
    const std::size_t per_b = grid.modes.size();
    for (std::size_t first = 0; first < cells.size(); first += per_b) {
      for (std::size_t i = first; i < first + per_b; ++i) {
        report.rows[i].mode = cells[i].mode;
        report.rows[i].bank_capacity = cells[i].cfg.bank_capacity;
      }
      for (std::size_t rep = 0; rep < grid.repeat; ++rep) {
        std::vector<RolloutRunner> runners;
        for (std::size_t i = first; i < first + per_b; ++i) {
          runners.emplace_back(script, cells[i].cfg, cells[i].mode,
                               StepOptions{.measure_fidelity = rep == 0});
        }
        while (!runners.front().done()) {
          for (RolloutRunner& r : runners) r.step();
        }
        for (std::size_t i = first; i < first + per_b; ++i) {
          AblationRow& row = report.rows[i];
          RolloutMetrics m = compute_metrics(runners[i - first].trace(), script, cells[i].cfg);
          row.chunks_per_second_runs.push_back(m.chunks_per_second);
          if (rep == 0) row.metrics = m;
        }
      }
      for (std::size_t i = first; i < first + per_b; ++i) {
        report.rows[i].metrics.chunks_per_second = median(report.rows[i].chunks_per_second_runs);
      }
    }
  } else {
    for (std::size_t start = 0; start < cells.size(); start += jobs) {
      std::vector<std::future<AblationRow>> pending;
      for (std::size_t i = start; i < std::min(cells.size(), start + jobs); ++i) {
        pending.push_back(std::async(std::launch::async, run_cell, std::cref(cells[i])));
      }
      for (std::size_t i = 0; i < pending.size(); ++i) report.rows[start + i] = pending[i].get();
    }
  }

  for (std::size_t b : grid.b_values) {
    std::optional<double> cps[4];
    for (const AblationRow& row : report.rows) {
      if (row.bank_capacity == b) cps[static_cast<int>(row.mode)] = row.metrics.chunks_per_second;
    }
    if (!(cps[0] && cps[1] && cps[2] && cps[3])) continue;
    const double none = *cps[0], sink = *cps[1], full = *cps[2], sma = *cps[3];
    report.ordering.push_back(OrderingCheck{
        b, none > sma && sma > full && sink > sma, none > sink && sink > sma && sma > full});
  }
  return report;
}

void write_metrics_json(std::ostream& out, const RunReport& report) {
  json j;
  j["mode"] = to_string(report.mode);
  j["config"] = config_json(report.cfg);
  j["metrics"] = metrics_json(report.metrics);
  json chunks = json::array();
  for (const ChunkResult& r : report.trace.chunks) {
    json c{{"chunk_id", r.chunk_id},
           {"segment", r.segment},
           {"attended_key_count", r.attended_key_count},
           {"candidate_ids", r.candidate_ids},
           {"bank_ids", r.bank_ids},
           {"retained_bank_ids", r.retained_bank_ids},
           {"hash", hex64(r.hash())}};
    json sel = json::array();
    for (const ActivationSet& a : r.activation_sets) sel.push_back(a.indices);
    c["activation_sets"] = sel;
    c["sma_vs_full_l2"] = r.sma_vs_full_l2 ? num9(*r.sma_vs_full_l2) : json(nullptr);
    c["wall_time"] = {{"retrieval", num9(r.wall_time.retrieval)},
                      {"update", num9(r.wall_time.update)},
                      {"selection", num9(r.wall_time.selection)},
                      {"attention", num9(r.wall_time.attention)}};
    chunks.push_back(std::move(c));
  }
  j["chunks"] = std::move(chunks);
  out << j.dump(2) << '\n';
}

void write_ablation_csv(std::ostream& out, const AblationReport& report) {
  out << "mode,bank_capacity,retrieval_precision,sma_vs_full_l2,mean_attended_keys,"
         "chunks_per_second,determinism_hash\n";
  auto opt = [](const std::optional<double>& x) { return x ? format_number(*x) : std::string(); };
  for (const AblationRow& r : report.rows) {
    out << to_string(r.mode) << ',' << r.bank_capacity << ',' << opt(r.metrics.retrieval_precision)
        << ',' << opt(r.metrics.sma_vs_full_l2) << ',' << format_number(r.metrics.mean_attended_keys)
        << ',' << format_number(r.metrics.chunks_per_second) << ','
        << hex64(r.metrics.determinism_hash) << '\n';
  }
}

void write_ablation_json(std::ostream& out, const AblationReport& report) {
  json rows = json::array();
  for (const AblationRow& r : report.rows) {
    json row = metrics_json(r.metrics);
    row["mode"] = to_string(r.mode);
    row["bank_capacity"] = r.bank_capacity;
    json runs = json::array();
    for (double x : r.chunks_per_second_runs) runs.push_back(num9(x));
    row["chunks_per_second_runs"] = runs;
    rows.push_back(std::move(row));
  }
  json ordering = json::array();
  for (const OrderingCheck& o : report.ordering) {
    ordering.push_back({{"bank_capacity", o.bank_capacity},
                        {"memory_free_fastest", o.memory_free_fastest},
                        {"full_order", o.full_order}});
  }
  out << json{{"rows", rows}, {"throughput_ordering", ordering}}.dump(2) << '\n';
}

void print_summary(std::ostream& out, const AblationReport& report) {
  out << std::left << std::setw(12) << "mode" << std::right << std::setw(4) << "b" << std::setw(12)
      << "precision" << std::setw(12) << "sma_l2" << std::setw(12) << "keys/query" << std::setw(12)
      << "chunks/s" << "  hash\n";
  auto opt = [](const std::optional<double>& x) {
    if (!x) return std::string("-");
    std::ostringstream s;
    s << std::setprecision(4) << *x;
    return s.str();
  };
  for (const AblationRow& r : report.rows) {
    out << std::left << std::setw(12) << to_string(r.mode) << std::right << std::setw(4)
        << r.bank_capacity << std::setw(12) << opt(r.metrics.retrieval_precision) << std::setw(12)
        << opt(r.metrics.sma_vs_full_l2) << std::setw(12) << std::fixed << std::setprecision(1)
        << r.metrics.mean_attended_keys << std::setw(12) << std::setprecision(2)
        << r.metrics.chunks_per_second << std::defaultfloat << "  "
        << hex64(r.metrics.determinism_hash) << '\n';
  }
  for (const OrderingCheck& o : report.ordering) {
    out << "throughput ordering (b=" << o.bank_capacity
        << "): " << (o.memory_free_fastest ? "ok" : "VIOLATED")
        << " (strict four-way: " << (o.full_order ? "yes" : "no") << ")\n";
  }
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, const NarrativeScript& script) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kSeedEnvVar); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 0);
    if (end == env || *end != '\0') {
      throw Error(ErrorKind::kInvalidConfig, std::string(kSeedEnvVar) + " is not an integer: " + env);
    }
    return v;
  }
  return script.seed;
}

}  // namespace chunkmem
