// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "chunkmem/engine.hpp"
#include "chunkmem/error.hpp"
#include "chunkmem/harness.hpp"
#include "chunkmem/nam.hpp"
#include "chunkmem/numerics.hpp"
#include "chunkmem/sma.hpp"

namespace py = pybind11;
using namespace chunkmem;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Mat to_mat(const Array& a) {
  if (a.ndim() != 2) throw Error(ErrorKind::kShape, "expected a 2-d array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Mat(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array from_mat(const Mat& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array from_vec(std::span<const double> v) {
  Array out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

// (n, P, d) keys and values become n single-layer, single-head frames.
std::vector<FramePtr> frames_from(const Array& keys, const Array& values) {
  if (keys.ndim() != 3 || values.ndim() != 3) throw Error(ErrorKind::kShape, "expected (n, P, d) arrays");
  const auto n = static_cast<std::size_t>(keys.shape(0));
  const auto p = static_cast<std::size_t>(keys.shape(1));
  const auto d = static_cast<std::size_t>(keys.shape(2));
  if (static_cast<std::size_t>(values.shape(0)) != n || static_cast<std::size_t>(values.shape(1)) != p) {
    throw Error(ErrorKind::kShape, "keys and values disagree on frames or tokens");
  }
  const auto dv = static_cast<std::size_t>(values.shape(2));
  std::vector<FramePtr> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double* k = keys.data() + i * p * d;
    const double* v = values.data() + i * p * dv;
    std::vector<HeadKV> kv{{Mat(p, d, std::vector<double>(k, k + p * d)),
                            Mat(p, dv, std::vector<double>(v, v + p * dv))}};
    out.push_back(std::make_shared<const FrameKV>(i, i, std::nullopt, 1, 1, std::move(kv)));
  }
  return out;
}

py::dict metrics_dict(const RolloutMetrics& m) {
  py::dict d;
  d["retrieval_precision"] = m.retrieval_precision ? py::cast(*m.retrieval_precision) : py::none();
  d["eligible_updates"] = m.eligible_updates;
  d["sma_vs_full_l2"] = m.sma_vs_full_l2 ? py::cast(*m.sma_vs_full_l2) : py::none();
  d["mean_attended_keys"] = m.mean_attended_keys;
  d["chunks_per_second"] = m.chunks_per_second;
  d["determinism_hash"] = m.determinism_hash;
  d["prompt_switches"] = m.prompt_switches;
  d["chunks"] = m.chunks;
  return d;
}

NarrativeScript script_from(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) {
    const std::string text = obj.cast<std::string>();
    return text.find('{') != std::string::npos ? parse_script_text(text) : parse_script(text);
  }
  return obj.cast<NarrativeScript>();
}

}  // namespace

PYBIND11_MODULE(_chunkmem, m) {
  m.doc() = "Streaming chunk memory: text-conditioned retrieval and sparse memory activation";

  static py::exception<Error> error(m, "ChunkmemError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.def("matmul", [](const Array& a, const Array& b) { return from_mat(matmul(to_mat(a), to_mat(b))); });
  m.def("softmax_rows", [](const Array& a) { return from_mat(softmax_rows(to_mat(a))); });
  m.def("mean_pool_rows", [](const Array& a) { return from_vec(mean_pool_rows(to_mat(a)).data()); });
  m.def(
      "sdp_attention",
      [](const Array& q, const Array& k, const Array& v, std::optional<double> scale) {
        const Mat qm = to_mat(q);
        return from_mat(sdp_attention(qm, to_mat(k), to_mat(v), scale.value_or(default_scale(qm.cols()))));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("scale") = py::none());

  m.def(
      "select_top_k",
      [](const std::vector<double>& scores, std::size_t k) {
        const ActivationSet a = select_top_k(scores, k);
        return py::make_tuple(a.indices, a.scores);
      },
      py::arg("scores"), py::arg("k"), "Top-k indices (ascending) and their scores; ties favor later frames.");

  m.def(
      "gated_attention",
      [](const Array& q, const Array& keys, const Array& values, std::size_t k, std::optional<double> scale) {
        const Mat qm = to_mat(q);
        const auto frames = frames_from(keys, values);
        const GatedAttention g = gated_attention(qm, frames, k, 0, 0, scale.value_or(default_scale(qm.cols())));
        return py::make_tuple(from_mat(g.output), g.active.indices);
      },
      py::arg("q"), py::arg("keys"), py::arg("values"), py::arg("k"), py::arg("scale") = py::none(),
      "Attention of q over the k frames (of keys/values shaped (n, P, d)) whose mean key best matches q's mean.");

  m.def(
      "text_relevance",
      [](const Array& query, const Array& keys) {
        if (query.ndim() != 1 || keys.ndim() != 3) throw Error(ErrorKind::kShape, "expected (d,) and (n, P, d)");
        TextQuery q{1, 1, {Vec(std::vector<double>(query.data(), query.data() + query.shape(0)))}};
        const auto frames = frames_from(keys, keys);
        MemoryBank bank(std::max<std::size_t>(frames.size(), 1));
        for (const FramePtr& f : frames) bank = bank.append(f);
        return from_vec(text_relevance_scores(q, bank).per_frame);
      },
      py::arg("query"), py::arg("keys"), "Per-frame relevance of one pooled text query; sums to 1/P.");

  m.def("retrieve_top", [](const std::vector<double>& scores, std::size_t r) {
    return retrieve_top(RelevanceScores{scores}, r);
  });

  py::enum_<Mode>(m, "Mode")
      .value("NO_MEMORY", Mode::kNoMemory)
      .value("FRAME_SINK", Mode::kFrameSink)
      .value("NAM", Mode::kNamFull)
      .value("NAM_SMA", Mode::kNamSma)
      .def_static("parse", [](const std::string& s) { return parse_mode(s); });

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init([](const py::kwargs& kw) {
        if (kw.empty()) return ModelConfig{};
        return parse_config_text(py::module_::import("json").attr("dumps")(kw).cast<std::string>());
      }))
      .def_static("from_file", [](const std::string& path) { return parse_config(path); })
      .def_readwrite("layers", &ModelConfig::layers)
      .def_readwrite("heads", &ModelConfig::heads)
      .def_readwrite("head_dim", &ModelConfig::head_dim)
      .def_readwrite("tokens_per_frame", &ModelConfig::tokens_per_frame)
      .def_readwrite("chunk_frames", &ModelConfig::chunk_frames)
      .def_readwrite("window_frames", &ModelConfig::window_frames)
      .def_readwrite("bank_capacity", &ModelConfig::bank_capacity)
      .def_readwrite("sma_k", &ModelConfig::sma_k)
      .def_readwrite("seed", &ModelConfig::seed)
      .def_readwrite("num_topics", &ModelConfig::num_topics)
      .def_readwrite("noise_eps", &ModelConfig::noise_eps)
      .def_readwrite("prompt_noise", &ModelConfig::prompt_noise)
      .def("validate", &ModelConfig::validate);

  py::class_<Segment>(m, "Segment")
      .def(py::init<std::string, int, std::size_t>(), py::arg("prompt_text"), py::arg("topic"), py::arg("chunks"))
      .def_readwrite("prompt_text", &Segment::prompt_text)
      .def_readwrite("topic", &Segment::topic)
      .def_readwrite("chunks", &Segment::chunks);

  py::class_<NarrativeScript>(m, "NarrativeScript")
      .def(py::init([](std::uint64_t seed, std::vector<Segment> segments) {
             return NarrativeScript{seed, std::move(segments)};
           }),
           py::arg("seed"), py::arg("segments"))
      .def_readwrite("seed", &NarrativeScript::seed)
      .def_readwrite("segments", &NarrativeScript::segments)
      .def("total_chunks", &NarrativeScript::total_chunks)
      .def("to_json", [](const NarrativeScript& s) { return script_to_json(s); });

  m.def("parse_script", [](const std::string& path) { return parse_script(path); });
  m.def("parse_script_text", [](const std::string& text) { return parse_script_text(text); });

  m.def(
      "run",
      [](const py::object& script, const std::string& mode, const ModelConfig& cfg) {
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run_rollout(script_from(script), cfg, parse_mode(mode));
        }
        py::dict out = metrics_dict(r.metrics);
        py::list chunks;
        for (const ChunkResult& c : r.trace.chunks) {
          py::dict d;
          d["chunk_id"] = c.chunk_id;
          d["segment"] = c.segment;
          d["bank_ids"] = c.bank_ids;
          d["candidate_ids"] = c.candidate_ids;
          d["attended_key_count"] = c.attended_key_count;
          py::list sel;
          for (const ActivationSet& a : c.activation_sets) sel.append(a.indices);
          d["activation_sets"] = sel;
          chunks.append(d);
        }
        out["trace"] = chunks;
        return out;
      },
      py::arg("script"), py::arg("mode") = "nam_sma", py::arg("config") = ModelConfig{},
      "Roll out a script (a NarrativeScript, a JSON string or a path) and return its metrics and per-chunk trace.");

  m.def(
      "ablate",
      [](const py::object& script, const std::vector<std::string>& modes, const std::vector<std::size_t>& b_values,
         std::size_t repeat, const ModelConfig& cfg) {
        GridSpec grid;
        for (const std::string& s : modes) grid.modes.push_back(parse_mode(s));
        grid.b_values = b_values;
        grid.repeat = repeat;
        AblationReport rep;
        {
          py::gil_scoped_release release;
          rep = run_ablation_grid(script_from(script), cfg, grid);
        }
        py::list rows;
        for (const AblationRow& r : rep.rows) {
          py::dict d = metrics_dict(r.metrics);
          d["mode"] = to_string(r.mode);
          d["bank_capacity"] = r.bank_capacity;
          rows.append(d);
        }
        return rows;
      },
      py::arg("script"), py::arg("modes"), py::arg("b_values"), py::arg("repeat") = 3,
      py::arg("config") = ModelConfig{});
}
