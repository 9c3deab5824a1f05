# Copyright 2026 The chunkmem Authors
# SPDX-License-Identifier: Apache-2.0

import json
import pathlib

import numpy as np
import pytest

import chunkmem

DATA = pathlib.Path(__file__).resolve().parents[2] / "data"


def test_numerics_match_numpy():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
    np.testing.assert_allclose(chunkmem.matmul(a, b), a @ b, rtol=1e-12)
    s = chunkmem.softmax_rows(np.array([[0.0, 0.0], [np.log(1.0), np.log(3.0)]]))
    np.testing.assert_allclose(s, [[0.5, 0.5], [0.25, 0.75]])
    np.testing.assert_allclose(chunkmem.mean_pool_rows(np.array([[1.0, 3.0], [5.0, 7.0]])), [3.0, 5.0])

    q, k, v = rng.normal(size=(2, 8)), rng.normal(size=(5, 8)), rng.normal(size=(5, 3))
    logits = q @ k.T / np.sqrt(8)
    w = np.exp(logits - logits.max(axis=1, keepdims=True))
    w /= w.sum(axis=1, keepdims=True)
    np.testing.assert_allclose(chunkmem.sdp_attention(q, k, v), w @ v, rtol=1e-9)


def test_errors_surface_as_exceptions():
    with pytest.raises(chunkmem.ChunkmemError, match="shape"):
        chunkmem.matmul(np.zeros((2, 3)), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        chunkmem.select_top_k([0.1], 0)
    with pytest.raises(chunkmem.ChunkmemError):
        chunkmem.mean_pool_rows(np.zeros((0, 2)))


def test_selection_and_gating():
    assert chunkmem.select_top_k([0.2, 0.9, 0.5], 2) == ([1, 2], [0.9, 0.5])
    assert chunkmem.retrieve_top([0.5, 0.5, 0.1], 1) == [1]

    rng = np.random.default_rng(1)
    keys, values = rng.normal(size=(4, 6, 8)), rng.normal(size=(4, 6, 8))
    q = rng.normal(size=(5, 8))
    out, active = chunkmem.gated_attention(q, keys, values, k=4)
    assert active == [0, 1, 2, 3]
    np.testing.assert_array_equal(out, chunkmem.sdp_attention(q, keys.reshape(24, 8), values.reshape(24, 8)))
    _, one = chunkmem.gated_attention(q, keys, values, k=1)
    assert len(one) == 1


def test_text_relevance_normalizes():
    rng = np.random.default_rng(2)
    scores = chunkmem.text_relevance(rng.normal(size=8), rng.normal(size=(3, 16, 8)))
    assert scores.shape == (3,)
    assert scores.sum() == pytest.approx(1 / 16, abs=1e-12)


def test_run_and_ablate():
    script = chunkmem.parse_script(str(DATA / "scripts" / "six_prompts.json"))
    assert len(script.segments) == 6
    cfg = chunkmem.ModelConfig(bank_capacity=3, sma_k=2)
    report = chunkmem.run(script, "nam_sma", cfg)
    assert report["prompt_switches"] == 6
    assert report["chunks"] == 24
    assert 0.0 <= report["retrieval_precision"] <= 1.0
    assert all(len(s) == 2 for c in report["trace"][3:] for s in c["activation_sets"])
    again = chunkmem.run(script.to_json(), "nam_sma", cfg)
    assert again["determinism_hash"] == report["determinism_hash"]

    rows = chunkmem.ablate(str(DATA / "scripts" / "minimal.json"), ["nam"], [3, 6, 9], repeat=1)
    assert [r["bank_capacity"] for r in rows] == [3, 6, 9]


def test_script_objects_and_validation():
    s = chunkmem.NarrativeScript(4, [chunkmem.Segment("a quiet lake", 0, 2)])
    assert s.total_chunks() == 2
    assert json.loads(s.to_json())["segments"][0]["topic"] == 0
    assert chunkmem.Mode.parse("frame_sink") == chunkmem.Mode.FRAME_SINK
    with pytest.raises(chunkmem.ChunkmemError, match="topic"):
        chunkmem.parse_script_text('{"seed": 1, "segments": [{"prompt_text": "x", "chunks": 1}]}')
    with pytest.raises(chunkmem.ChunkmemError):
        chunkmem.ModelConfig(bank_size=3)
