# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The Diverge Authors

import json
import math
import os
import pathlib

import pytest

import diverge

DATA = pathlib.Path(os.environ.get("DIVERGE_TEST_DATA_DIR", pathlib.Path(__file__).parent.parent / "data"))


def test_memory_penalty_changes_the_pick():
    cands = [[1.0, 0.0], [0.0, 1.0]]
    rel = [1.0, 0.0]
    assert diverge.rerank_indices(cands, rel, [[1.0, 0.0]], alpha=0.7, beta=0.9, k=1) == [1]
    assert diverge.rerank_indices(cands, rel, [], alpha=0.7, beta=0.9, k=1) == [0]


def test_mmr_drops_a_duplicate():
    cands = [[1.0, 0.0], [0.6, 0.8], [1.0, 0.0]]
    assert diverge.mmr_indices(cands, [1.0, 0.6, 1.0], alpha=0.3, k=2) == [0, 1]


def test_bad_parameters_raise():
    with pytest.raises(diverge.ContractError):
        diverge.rerank_indices([[1.0, 0.0]], [1.0], alpha=1.5)
    with pytest.raises(diverge.DivergeError):
        diverge.rerank_indices([], [], k=1)


def test_metrics():
    assert diverge.semantic_diversity([[1, 0], [0, 1], [-1, 0]]) == pytest.approx(2 / 3)
    assert diverge.count_unique([[1, 0], [0.8, 0.6], [0.6, 0.8]], 0.75) == 2
    assert diverge.unified_score(0.25, 0.25) == pytest.approx(0.25)
    assert diverge.minmax_normalize({"a": 5.0, "b": 3.0}) == {"a": 1.0, "b": 0.0}


def test_chunk_windows():
    assert diverge.chunk_windows(1000, 512, 50) == [(0, 512), (462, 974), (924, 1000)]
    assert diverge.chunk_windows(0) == []


def test_url_filter_and_text():
    assert not diverge.filter_url("https://twitter.com/a")
    assert not diverge.filter_url("https://example.org/file.pdf")
    assert diverge.filter_url("https://example.org/page")
    assert diverge.extract_text("<p>a</p><script>x()</script><p>b</p>") == "a\nb"


def test_hash_embedder_is_unit_norm_and_deterministic():
    emb = diverge.HashEmbedder(32)
    a, b = emb.embed(["some text here", "some text here"])
    assert len(a) == 32
    assert a == b
    assert math.isclose(sum(x * x for x in a), 1.0, rel_tol=1e-9)
    assert diverge.cosine_similarity(a, b) == pytest.approx(1.0)


def test_cli_sample(tmp_path):
    queries = tmp_path / "q.jsonl"
    queries.write_text("".join(json.dumps({"prompt": f"Question {i}?", "categories": []}) + "\n" for i in range(5)))
    out = tmp_path / "s.jsonl"
    code, _, err = diverge.run_cli(["--quiet", "sample", "--input", str(queries), "-n", "3", "--seed", "1",
                                    "--out", str(out)])
    assert code == 0, err
    assert len(out.read_text().splitlines()) == 3


def test_cli_generate_offline(tmp_path):
    code, _, err = diverge.run_cli(["--quiet", "generate", "--config", str(DATA / "config.json"), "--input",
                                    str(DATA / "queries.txt"), "--out", str(tmp_path)])
    assert code == 0, err
    traces = sorted(tmp_path.glob("*.json"))
    assert len(traces) == 3
    assert len(json.loads(traces[0].read_text())["answers"]) == 2
