"""Smoke tests for the _edgerec extension: encoders, metrics, kernels, and a
tiny end-to-end simulate/train/eval loop."""

import hashlib
import math
import os
import tempfile

import _edgerec as er

TINY = {
    "users": "16",
    "catalog_items": "80",
    "vocab.category": "8",
    "vocab.brand": "12",
    "gru_layers": "1",
    "gru_hidden": "6",
    "attn_hidden": "6",
    "mlp_hidden": "8",
    "page_size": "5",
    "return_count": "10",
    "k_expose": "4",
    "mean_exposures": "10",
    "max_exposures": "20",
    "max_epochs": "2",
    "batch_size": "32",
}


def test_bucketize():
    assert er.bucketize(0, [1, 10, 100]) == [1, 0, 0, 0]
    assert er.bucketize(10, [1, 10, 100]) == [0, 0, 1, 0]
    assert er.bucketize(1e9, [1, 10, 100]) == [0, 0, 0, 1]


def test_action_encoders():
    v = er.encode_exposure_action()
    assert len(v) == 59
    assert sum(1 for x in v if x == 1.0) == 7  # six bucketized blocks + delete one-hot
    v2 = er.encode_exposure_action(delete_reason="not_interested")
    assert v2 != v
    p = er.encode_pageview_action(duration_ms=5000, flags=[1, 1, 0, 0, 0, 0, 0, 0, 0, 0])
    assert len(p) == 28


def test_auc_gauc():
    assert er.auc([1, 0], [0.9, 0.1]) == 1.0
    assert er.auc([1, 0], [0.1, 0.9]) == 0.0
    g = er.gauc([([1, 0], [0.9, 0.1]), ([1, 0, 0], [0.5, 0.5, 0.5])])
    assert abs(g - 0.7) < 1e-12


def test_gru_resume_equivalence():
    xs = [[0.1 * i, -0.2 * i, 0.05] for i in range(8)]
    full, _ = er.gru_sequence(xs, hidden=5, layers=2, seed=9)
    head, state = er.gru_sequence(xs[:3], hidden=5, layers=2, seed=9)
    tail, _ = er.gru_sequence(xs[3:], hidden=5, layers=2, seed=9, h0=state)
    stitched = head + tail
    for a, b in zip(full, stitched):
        for x, y in zip(a, b):
            assert abs(x - y) < 1e-9


def test_attention_mask():
    q = [0.3, -0.5, 0.2]
    keys = [[0.1, 0.2, 0.3], [0.5, -0.1, 0.0], [0.2, 0.2, 0.2]]
    values = [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]
    w, ctx = er.additive_attention(q, keys, values, [1, 1, 1], att=4, seed=3)
    assert abs(sum(w) - 1.0) < 1e-9
    w0, ctx0 = er.additive_attention(q, keys, values, [0, 0, 0], att=4, seed=3)
    assert w0 == [0.0, 0.0, 0.0]
    assert ctx0 == [0.0, 0.0]


def test_end_to_end_tiny():
    with tempfile.TemporaryDirectory() as tmp:
        log = os.path.join(tmp, "session.jsonl")
        rep = er.simulate(log, users=16, seed=3, overrides=TINY)
        assert rep["pv"] > 0
        assert rep["arm"] == "baseline"
        assert rep["click"] <= rep["pv"]

        # determinism: identical bytes for an identical seed
        log2 = os.path.join(tmp, "session2.jsonl")
        er.simulate(log2, users=16, seed=3, overrides=TINY)
        h1 = hashlib.sha256(open(log, "rb").read()).hexdigest()
        h2 = hashlib.sha256(open(log2, "rb").read()).hexdigest()
        assert h1 == h2

        out = er.train(log, os.path.join(tmp, "model"), variant="DNN-rank", seed=1,
                       overrides=TINY)
        assert os.path.exists(out["bundle"])
        assert os.path.exists(out["device"])
        assert os.path.exists(out["embeddings"])
        assert out["epochs"] >= 1

        model_log = os.path.join(tmp, "model_arm.jsonl")
        rep2 = er.simulate(model_log, users=16, seed=3, model_path=out["bundle"],
                           overrides=TINY)
        assert rep2["arm"] == "model"
        assert rep2["gauc"] is None or 0.0 <= rep2["gauc"] <= 1.0

        rep3 = er.eval_log(model_log, overrides=TINY)
        assert rep3["pv"] == rep2["pv"]


def test_variant_names():
    names = er.variant_names()
    assert "DNN-rank" in names and "CRBAN+HUBSM(IE&IPV)" in names
    assert len(names) == 6
