import json
import math

import numpy as np
import pytest

import fedssta


def test_version():
    assert fedssta.__version__ == "0.1.0"


def test_softmax():
    out = fedssta.softmax([0.0, 0.0])
    assert out.shape == (2,)
    assert out[0] == pytest.approx(0.5, abs=1e-15)
    spread = fedssta.softmax([1.0, 2.0, 3.0], tau=0.5)
    assert spread.sum() == pytest.approx(1.0, abs=1e-12)
    assert spread[2] > spread[1] > spread[0]


def test_cosine():
    assert fedssta.cosine([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0, abs=1e-15)
    assert fedssta.cosine([1.0, 2.0], [2.0, 4.0]) == pytest.approx(1.0, abs=1e-12)
    assert fedssta.cosine([0.0, 0.0], [1.0, 2.0]) == 0.0


def test_gsc_report():
    g = [1.0, 2.0, -0.5]
    ng = [-1.0, -2.0, 0.5]
    rep = fedssta.gsc_report([g, g, ng], theta=0.0, tau=1.0)
    assert rep["matrix"].shape == (3, 3)
    assert rep["valid"] == [True, True, False]
    assert not rep["none_valid"]
    np.testing.assert_allclose(rep["avg"], [1 / 3, 1 / 3, -1 / 3], atol=1e-12)
    np.testing.assert_allclose(rep["delta"], [0.5, 0.5, 0.0], atol=1e-12)


def test_recover_gradient():
    g = fedssta.recover_gradient([1.0, 2.0], [1.5, 1.5], 0.5)
    np.testing.assert_allclose(g, [-1.0, 1.0], atol=1e-15)


def test_generate_sequence():
    seq = fedssta.generate_sequence(seed=3, participant=0, cls=1)
    assert seq.shape == (5, 16, 16)
    assert np.isfinite(seq).all()
    again = fedssta.generate_sequence(seed=3, participant=0, cls=1)
    np.testing.assert_array_equal(seq, again)
    other = fedssta.generate_sequence(seed=4, participant=0, cls=1)
    assert not np.array_equal(seq, other)


def test_metrics_from_counts():
    m = fedssta.metrics_from_counts([[8, 2], [1, 9]])
    assert m["accuracy"] == 0.85
    assert m["precision"] == pytest.approx((8 / 9 + 9 / 11) / 2, abs=1e-15)
    assert m["recall"] == pytest.approx(0.85, abs=1e-12)


def test_hog_descriptor():
    x, y = np.meshgrid(np.linspace(0, 1, 16), np.linspace(0, 1, 16))
    frame = 0.5 * x + 0.3 * y
    desc = fedssta.hog_descriptor(frame)
    assert desc.shape == (36,)  # 2x2 cells, one 4-cell block, 9 bins
    assert np.isfinite(desc).all()
    assert desc.max() > 0.0

    small = fedssta.hog_descriptor(np.random.default_rng(0).random((8, 8)),
                                   cell_size=4, bins=6)
    assert small.shape == (24,)


def test_run_experiment(tmp_path):
    config = {
        "seed": 9,
        "rounds": 2,
        "model": {
            "frame_height": 4, "frame_width": 4, "conv_channels": 2,
            "kernel_size": 3, "attention_dim": 2, "fc_dim": 4, "ssa_stages": 1,
            "sequence_length": 3, "conv1d_channels": 2, "conv1d_kernel": 3,
            "lstm_hidden": 3, "classes": 2,
        },
        "scenario": {
            "participants": 4, "operators": 2, "sequences_per_class": 2,
            "test_trained_participants": 1, "test_untrained_participants": 1,
            "test_sequences_per_class": 1,
        },
        "training": {"local_epochs": 1, "learning_rate": 0.05, "batch_size": 2},
    }
    results = fedssta.run_experiment(json.dumps(config), str(tmp_path))
    assert len(results) == 1
    res = results[0]
    assert res["name"] == ""
    assert res["rounds_completed"] == 2
    assert len(res["round_val_accuracy"]) == 2
    for key in ("val_accuracy", "test_accuracy", "test_trained_accuracy",
                "test_untrained_accuracy"):
        assert 0.0 <= res[key] <= 1.0
    for name in ("rounds.csv", "summary.json", "report.csv", "checkpoint.json"):
        assert (tmp_path / name).is_file()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["config"]["seed"] == 9

    config["strategy"] = {"kind": ["gsc", "fedavg"]}
    sweep = fedssta.run_experiment(json.dumps(config))
    assert [r["name"] for r in sweep] == ["gsc", "fedavg"]


def test_input_validation():
    with pytest.raises(ValueError):
        fedssta.recover_gradient([1.0], [1.0, 2.0], 0.1)
    with pytest.raises(ValueError):
        fedssta.gsc_report([], theta=0.0, tau=1.0)
    with pytest.raises(ValueError):
        fedssta.run_experiment('{"rounds": "many"}')
    with pytest.raises(ValueError):
        fedssta.hog_descriptor(np.zeros((3, 3, 3)))


def test_gsc_matches_numpy_oracle():
    rng = np.random.default_rng(5)
    grads = rng.normal(size=(4, 12))
    rep = fedssta.gsc_report([list(g) for g in grads], theta=0.0, tau=2.0)

    norms = np.linalg.norm(grads, axis=1)
    want = grads @ grads.T / np.outer(norms, norms)
    np.fill_diagonal(want, 1.0)
    np.testing.assert_allclose(rep["matrix"], want, atol=1e-12)
    avg = want.mean(axis=1)
    np.testing.assert_allclose(rep["avg"], avg, atol=1e-12)
    members = avg >= 0.0
    if members.any():
        e = np.exp(avg[members] / 2.0 - (avg[members] / 2.0).max())
        delta = np.zeros(4)
        delta[members] = e / e.sum()
        np.testing.assert_allclose(rep["delta"], delta, atol=1e-12)
