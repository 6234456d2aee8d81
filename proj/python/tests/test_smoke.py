import math

import numpy as np
import pytest

import vge

A3_Q = np.array(
    [
        [0.50379651849235896, 0.29620348150864095, 0.19999999999900006],
        [0.80340696301217984, 0.096593036985820224, 0.10000000000199995],
        [0.79279651849466837, 0.20720348150533169, 0.0],
    ]
)


def random_members(rng, b, m, c):
    return rng.dirichlet(np.ones(c), size=(b, m))


def test_moments_shapes_and_values():
    out = vge.moments(np.array([[[0.6, 0.4], [0.2, 0.8]]]))
    assert out["mean"].shape == (1, 2)
    np.testing.assert_allclose(out["mean"][0], [0.4, 0.6])
    np.testing.assert_allclose(out["stddev"][0], [0.282842712475] * 2, atol=1e-12)


def test_decomposition_identity():
    rng = np.random.default_rng(0)
    members = random_members(rng, 1, 4, 5)[0]
    d = vge.decompose(members)
    mix = members.mean(axis=0)
    kl = np.mean([np.sum(p * np.log(p / mix)) for p in members])
    assert d["tu"] - d["au"] == pytest.approx(kl, abs=1e-10)
    assert d["eu"] >= 0
    assert vge.epjs(members) <= math.log(2) + 1e-9


def test_identical_members_have_zero_epistemic():
    members = np.tile([0.7, 0.2, 0.1], (3, 1))
    assert vge.decompose(members)["eu"] == 0.0
    assert vge.epkl(members) == 0.0
    rows = vge.score(members[None], k=2.0)
    assert rows[0]["eu_gated"] == 0.0
    assert rows[0]["decision"] == 0


def test_vgmu_example():
    rows = vge.score(A3_Q[None], k=None)
    assert rows[0]["vgmu"] == pytest.approx(0.4098623866, abs=1e-6)


def test_vgn_forward_and_backward():
    rng = np.random.default_rng(1)
    probs = random_members(rng, 2, 3, 4)
    fwd = vge.vgn_forward(probs, k=[0.5, 1.0, 1.5, 2.0])
    np.testing.assert_allclose(fwd["gated"].sum(axis=-1), 1.0, atol=1e-12)
    np.testing.assert_allclose(fwd["mixture"], fwd["gated"].mean(axis=1), atol=1e-15)
    up = rng.normal(size=(2, 4))
    g = vge.vgn_backward(probs, up, k=1.0)
    np.testing.assert_array_equal(g["d_input"], g["direct"] + g["via_mean"] + g["via_spread"])
    assert g["d_raw"].shape == (4,)


def test_gradcheck_and_axioms():
    summary = vge.gradcheck(configurations=20, seed=3)
    assert summary["passed"]
    assert vge.run_axioms()["passed"]


def test_metrics():
    assert vge.spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8)
    assert vge.kendall([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(2 / 3)
    assert vge.aucc([3, 2, 1]) == pytest.approx(11 / 18)
    assert vge.ece([0.9, 0.6], [1, 0], bins=10) == pytest.approx(0.35)
    auc, fpr = vge.roc_auc_fpr95([0.1, 0.2, 0.3], [0.25, 0.35, 0.4])
    assert auc == pytest.approx(8 / 9)


def test_errors_are_typed():
    with pytest.raises(vge.VgeError) as info:
        vge.decompose(np.array([[0.7, 0.5], [0.5, 0.5]]))
    assert info.value.code == "MassMismatch"
    with pytest.raises(vge.VgeError):
        vge.spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        vge.score(A3_Q[None], k=[1.0, 2.0])


def test_train_demo():
    out = vge.train_demo(epochs=60)
    assert out["history"][-1]["accuracy"] > 0.9
    assert min(out["k"]) >= 1e-3
