import numpy as np
import pytest

import pntk


def small_net(o=3, seed=0):
    return pntk.init_network(4, [16, 16], o, seed=seed)


def test_quadratic_form_matches_pntk():
    net = small_net(o=3)
    rng = np.random.default_rng(1)
    x1, x2 = rng.normal(size=4), rng.normal(size=4)
    block = pntk.entk_block(net, x1, x2)
    v = np.ones(3) / np.sqrt(3)
    assert pntk.pntk(net, x1, x2) == pytest.approx(v @ block @ v, rel=1e-10)


def test_gram_shapes_and_symmetry():
    net = small_net(o=2)
    x = np.random.default_rng(2).normal(size=(5, 4))
    e = pntk.entk_matrix(net, x, x)
    p = pntk.pntk_matrix(net, x, x)
    assert e.shape == (10, 10)
    assert p.shape == (5, 5)
    np.testing.assert_allclose(e, e.T, atol=0)
    assert 0.0 <= pntk.rel_frobenius_diff(net, x) < 1.0


def test_regression_interpolates_training_points():
    net = small_net(o=3)
    x, y = pntk.synth_clusters(3, 4, 4, 3.0, seed=5)
    out = pntk.predict_pntk(net, x, y, x, relative_jitter=0.0)
    np.testing.assert_allclose(out["predictions"], np.eye(3)[y], atol=1e-6)
    assert list(out["labels"]) == list(y)


def test_single_output_kernels_coincide():
    net = small_net(o=1)
    x = np.random.default_rng(3).normal(size=(4, 4))
    np.testing.assert_allclose(pntk.entk_matrix(net, x, x), pntk.pntk_matrix(net, x, x), rtol=1e-12)


def test_resource_estimate():
    r = pntk.resource_estimate(50000, 10, 8)
    assert r["entk_bytes"] == 2 * 10**12
    assert r["pntk_bytes"] == 2 * 10**10


def test_bad_shape_raises():
    net = small_net()
    with pytest.raises(pntk.PntkError):
        pntk.entk_matrix(net, np.zeros((2, 5)), np.zeros((2, 5)))
