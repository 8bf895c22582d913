import math

import numpy as np
import pytest

import steinw


def test_version():
    assert steinw.__version__


def test_hermite():
    assert steinw.hermite_eval(3, 2.0) == pytest.approx(2.0)
    assert steinw.hermite_sq_norm([0, 0, 1], 2) == 2.0
    assert steinw.hermite_lp_norm(1, 4.0) == pytest.approx(3 ** 0.25, rel=1e-9)
    assert steinw.tensor_h_norm([1, 0, 0, 1], 2, 2) == pytest.approx(math.sqrt(2))


def test_transport():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    b = np.array([[0.0, 1.0], [1.0, 1.0]])
    assert steinw.wasserstein_exact(a, b, 2.0) == pytest.approx(1.0)
    assert steinw.wasserstein_1d([0.0, 1.0], [1.0, 2.0], 2.0) == pytest.approx(1.0)
    x = np.array([[0.1]])
    y = np.array([[0.9]])
    assert steinw.wasserstein_exact(x, y, 2.0, metric="torus") == pytest.approx(0.2)
    with pytest.raises(ValueError):
        steinw.wasserstein_exact(a, np.zeros((2, 3)))


def test_bound_on_point_mass():
    cfg = steinw.BoundConfig()
    cfg.n_outer = 20
    rep = steinw.gauss_w2_bound(steinw.point_mass_pair(np.zeros(2)), cfg)
    assert rep.total == pytest.approx(math.sqrt(2), rel=2e-3)
    assert len(rep.terms) == cfg.k_max


def test_weights_and_rates():
    assert steinw.curvature_weight_fk(1, 2.0, 0.5, 1) == pytest.approx(math.exp(-1))
    r = steinw.clt_rate_expression("rademacher", 1, 16, 2, 2)
    assert r["value"] == pytest.approx(1.5)
    dist, se = steinw.clt_empirical_wp("rademacher", 1, 4, 2.0, 200, 1)
    assert dist >= 0 and se >= 0


def test_knn_and_lmc():
    out = steinw.knn_experiment(200, 12, seed=1)
    assert out["distance"] >= 0
    assert steinw.stationary_second_moment_bound(1, 0.1, 1, 1) == pytest.approx(0.2 / 0.19)
    assert steinw.contraction_factor(2, 0.1, 1, 1) == pytest.approx(0.905)
    with pytest.raises(ValueError):
        steinw.contraction_factor(2, 3.0, 1, 1)
