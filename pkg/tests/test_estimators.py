import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from obstacle_control import ObstacleVI, OptimalControl


def test_params_roundtrip():
    est = ObstacleVI(nodes_per_axis=9, b=1.0, mode="robin", h=3.0)
    params = est.get_params()
    assert params["h"] == 3.0 and params["nodes_per_axis"] == 9
    c = clone(est).set_params(h=5.0)
    assert c.h == 5.0 and est.h == 3.0


def test_transform_matches_analytic():
    est = ObstacleVI(nodes_per_axis=33, b=1.0).fit()
    x = est.grid_.x
    U = est.transform(np.vstack([np.full(33, 2.0), np.zeros(33)]))
    assert np.abs(U[0] - (-x**2 + 2 * x + 1)).max() < 1e-8
    assert np.allclose(U[1], 1.0)
    assert est.active_masks_.shape == (2, 33)


def test_transform_validation():
    with pytest.raises(NotFittedError):
        ObstacleVI().transform(np.zeros((1, 65)))
    est = ObstacleVI(nodes_per_axis=9).fit()
    with pytest.raises(ValueError):
        est.transform(np.zeros((1, 8)))
    with pytest.raises(ValueError):
        est.transform(np.full((1, 9), np.nan))


def test_fit_transform_and_score():
    est = ObstacleVI(nodes_per_axis=9, b=1.0)
    U = est.fit_transform(np.zeros((1, 9)))
    assert est.score(np.zeros((1, 9))) == pytest.approx(-0.5)
    assert U.shape == (1, 9)


def test_optimal_control():
    oc = OptimalControl(b=1.0, M=1.0).fit()
    assert oc.converged_
    assert oc.J_ == pytest.approx(0.4427304346, rel=1e-8)
    assert oc.score() == -oc.J_
    assert np.array_equal(oc.predict(), oc.u_op_)
    assert oc.get_params()["M"] == 1.0
    warm = OptimalControl(b=1.0).fit(oc.g_op_[None, :])
    assert warm.n_iter_ <= 1
