import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

import geometry as g
from twovec import quat
from twovec.api import TwoVectorAttitudeEstimator


def design(rng, n):
    rows, qs = [], []
    for _ in range(n):
        q, vm1, vm2 = g.random_instance(rng)
        rows.append(np.concatenate([vm1.b, vm1.r, vm2.b, vm2.r]))
        qs.append(q)
    return np.array(rows), np.array(qs)


def test_fit_predict(rng):
    X, Q = design(rng, 20)
    est = TwoVectorAttitudeEstimator().fit(X)
    assert est.n_features_in_ == 12
    pred = est.predict(X)
    assert pred.shape == (20, 4)
    assert max(quat.angle_between(p, q) for p, q in zip(pred, Q)) < 1e-9
    assert set(est.predict_cases(X)) == {"regular"}


def test_params_and_clone():
    est = TwoVectorAttitudeEstimator(singularity_threshold=1e-5)
    assert clone(est).get_params()["singularity_threshold"] == 1e-5


def test_not_fitted(rng):
    X, _ = design(rng, 2)
    with pytest.raises(NotFittedError):
        TwoVectorAttitudeEstimator().predict(X)


def test_bad_inputs(rng):
    with pytest.raises(ValueError):
        TwoVectorAttitudeEstimator().fit(np.zeros((3, 11)))
    with pytest.raises(ValueError):
        TwoVectorAttitudeEstimator(singularity_threshold=2.0).fit(np.zeros((1, 12)))


def test_renormalize(rng):
    X, Q = design(rng, 5)
    scaled = X * 3.0
    pred = TwoVectorAttitudeEstimator(renormalize=True).fit(scaled).predict(scaled)
    assert max(quat.angle_between(p, q) for p, q in zip(pred, Q)) < 1e-9
