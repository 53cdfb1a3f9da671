import itertools

import numpy as np
import pytest

import geometry as g
from twovec import quat
from twovec.fourth_order import (
    cov_additive_fourth_order,
    fourth_order_terms,
    gaussian_moment4,
    moment_tensor,
    second_moment_quadratic,
)


def test_identity_moments():
    I = np.eye(4)
    assert gaussian_moment4(I, 0, 0, 0, 0) == 3.0
    assert gaussian_moment4(I, 0, 0, 1, 1) == 1.0
    assert gaussian_moment4(I, 0, 1, 2, 3) == 0.0


def test_collapsed_forms(rng):
    P = g.random_covariance(rng)
    s = P
    assert gaussian_moment4(P, 0, 0, 0, 0) == pytest.approx(3 * s[0, 0] ** 2)
    assert gaussian_moment4(P, 0, 0, 1, 1) == pytest.approx(s[0, 0] * s[1, 1] + 2 * s[0, 1] ** 2)
    assert gaussian_moment4(P, 0, 0, 0, 1) == pytest.approx(3 * s[0, 0] * s[0, 1])
    assert gaussian_moment4(P, 0, 0, 1, 2) == pytest.approx(s[0, 0] * s[1, 2] + 2 * s[0, 1] * s[0, 2])


def test_permutation_invariance(rng):
    P = g.random_covariance(rng)
    for idx in [(0, 1, 2, 3), (0, 0, 1, 2), (3, 1, 3, 0)]:
        vals = {gaussian_moment4(P, *p) for p in itertools.permutations(idx)}
        assert len(vals) == 1


def test_tensor_matches_scalar(rng):
    P = g.random_covariance(rng)
    K = moment_tensor(P)
    for idx in itertools.product(range(4), repeat=4):
        assert K[idx] == pytest.approx(gaussian_moment4(P, *idx), rel=1e-14)


def test_zero_covariance():
    q = quat.IDENTITY
    np.testing.assert_array_equal(cov_additive_fourth_order(q, np.zeros((4, 4))), np.zeros((4, 4)))


def test_isotropic_term4():
    s2 = 0.01
    t = fourth_order_terms(quat.IDENTITY, s2 * np.eye(4))
    np.testing.assert_allclose(t["T4"], 0.25 * 24 * s2**2 * np.outer(quat.IDENTITY, quat.IDENTITY))


def test_terms_are_symmetric_after_summation(rng):
    q = quat.random_unit_quaternion(rng)
    P = g.random_covariance(rng)
    t = fourth_order_terms(q, P)
    assert np.max(np.abs(t["T2"] - t["T2"].T)) > 1e-6
    C = cov_additive_fourth_order(q, P)
    np.testing.assert_array_equal(C, C.T)


def _gauss_hermite(q, P, f):
    # exact expectation of a polynomial of degree <= 5 with 3 nodes per axis
    x, w = np.polynomial.hermite_e.hermegauss(3)
    w = w / w.sum()
    nodes = np.array(list(itertools.product(x, repeat=4)))
    weights = np.prod(np.array(list(itertools.product(w, repeat=4))), axis=1)
    L = np.linalg.cholesky(P)
    return sum(wk * f(L @ zk) for zk, wk in zip(nodes, weights))


def _model(q):
    Q = np.eye(4) - 3 * np.outer(q, q)
    L = np.eye(4) - np.outer(q, q)

    def dq(D):
        return L @ D + (np.outer(D, D) + 0.5 * (D @ Q @ D) * np.eye(4)) @ q

    return dq


def test_fourth_order_equals_quadrature(rng):
    for _ in range(5):
        q = quat.random_unit_quaternion(rng)
        P = g.random_covariance(rng, scale=0.1)
        f = _model(q)
        mean = _gauss_hermite(q, P, f)
        second = _gauss_hermite(q, P, lambda D: np.outer(f(D), f(D)))
        np.testing.assert_allclose(cov_additive_fourth_order(q, P), second - np.outer(mean, mean), atol=1e-14)


def test_quadratic_second_moment_equals_quadrature(rng):
    q = quat.random_unit_quaternion(rng)
    P = g.random_covariance(rng)
    Q = np.eye(4) - 3 * np.outer(q, q)

    def zz(D):
        z = (np.outer(D, D) + 0.5 * (D @ Q @ D) * np.eye(4)) @ q
        return np.outer(z, z)

    np.testing.assert_allclose(second_moment_quadratic(q, P), _gauss_hermite(q, P, zz), rtol=1e-12, atol=1e-12)
