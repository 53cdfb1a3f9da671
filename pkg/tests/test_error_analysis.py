import numpy as np
import pytest

import geometry as g
from twovec import quat
from twovec.error_analysis import (
    NoiseModel,
    additive_error_exact,
    additive_error_first_order,
    additive_error_second_order,
    bias_additive,
    bias_multiplicative,
    bias_nu,
    cov_delta_qbar,
    cov_delta_qbar_isotropic,
    cov_delta_qbar_uncorrelated,
    cov_family,
    delta_qbar_exact,
    error_budget,
    m_matrix,
    multiplicative_error_exact,
    nu_exact,
    nu_second_order,
)
from twovec.estimator import estimate_raw, VectorObservation
from twovec.exceptions import DegenerateRatio, InvalidNoiseModel, SingularTrueGeometry

X, Y, Z = np.eye(3)
PI_Z = np.array([0.0, 0.0, 1.0, 0.0])


def pi_about_z():
    return g.observe(PI_Z, X, Y)


def perturbed(vm1, vm2, x):
    return (
        VectorObservation(vm1.b + x[0:3], vm1.r + x[3:6]),
        VectorObservation(vm2.b + x[6:9], vm2.r + x[9:12]),
    )


def test_noise_model_validation():
    with pytest.raises(InvalidNoiseModel):
        NoiseModel.from_blocks(np.diag([1, 1, -1.0]), np.eye(3), np.eye(3), np.eye(3))
    bad = np.eye(3)
    bad[0, 1] = 0.1
    with pytest.raises(InvalidNoiseModel):
        NoiseModel.from_blocks(bad, np.eye(3), np.eye(3), np.eye(3))


def test_tangent_noise_is_orthogonal(rng):
    _, vm1, vm2 = g.random_instance(rng)
    nm = NoiseModel.tangent(0.1, vm1, vm2)
    np.testing.assert_allclose(nm.block("b1") @ vm1.b, 0, atol=1e-15)
    np.testing.assert_allclose(nm.block("r2") @ vm2.r, 0, atol=1e-15)


def test_delta_qbar_zero():
    vm1, vm2 = pi_about_z()
    np.testing.assert_array_equal(delta_qbar_exact(vm1, vm2, np.zeros(12)), np.zeros(4))


def test_delta_qbar_matches_definition(rng):
    for _ in range(100):
        _, vm1, vm2 = g.random_instance(rng)
        x = g.random_perturbation(rng, 1.5)
        p1, p2 = perturbed(vm1, vm2, x)
        expected = estimate_raw(vm1, vm2) - estimate_raw(p1, p2)
        np.testing.assert_allclose(delta_qbar_exact(vm1, vm2, x), expected, atol=1e-13)


def test_delta_qbar_linear_part_is_first_order(rng):
    _, vm1, vm2 = g.random_instance(rng)
    x = rng.standard_normal(12)
    # the odd part of the exact error is its linear term
    lin = 0.5 * (delta_qbar_exact(vm1, vm2, x) - delta_qbar_exact(vm1, vm2, -x))
    res = [np.linalg.norm(delta_qbar_exact(vm1, vm2, e * x) - e * lin) for e in (1e-2, 1e-3)]
    assert res[0] / res[1] == pytest.approx(100.0, rel=0.05)


def test_nu_and_additive_trivial(rng):
    q = quat.random_unit_quaternion(rng)
    assert nu_exact(q, np.zeros(4)) == 1.0
    np.testing.assert_array_equal(additive_error_exact(q, np.zeros(4)), np.zeros(4))
    with pytest.raises(DegenerateRatio):
        nu_exact(q, q)
    assert nu_exact(q, 2 * q) == pytest.approx(1.0)
    np.testing.assert_allclose(additive_error_exact(q, 2 * q), 2 * q)


def test_multiplicative_trivial(rng):
    q = quat.random_unit_quaternion(rng)
    np.testing.assert_array_equal(multiplicative_error_exact(q, np.zeros(4)), quat.IDENTITY)
    np.testing.assert_allclose(multiplicative_error_exact(q, 2 * q), -quat.IDENTITY, atol=1e-15)


def test_multiplicative_identity_is_exact(rng):
    for _ in range(200):
        q = quat.random_unit_quaternion(rng)
        q_hat = quat.random_unit_quaternion(rng)
        np.testing.assert_allclose(
            multiplicative_error_exact(q, q - q_hat), quat.hamilton(quat.conjugate(q), q_hat), atol=1e-14
        )
        # the negated-scalar product gives the conjugate with flipped sign
        np.testing.assert_allclose(
            multiplicative_error_exact(q, q - q_hat), -quat.conjugate(quat.compose(quat.inverse(q), q_hat)), atol=1e-14
        )


def test_m_matrix_is_orthogonal(rng):
    M = m_matrix(quat.random_unit_quaternion(rng))
    np.testing.assert_allclose(M @ M.T, np.eye(4), atol=1e-14)


def test_second_order_trivial_and_tangent(rng):
    q = quat.random_unit_quaternion(rng)
    assert nu_second_order(q, np.zeros(4)) == 1.0
    np.testing.assert_array_equal(additive_error_second_order(q, np.zeros(4)), np.zeros(4))
    u = rng.standard_normal(4)
    u -= (u @ q) * q
    u /= np.linalg.norm(u)
    assert nu_second_order(q, 1e-2 * u) == pytest.approx(1 - 0.5e-4, abs=1e-16)
    assert q @ additive_error_first_order(q, rng.standard_normal(4)) == pytest.approx(0.0, abs=1e-15)


def test_second_order_residual_is_cubic(rng):
    q = quat.random_unit_quaternion(rng)
    u = rng.standard_normal(4)
    u /= np.linalg.norm(u)
    res = [abs(nu_exact(q, e * u) - nu_second_order(q, e * u)) for e in (1e-2, 1e-3, 1e-4)]
    for a, b in zip(res, res[1:]):
        assert 500 < a / b < 2000


def test_biases():
    q = np.array([0.1, -0.5, 0.7, 0.5])
    q /= np.linalg.norm(q)
    zero = np.zeros((4, 4))
    assert bias_nu(zero, q) == 1.0
    np.testing.assert_array_equal(bias_additive(zero, q), np.zeros(4))
    np.testing.assert_array_equal(bias_multiplicative(zero, q), quat.IDENTITY)
    s2 = 1e-4
    np.testing.assert_allclose(bias_additive(s2 * np.eye(4), q), 1.5 * s2 * q, atol=1e-18)
    assert bias_nu(s2 * np.eye(4), q) == pytest.approx(1 - 0.5 * s2)
    np.testing.assert_allclose(
        bias_multiplicative(s2 * np.eye(4), q), quat.IDENTITY + m_matrix(q) @ (1.5 * s2 * q), atol=1e-18
    )


def test_bias_matches_monte_carlo(rng):
    q = quat.random_unit_quaternion(rng)
    P = g.random_covariance(rng, scale=1e-4)
    D = rng.multivariate_normal(np.zeros(4), P, size=1_000_000)
    nu = (1.0 - 2.0 * D @ q + np.sum(D * D, axis=1)) ** -0.5
    err = nu[:, None] * D + (1 - nu)[:, None] * q
    se = err.std(axis=0) / np.sqrt(len(err))
    # third-order moments vanish, so the exact mean differs from the
    # second-order bias only at fourth order, far below the standard error
    assert np.all(np.abs(err.mean(axis=0) - bias_additive(P, q)) < 5 * se)


def test_pi_about_z_isotropic_covariance():
    vm1, vm2 = pi_about_z()
    s = 1e-2
    expected = 0.5 * s * s * np.diag([1.0, 1.0, 2.0, 1.0])
    np.testing.assert_allclose(cov_delta_qbar_isotropic(vm1, vm2, s), expected, atol=1e-18)
    np.testing.assert_allclose(cov_delta_qbar(vm1, vm2, NoiseModel.isotropic(s)), expected, atol=1e-18)


def test_covariance_paths_agree(rng):
    for _ in range(20):
        _, vm1, vm2 = g.random_instance(rng)
        s = rng.uniform(1e-3, 1e-1)
        general = cov_delta_qbar(vm1, vm2, NoiseModel.isotropic(s))
        np.testing.assert_allclose(general, cov_delta_qbar_isotropic(vm1, vm2, s), atol=1e-14)
        blocks = [g.random_covariance(rng, n=3, scale=s * s) for _ in range(4)]
        np.testing.assert_allclose(
            cov_delta_qbar(vm1, vm2, NoiseModel.from_blocks(*blocks)),
            cov_delta_qbar_uncorrelated(vm1, vm2, *blocks),
            atol=1e-14,
        )


def test_covariance_matches_linearized_monte_carlo(rng):
    _, vm1, vm2 = g.random_instance(rng)
    blocks = [g.random_covariance(rng, n=3, scale=1e-4) for _ in range(4)]
    nm = NoiseModel.from_blocks(*blocks, cross={("b1", "r1"): 2e-5 * np.eye(3)})
    x = rng.standard_normal((400_000, 12)) @ nm.factor().T
    eps = 1e-3
    lin = delta_qbar_exact(vm1, vm2, eps * x) / eps
    emp = np.cov(lin.T, bias=True)
    c = lin - lin.mean(axis=0)
    se = np.sqrt(np.maximum((c * c).T @ (c * c) / len(c) - emp**2, 0) / len(c))
    assert np.all(np.abs(emp - cov_delta_qbar(vm1, vm2, nm)) < 5 * se + 1e-12)


def test_cov_delta_qbar_zero_noise(rng):
    _, vm1, vm2 = g.random_instance(rng)
    np.testing.assert_array_equal(cov_delta_qbar(vm1, vm2, NoiseModel.isotropic(0.0)), np.zeros((4, 4)))


def test_cov_family_identities(rng):
    q = quat.random_unit_quaternion(rng)
    s2 = 1e-3
    P_check, P_hat, P_dq = cov_family(s2 * np.eye(4), 1.0, q)
    L = np.eye(4) - np.outer(q, q)
    np.testing.assert_allclose(P_hat, s2 * L + 2.25 * s2 * s2 * np.outer(q, q), atol=1e-18)
    P = g.random_covariance(rng, scale=1e-3)
    _, P_hat, P_dq = cov_family(P, 2.0, q)
    N = P / 4 + 0.5 * np.trace((np.eye(4) - 3 * np.outer(q, q)) @ P / 4) * np.eye(4)
    assert q @ P_hat @ q == pytest.approx((q @ N @ q) ** 2, rel=1e-12)
    np.testing.assert_allclose(P_dq, P_dq.T, atol=1e-18)
    assert all(np.all(m == 0) for m in cov_family(np.zeros((4, 4)), 1.0, q))


def test_error_budget(rng):
    q, vm1, vm2 = g.random_instance(rng)
    b = error_budget(vm1, vm2, NoiseModel.isotropic(0.0), -q)
    np.testing.assert_array_equal(b.bias_qhat, np.zeros(4))
    assert b.nu_mean == 1.0
    np.testing.assert_allclose(b.q_true, -q)
    b = error_budget(vm1, vm2, NoiseModel.tangent(1e-2, vm1, vm2))
    np.testing.assert_allclose(b.P_qcheck, b.P_qbar / b.qbar_true_norm**2)
    for name in ("P_qbar", "P_qhat_2nd", "P_qhat_4th", "P_deltaq"):
        M = getattr(b, name)
        np.testing.assert_allclose(M, M.T, atol=1e-18)
    assert set(b.to_dict()) >= {"bias_qhat", "P_qhat_4th", "nu_mean"}


def test_error_budget_pi_about_z_scaled():
    vm1, vm2 = pi_about_z()
    b = error_budget(vm1, vm2, NoiseModel.isotropic(1e-3))
    np.testing.assert_allclose(b.P_qbar, 0.5e-6 * np.diag([1.0, 1.0, 2.0, 1.0]), atol=1e-20)


def test_error_budget_singular(rng):
    _, vm1, vm2 = g.case_a(rng)
    with pytest.raises(SingularTrueGeometry):
        error_budget(vm1, vm2, NoiseModel.isotropic(1e-3))
