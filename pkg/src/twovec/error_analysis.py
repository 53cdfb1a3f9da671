"""Error identities, biases and covariances of the closed-form estimator.

Notation follows the estimator: ``qbar = [d1 x d2 ; s1 . d2]`` is the raw
estimate, ``qbar_t`` its noise-free value, ``q = qbar_t / |qbar_t|`` the true
attitude and

    dq_bar   = qbar_t - qbar
    dq_check = dq_bar / |qbar_t|
    dq_hat   = q - qbar / |qbar|               (additive error)
    delta_q  = conj(q) (x) qbar / |qbar|       (multiplicative error, Hamilton product)

Measurement noise enters additively, ``b_i = b_i^t + db_i`` and
``r_i = r_i^t + dr_i``.  The twelve noise components are ordered
``(db1, dr1, db2, dr2)`` throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import quat
from .estimator import VectorObservation, estimate_raw, sum_diff
from .exceptions import DegenerateRatio, InvalidNoiseModel, SingularTrueGeometry
from .fourth_order import cov_additive_fourth_order, gaussian_moment4, moment_tensor  # noqa: F401

SYM_TOL = 1e-12
PSD_TOL = 1e-12
RATIO_TOL = 1e-14

_BLOCKS = ("b1", "r1", "b2", "r2")


def _check_cov(P, n: int, name: str) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.shape != (n, n) or not np.all(np.isfinite(P)):
        raise InvalidNoiseModel(f"{name} must be a finite {n}x{n} matrix")
    if np.max(np.abs(P - P.T), initial=0.0) > SYM_TOL:
        raise InvalidNoiseModel(f"{name} is not symmetric")
    if np.linalg.eigvalsh(0.5 * (P + P.T)).min(initial=0.0) < -PSD_TOL:
        raise InvalidNoiseModel(f"{name} is not positive semidefinite")
    return 0.5 * (P + P.T)


@dataclass(frozen=True)
class NoiseModel:
    """Joint Gaussian covariance of ``(db1, dr1, db2, dr2)``.

    Build one with :meth:`from_blocks`, :meth:`isotropic` or :meth:`tangent`
    rather than passing the 12x12 matrix directly.
    """

    cov: np.ndarray

    def __post_init__(self):
        c = _check_cov(self.cov, 12, "joint noise covariance")
        c.setflags(write=False)
        object.__setattr__(self, "cov", c)

    @classmethod
    def from_blocks(cls, P_b1, P_r1, P_b2, P_r2, cross: Optional[dict] = None) -> "NoiseModel":
        """Block-diagonal model with optional cross-covariances.

        Args:
            P_b1: covariance of ``db1``; the other three likewise.
            cross: optional mapping such as ``{("b1", "r1"): C}`` giving
                ``E{db1 dr1^T} = C``.
        """
        cov = np.zeros((12, 12))
        for idx, (name, P) in enumerate(zip(_BLOCKS, (P_b1, P_r1, P_b2, P_r2))):
            cov[3 * idx : 3 * idx + 3, 3 * idx : 3 * idx + 3] = _check_cov(P, 3, f"P_{name}")
        for (a, b), C in (cross or {}).items():
            i, j = _BLOCKS.index(a), _BLOCKS.index(b)
            if i == j:
                raise InvalidNoiseModel("cross-covariance needs two distinct blocks")
            C = np.asarray(C, dtype=float)
            cov[3 * i : 3 * i + 3, 3 * j : 3 * j + 3] = C
            cov[3 * j : 3 * j + 3, 3 * i : 3 * i + 3] = C.T
        return cls(cov)

    @classmethod
    def isotropic(cls, sigma: float) -> "NoiseModel":
        """``sigma^2 I`` on every vector, no correlations."""
        return cls(sigma * sigma * np.eye(12))

    @classmethod
    def tangent(cls, sigma: float, vm1: VectorObservation, vm2: VectorObservation, sigma_r: Optional[float] = None) -> "NoiseModel":
        """Noise confined to the plane orthogonal to each true vector, ``sigma^2 (I - v v^T)``."""
        sr = sigma if sigma_r is None else sigma_r

        def proj(v, s):
            return s * s * (np.eye(3) - np.outer(v, v))

        return cls.from_blocks(proj(vm1.b, sigma), proj(vm1.r, sr), proj(vm2.b, sigma), proj(vm2.r, sr))

    def block(self, name: str) -> np.ndarray:
        i = _BLOCKS.index(name)
        return self.cov[3 * i : 3 * i + 3, 3 * i : 3 * i + 3]

    def factor(self) -> np.ndarray:
        """Symmetric square root ``S`` with ``S S^T = cov`` (eigenvalues clipped at zero)."""
        w, V = np.linalg.eigh(self.cov)
        return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T

    @property
    def is_zero(self) -> bool:
        return not np.any(self.cov)


# (ds1, dd1, dd2) = SUM_DIFF_MAP @ (db1, dr1, db2, dr2)
SUM_DIFF_MAP = 0.5 * np.block(
    [
        [np.eye(3), np.eye(3), np.zeros((3, 6))],
        [np.eye(3), -np.eye(3), np.zeros((3, 6))],
        [np.zeros((3, 6)), np.eye(3), -np.eye(3)],
    ]
)
SUM_DIFF_MAP.setflags(write=False)


def qbar_norm(vm1: VectorObservation, vm2: VectorObservation) -> float:
    return float(np.linalg.norm(estimate_raw(vm1, vm2)))


def sandwich_operator(vm1: VectorObservation, vm2: VectorObservation) -> np.ndarray:
    """The 4x9 matrix ``[[0, E, F], [G, 0, H]]`` acting on ``(ds1, dd1, dd2)``."""
    s1, d1 = sum_diff(vm1)
    _, d2 = sum_diff(vm2)
    op = np.zeros((4, 9))
    op[:3, 3:6] = quat.cross_matrix(d2)
    op[:3, 6:9] = -quat.cross_matrix(d1)
    op[3, 0:3] = -d2
    op[3, 6:9] = -s1
    return op


def delta_qbar_exact(vm1: VectorObservation, vm2: VectorObservation, deltas) -> np.ndarray:
    """Exact raw-estimate error ``qbar_t - qbar`` for the perturbations ``deltas``.

    Args:
        vm1: true first observation.
        vm2: true second observation.
        deltas: ``(..., 12)`` array ``(db1, dr1, db2, dr2)``; any magnitude.

    Returns:
        ``(..., 4)`` array including the bilinear terms.
    """
    x = np.asarray(deltas, dtype=float)
    sdd = x @ SUM_DIFF_MAP.T
    ds1, dd1, dd2 = sdd[..., 0:3], sdd[..., 3:6], sdd[..., 6:9]
    lin = sdd @ sandwich_operator(vm1, vm2).T
    out = lin.copy()
    out[..., :3] -= np.cross(dd1, dd2)
    out[..., 3] -= np.sum(ds1 * dd2, axis=-1)
    return out


def nu_exact(q_true, dq_check, tol: float = RATIO_TOL) -> float:
    """``|qbar_t| / |qbar| = (1 - 2 q^T dq + |dq|^2)^(-1/2)``.

    Raises:
        DegenerateRatio: the perturbed raw estimate is (numerically) zero.
    """
    q = np.asarray(q_true, dtype=float)
    dq = np.asarray(dq_check, dtype=float)
    arg = 1.0 - 2.0 * (q @ dq) + dq @ dq
    if arg <= tol:
        raise DegenerateRatio(f"1 - 2 q.dq + |dq|^2 = {arg:.3g}: the perturbed estimate vanishes")
    return float(arg ** -0.5)


def additive_error_exact(q_true, dq_check, tol: float = RATIO_TOL) -> np.ndarray:
    nu = nu_exact(q_true, dq_check, tol)
    return nu * np.asarray(dq_check, dtype=float) + (1.0 - nu) * np.asarray(q_true, dtype=float)


def m_matrix(q_true) -> np.ndarray:
    """``M`` with ``delta_q = 1_q + M dq_hat``: ``[[ [e x] - q I, e ], [-e^T, -q]]``."""
    q = quat.as_quat(q_true)
    e, s = q[:3], q[3]
    M = np.empty((4, 4))
    M[:3, :3] = quat.cross_matrix(e) - s * np.eye(3)
    M[:3, 3] = e
    M[3, :3] = -e
    M[3, 3] = -s
    return M


def multiplicative_error_exact(q_true, dq_hat) -> np.ndarray:
    """``1_q + M dq_hat``; equals ``hamilton(conj(q), q_hat)`` exactly."""
    return quat.IDENTITY + m_matrix(q_true) @ np.asarray(dq_hat, dtype=float)


def q_matrix(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.eye(4) - 3.0 * np.outer(q, q)


def nu_second_order(q_true, dq_check) -> float:
    q = np.asarray(q_true, dtype=float)
    dq = np.asarray(dq_check, dtype=float)
    return float(1.0 + q @ dq - 0.5 * dq @ q_matrix(q) @ dq)


def additive_error_first_order(q_true, dq_check) -> np.ndarray:
    q = np.asarray(q_true, dtype=float)
    return (np.eye(4) - np.outer(q, q)) @ np.asarray(dq_check, dtype=float)


def additive_error_second_order(q_true, dq_check) -> np.ndarray:
    q = np.asarray(q_true, dtype=float)
    dq = np.asarray(dq_check, dtype=float)
    quad = dq * (dq @ q) + 0.5 * (dq @ q_matrix(q) @ dq) * q
    return additive_error_first_order(q, dq) + quad


def n_matrix(P_qcheck, q) -> np.ndarray:
    P = np.asarray(P_qcheck, dtype=float)
    return P + 0.5 * np.trace(q_matrix(q) @ P) * np.eye(4)


def bias_nu(P_qcheck, q) -> float:
    return float(1.0 - 0.5 * np.trace(q_matrix(q) @ np.asarray(P_qcheck, dtype=float)))


def bias_additive(P_qcheck, q) -> np.ndarray:
    """Second-order mean of ``dq_hat``: ``[P + 1/2 tr(Q P) I] q``."""
    return n_matrix(P_qcheck, q) @ np.asarray(q, dtype=float)


def bias_multiplicative(P_qcheck, q) -> np.ndarray:
    return quat.IDENTITY + m_matrix(q) @ bias_additive(P_qcheck, q)


def cov_delta_qbar(vm1: VectorObservation, vm2: VectorObservation, noise: NoiseModel) -> np.ndarray:
    """First-order covariance of ``dq_bar`` for an arbitrary joint noise model."""
    J = sandwich_operator(vm1, vm2) @ SUM_DIFF_MAP
    P = J @ noise.cov @ J.T
    return 0.5 * (P + P.T)


def cov_delta_qbar_uncorrelated(vm1, vm2, P_b1, P_r1, P_b2, P_r2) -> np.ndarray:
    """Block form of :func:`cov_delta_qbar` when only the four auto-covariances are non-zero.

    Under that assumption ``ds1`` and ``dd1`` are still correlated through
    ``(P_b1 - P_r1) / 4``, which contributes to the vector/scalar block.
    """
    s1, d1 = sum_diff(vm1)
    _, d2 = sum_diff(vm2)
    D1, D2 = quat.cross_matrix(d1), quat.cross_matrix(d2)
    plus1 = np.asarray(P_b1, dtype=float) + np.asarray(P_r1, dtype=float)
    minus1 = np.asarray(P_b1, dtype=float) - np.asarray(P_r1, dtype=float)
    plus2 = np.asarray(P_b2, dtype=float) + np.asarray(P_r2, dtype=float)
    out = np.empty((4, 4))
    out[:3, :3] = D2 @ plus1 @ D2.T + D1 @ plus2 @ D1.T
    out[:3, 3] = D1 @ plus2 @ s1 - D2 @ minus1 @ d2
    out[3, :3] = out[:3, 3]
    out[3, 3] = d2 @ plus1 @ d2 + s1 @ plus2 @ s1
    return 0.25 * out


def cov_delta_qbar_isotropic(vm1, vm2, sigma: float) -> np.ndarray:
    """Compact form for ``sigma^2 I`` on all four vectors."""
    s1, d1 = sum_diff(vm1)
    _, d2 = sum_diff(vm2)
    out = np.empty((4, 4))
    out[:3, :3] = sum(d @ d * np.eye(3) - np.outer(d, d) for d in (d1, d2))
    out[:3, 3] = np.cross(d1, s1)
    out[3, :3] = out[:3, 3]
    out[3, 3] = d2 @ d2 + s1 @ s1
    return 0.5 * sigma * sigma * out


def cov_projection(P_qcheck, q) -> np.ndarray:
    """Leading-order covariance of ``dq_hat``: ``(I - q q^T) P (I - q q^T)``."""
    L = np.eye(4) - np.outer(q, q)
    return L @ np.asarray(P_qcheck, dtype=float) @ L.T


def cov_family(P_qbar, qbar_true_norm: float, q):
    """Scaled, normalized and multiplicative covariances from ``P_qbar``.

    Returns:
        ``(P_qcheck, P_qhat, P_deltaq)`` where ``P_qhat = L P L^T + N q q^T N^T``
        and ``P_deltaq = M P_qhat M^T``.
    """
    if qbar_true_norm <= 0.0:
        raise SingularTrueGeometry("|qbar_t| must be positive")
    q = np.asarray(q, dtype=float)
    P_qcheck = np.asarray(P_qbar, dtype=float) / qbar_true_norm**2
    Nq = bias_additive(P_qcheck, q)
    P_qhat = cov_projection(P_qcheck, q) + np.outer(Nq, Nq)
    M = m_matrix(q)
    return P_qcheck, P_qhat, M @ P_qhat @ M.T


@dataclass(frozen=True)
class ErrorBudget:
    q_true: np.ndarray
    qbar_true: np.ndarray
    qbar_true_norm: float
    P_qbar: np.ndarray
    P_qcheck: np.ndarray
    P_qhat_proj: np.ndarray
    P_qhat_2nd: np.ndarray
    P_qhat_4th: np.ndarray
    P_deltaq: np.ndarray
    P_deltaq_4th: np.ndarray
    bias_qhat: np.ndarray
    bias_deltaq: np.ndarray
    nu_mean: float

    @property
    def radial_bias(self) -> float:
        """Signed component of the additive bias along the true quaternion."""
        return float(self.q_true @ self.bias_qhat)

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            out[k] = np.asarray(v).tolist() if isinstance(v, np.ndarray) else float(v)
        return out


def error_budget(
    vm1: VectorObservation,
    vm2: VectorObservation,
    noise: NoiseModel,
    q_true=None,
    threshold: float = 1e-6,
) -> ErrorBudget:
    """Analytic biases and covariances for one true geometry.

    Args:
        vm1: noise-free first observation.
        vm2: noise-free second observation.
        noise: joint measurement noise.
        q_true: true attitude; defaults to the normalized noise-free raw
            estimate.  Either sign is accepted, and the biases follow it.
        threshold: minimum ``|qbar_t|``.

    Raises:
        SingularTrueGeometry: ``|qbar_t| <= threshold``.
    """
    qbar_t = estimate_raw(vm1, vm2)
    norm = float(np.linalg.norm(qbar_t))
    if norm <= threshold:
        raise SingularTrueGeometry(f"|qbar_t| = {norm:.3g}: analysis is undefined at singular geometries")
    q = qbar_t / norm
    if q_true is not None:
        q_true = quat.check_unit(q_true, tol=1e-9)
        if quat.angle_between(q, q_true) > 1e-6:
            raise ValueError("q_true is inconsistent with the noise-free observations")
        q = q_true
    P_qbar = cov_delta_qbar(vm1, vm2, noise)
    P_qcheck, P_qhat, P_dq = cov_family(P_qbar, norm, q)
    P4 = cov_additive_fourth_order(q, P_qcheck)
    M = m_matrix(q)
    return ErrorBudget(
        q_true=q,
        qbar_true=qbar_t,
        qbar_true_norm=norm,
        P_qbar=P_qbar,
        P_qcheck=P_qcheck,
        P_qhat_proj=cov_projection(P_qcheck, q),
        P_qhat_2nd=P_qhat,
        P_qhat_4th=P4,
        P_deltaq=P_dq,
        P_deltaq_4th=M @ P4 @ M.T,
        bias_qhat=bias_additive(P_qcheck, q),
        bias_deltaq=bias_multiplicative(P_qcheck, q),
        nu_mean=bias_nu(P_qcheck, q),
    )
