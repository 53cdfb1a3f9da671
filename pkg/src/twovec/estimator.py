"""Closed-form two-vector quaternion estimator and its singular cases.

Given two body/reference pairs ``(b1, r1)`` and ``(b2, r2)`` the
unnormalized estimate is

    qbar = [d1 x d2 ; s1 . d2],   s_i = (b_i + r_i) / 2,   d_i = (b_i - r_i) / 2

and ``q_hat = qbar / |qbar|``.  ``qbar`` vanishes or loses a degree of freedom
in four geometries (identity attitude, rotation about either observation,
parallel difference vectors); :func:`classify` detects them and
:func:`estimate` dispatches to a dedicated formula or to the frame-detour
resolver in :mod:`twovec.seq_rot`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import quat
from .exceptions import (
    CollinearObservations,
    DegenerateBasis,
    InvalidObservation,
    UndefinedAxis,
)

OBS_UNIT_TOL = 1e-9


class SingularCase(enum.Enum):
    REGULAR = "regular"
    A_ZERO_ATTITUDE = "A"
    B_AROUND_VM1 = "B"
    C_AROUND_VM2 = "C"
    D_PARALLEL_DIFFS = "D"


@dataclass(frozen=True)
class VectorObservation:
    """A direction seen in the body frame (``b``) and known in the reference frame (``r``)."""

    b: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        for name in ("b", "r"):
            v = np.array(getattr(self, name), dtype=float)
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise InvalidObservation(f"{name} must be a finite 3-vector")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def checked(cls, b, r, renormalize: bool = False, tol: float = OBS_UNIT_TOL):
        obs = cls(b, r)
        if renormalize:
            nb, nr = np.linalg.norm(obs.b), np.linalg.norm(obs.r)
            if nb == 0.0 or nr == 0.0:
                raise InvalidObservation("cannot renormalize a zero vector")
            return cls(obs.b / nb, obs.r / nr)
        for name, v in (("b", obs.b), ("r", obs.r)):
            if abs(np.linalg.norm(v) - 1.0) > tol:
                raise InvalidObservation(f"|{name}| = {np.linalg.norm(v)!r} is not 1 within {tol}")
        return obs


class SumDiffPair(NamedTuple):
    s: np.ndarray
    d: np.ndarray


@dataclass(frozen=True)
class EstimatorConfig:
    """Thresholds and sign convention for :func:`estimate`.

    ``singularity_threshold`` is used both as the absolute floor on ``|d_i|``
    and ``|qbar|`` and as the relative floor on ``|d1 x d2| / (|d1||d2|)``.
    ``align_to`` selects the hemisphere: ``None`` keeps the scalar part
    non-negative, otherwise the sign is chosen so that ``q . align_to >= 0``.
    """

    singularity_threshold: float = 1e-6
    collinearity_threshold: float = 1e-8
    align_to: Optional[np.ndarray] = None
    renormalize: bool = False

    def __post_init__(self):
        for name in ("singularity_threshold", "collinearity_threshold"):
            t = getattr(self, name)
            if not 0.0 < t < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {t!r}")
        if self.align_to is not None:
            object.__setattr__(self, "align_to", quat.check_unit(self.align_to, tol=1e-9))


@dataclass(frozen=True)
class EstimateResult:
    quaternion: np.ndarray
    case: SingularCase
    raw_norm: float
    rotated_frame: Optional[str] = None
    method: str = field(default="closed_form")

    def to_dict(self) -> dict:
        return {
            "quaternion": [float(x) + 0.0 for x in self.quaternion],
            "case": self.case.value,
            "raw_norm": float(self.raw_norm),
            "rotated_frame": self.rotated_frame,
            "method": self.method,
        }


def sum_diff(obs: VectorObservation) -> SumDiffPair:
    return SumDiffPair(0.5 * (obs.b + obs.r), 0.5 * (obs.b - obs.r))


def kernel_basis(obs: VectorObservation, collinearity_threshold: float = 1e-8):
    """Orthonormal bases of the null space of the measurement matrix and of its complement.

    Returns ``(q1, q2, q3, q4)``: ``q1, q2`` span the quaternions consistent
    with this single observation (``q1`` the half-turn, ``q2`` the minimal
    rotation); ``q3, q4`` span the orthogonal complement.
    """
    s, d = sum_diff(obs)
    ns, nd = np.linalg.norm(s), np.linalg.norm(d)
    if ns < collinearity_threshold:
        raise DegenerateBasis(f"|s| = {ns:.3g}: b and r are opposite, kernel basis undefined")
    if nd < collinearity_threshold:
        raise DegenerateBasis(f"|d| = {nd:.3g}: b and r coincide, complement basis undefined")
    sxd = np.cross(s, d)
    q1 = np.append(s, 0.0) / ns
    q2 = np.append(-sxd, ns * ns) / ns
    q3 = np.append(d, 0.0) / nd
    q4 = np.append(sxd, nd * nd) / nd
    return q1, q2, q3, q4


def estimate_raw(vm1: VectorObservation, vm2: VectorObservation) -> np.ndarray:
    """Unnormalized estimate ``[d1 x d2 ; s1 . d2]``."""
    s1, d1 = sum_diff(vm1)
    _, d2 = sum_diff(vm2)
    return np.append(np.cross(d1, d2), s1 @ d2)


def estimate_raw_batch(b1, r1, b2, r2) -> np.ndarray:
    """Row-wise :func:`estimate_raw` for ``(n, 3)`` arrays; returns ``(n, 4)``."""
    s1 = 0.5 * (b1 + r1)
    d1 = 0.5 * (b1 - r1)
    d2 = 0.5 * (b2 - r2)
    out = np.empty(np.broadcast_shapes(d1.shape, d2.shape)[:-1] + (4,))
    out[..., :3] = np.cross(d1, d2)
    out[..., 3] = np.sum(s1 * d2, axis=-1)
    return out


def regular_mask(b1, r1, b2, r2, cfg: EstimatorConfig) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized test for rows that take the plain closed-form path.

    Returns ``(mask, qbar)``; rows where ``mask`` is false need :func:`estimate`.
    """
    tau = cfg.singularity_threshold
    d1 = 0.5 * (b1 - r1)
    d2 = 0.5 * (b2 - r2)
    n1 = np.linalg.norm(d1, axis=-1)
    n2 = np.linalg.norm(d2, axis=-1)
    qbar = estimate_raw_batch(b1, r1, b2, r2)
    nx = np.linalg.norm(qbar[..., :3], axis=-1)
    raw = np.linalg.norm(qbar, axis=-1)
    mask = (n1 >= tau) & (n2 >= tau) & (nx >= tau * n1 * n2) & (raw >= tau)
    return mask, qbar


def classify(vm1: VectorObservation, vm2: VectorObservation, cfg: EstimatorConfig = EstimatorConfig()) -> SingularCase:
    tau = cfg.singularity_threshold
    _, d1 = sum_diff(vm1)
    _, d2 = sum_diff(vm2)
    n1, n2 = np.linalg.norm(d1), np.linalg.norm(d2)
    small1, small2 = n1 < tau, n2 < tau
    if small1 and small2:
        return SingularCase.A_ZERO_ATTITUDE
    if small1:
        return SingularCase.B_AROUND_VM1
    if small2:
        return SingularCase.C_AROUND_VM2
    if np.linalg.norm(np.cross(d1, d2)) < tau * n1 * n2:
        return SingularCase.D_PARALLEL_DIFFS
    return SingularCase.REGULAR


def _unit_cross(u, v, threshold: float, what: str) -> np.ndarray:
    c = np.cross(u, v)
    n = np.linalg.norm(c)
    if n < threshold:
        raise CollinearObservations(f"{what} are collinear (|cross| = {n:.3g})")
    return c / n


def pseudo_measurement(vm1: VectorObservation, vm2: VectorObservation, collinearity_threshold: float = 1e-8) -> VectorObservation:
    """Observation of the normal to the observation plane: ``(b1 x b2, r1 x r2)`` normalized."""
    b3 = _unit_cross(vm1.b, vm2.b, collinearity_threshold, "body vectors")
    r3 = _unit_cross(vm1.r, vm2.r, collinearity_threshold, "reference vectors")
    return VectorObservation(b3, r3)


def estimate_case_a() -> np.ndarray:
    return quat.IDENTITY.copy()


def _rotation_about_invariant(axis_obs: VectorObservation, other: VectorObservation, cfg: EstimatorConfig) -> np.ndarray:
    # axis_obs is left unchanged by the attitude; `other` fixes the angle.
    r_axis = axis_obs.r
    if np.linalg.norm(np.cross(r_axis, other.r)) < cfg.collinearity_threshold:
        raise CollinearObservations("observations are collinear; rotation angle is unobservable")
    if abs(r_axis @ other.r) > cfg.collinearity_threshold:
        other = pseudo_measurement(axis_obs, other, cfg.collinearity_threshold)
    s, d = sum_diff(other)
    # sign of the rotation: the vector part is parallel to d x s
    sign = -1.0 if r_axis @ np.cross(d, s) < 0.0 else 1.0
    return quat.normalize(np.append(sign * np.linalg.norm(d) * r_axis, np.linalg.norm(s)))


def estimate_case_b(vm1: VectorObservation, vm2: VectorObservation, cfg: EstimatorConfig = EstimatorConfig()) -> np.ndarray:
    """Attitude when the first observation is invariant (rotation about ``r1``)."""
    return _rotation_about_invariant(vm1, vm2, cfg)


def estimate_case_c(vm1: VectorObservation, vm2: VectorObservation, cfg: EstimatorConfig = EstimatorConfig()) -> np.ndarray:
    """Attitude when the second observation is invariant (rotation about ``r2``)."""
    return _rotation_about_invariant(vm2, vm1, cfg)


def estimate_case_d(vm1: VectorObservation, vm2: VectorObservation, cfg: EstimatorConfig = EstimatorConfig()) -> np.ndarray:
    """Attitude when ``d1 || d2``: the rotation carrying the observation-plane normal ``r3`` onto ``b3``.

    The rotation axis lies in both observation planes, so it is orthogonal to
    both normals and the eigenaxis is ``b3 x r3`` with angle ``acos(b3 . r3)``.
    """
    pm = pseudo_measurement(vm1, vm2, cfg.collinearity_threshold)
    b3, r3 = pm.b, pm.r
    axis = np.cross(b3, r3)
    sin_a = np.linalg.norm(axis)
    cos_a = float(np.clip(b3 @ r3, -1.0, 1.0))
    if sin_a < cfg.collinearity_threshold:
        if cos_a > 0.0:
            return quat.IDENTITY.copy()
        raise UndefinedAxis("half-turn about an in-plane axis: eigenaxis not recoverable from b3 x r3")
    u = axis / sin_a
    if cos_a < 0.0:
        # Past a quarter turn b3 x r3 shrinks like sin(alpha) and its direction
        # degrades; the axis line is then taken from r3 x d, which is orthogonal
        # to the same two vectors and has length of order one.
        _, d1 = sum_diff(vm1)
        _, d2 = sum_diff(vm2)
        d = d1 if np.linalg.norm(d1) >= np.linalg.norm(d2) else d2
        a = np.cross(r3, d)
        u = a / np.linalg.norm(a)
    # for r3 orthogonal to u: b3 = cos(alpha) r3 - sin(alpha) u x r3
    alpha = np.arctan2(-b3 @ np.cross(u, r3), cos_a)
    return np.append(u * np.sin(alpha / 2.0), np.cos(alpha / 2.0))


def apply_hemisphere(q: np.ndarray, cfg: EstimatorConfig) -> np.ndarray:
    if cfg.align_to is None:
        return -q if q[3] < 0.0 else q
    return -q if q @ cfg.align_to < 0.0 else q


_CASE_FORMULAS = {
    SingularCase.B_AROUND_VM1: estimate_case_b,
    SingularCase.C_AROUND_VM2: estimate_case_c,
    SingularCase.D_PARALLEL_DIFFS: estimate_case_d,
}


def estimate(vm1: VectorObservation, vm2: VectorObservation, cfg: EstimatorConfig = EstimatorConfig()) -> EstimateResult:
    """Estimate the reference-to-body attitude from two observations.

    Singular geometries use their dedicated formula; an ill-conditioned regular
    geometry, or a half-turn in case D, goes through the frame-detour resolver.

    Raises:
        CollinearObservations: the observations do not span a plane.
        EstimationFailed: no frame detour was usable.
    """
    if cfg.renormalize:
        vm1 = VectorObservation.checked(vm1.b, vm1.r, renormalize=True)
        vm2 = VectorObservation.checked(vm2.b, vm2.r, renormalize=True)
    thr = cfg.collinearity_threshold
    if np.linalg.norm(np.cross(vm1.r, vm2.r)) < thr or np.linalg.norm(np.cross(vm1.b, vm2.b)) < thr:
        raise CollinearObservations("observations are collinear; attitude is unobservable")

    case = classify(vm1, vm2, cfg)
    qbar = estimate_raw(vm1, vm2)
    raw_norm = float(np.linalg.norm(qbar))

    if case is SingularCase.A_ZERO_ATTITUDE:
        q = estimate_case_a()
        method = "case_formula"
    elif case is SingularCase.REGULAR and raw_norm >= cfg.singularity_threshold:
        q = qbar / raw_norm
        method = "closed_form"
    elif case is SingularCase.REGULAR:
        return _resolve(vm1, vm2, cfg, case)
    else:
        try:
            q = _CASE_FORMULAS[case](vm1, vm2, cfg)
        except UndefinedAxis:
            return _resolve(vm1, vm2, cfg, case)
        method = "case_formula"
    return EstimateResult(apply_hemisphere(q, cfg), case, raw_norm, None, method)


def _resolve(vm1, vm2, cfg, case) -> EstimateResult:
    from .seq_rot import resolve

    return resolve(vm1, vm2, cfg, case=case)
