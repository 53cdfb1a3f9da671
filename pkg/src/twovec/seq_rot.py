"""Frame detours that move a singular two-vector problem to a regular one.

The reference frame is re-expressed through a half-turn ``a`` about one of
the coordinate axes.  Reference vectors become ``r^C = A(a) r`` (the two
off-axis components flip sign), the estimator runs on ``(b, r^C)``, and the
attitude in the original frame is recovered as ``hamilton(a, q_C)``, since
``A(q) = A(q_C) A(a)``.  That product is a signed permutation of ``q_C``,
stored in :data:`REMAP`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import quat
from .estimator import (
    EstimateResult,
    EstimatorConfig,
    SingularCase,
    VectorObservation,
    apply_hemisphere,
    classify,
    estimate_raw,
)
from .exceptions import EstimationFailed


class AxisTag(enum.Enum):
    X = 0
    Y = 1
    Z = 2

    @property
    def unit(self) -> np.ndarray:
        return np.eye(3)[self.value]


# q = REMAP[axis] @ q_C, scalar-last storage.
REMAP = {
    AxisTag.X: np.array(
        [[0, 0, 0, 1], [0, 0, -1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=float
    ),
    AxisTag.Y: np.array(
        [[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]], dtype=float
    ),
    AxisTag.Z: np.array(
        [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=float
    ),
}
for _m in REMAP.values():
    _m.setflags(write=False)

DEFAULT_ORDER = (AxisTag.X, AxisTag.Y, AxisTag.Z)


@dataclass
class RotationPlan:
    """Candidate axes in the order they are tried, plus the one that was used."""

    candidates: tuple = DEFAULT_ORDER
    chosen: Optional[AxisTag] = None

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("a rotation plan needs at least one candidate axis")
        if self.chosen is not None and self.chosen not in self.candidates:
            raise ValueError(f"{self.chosen} is not among the candidates")


def half_turn(axis: AxisTag) -> np.ndarray:
    return np.append(axis.unit, 0.0)


def flip_off_axis(v: np.ndarray, axis: AxisTag) -> np.ndarray:
    out = -np.asarray(v, dtype=float)
    out[axis.value] = -out[axis.value]
    return out


def rotate_observations(vm1: VectorObservation, vm2: VectorObservation, axis: AxisTag):
    """Express the reference vectors in the detour frame; body vectors are passed through untouched."""
    return (
        VectorObservation(vm1.b, flip_off_axis(vm1.r, axis)),
        VectorObservation(vm2.b, flip_off_axis(vm2.r, axis)),
    )


def unmap_quaternion(q_c, axis: AxisTag) -> np.ndarray:
    """Attitude relative to the original reference frame from one estimated in the detour frame."""
    return REMAP[axis] @ quat.check_unit(q_c, tol=1e-9)


def _parallel(u, v, tol: float) -> bool:
    """``|u x v| <= tol |u||v|`` for 2- or 3-vectors; a zero vector is parallel to anything."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape == (2,):
        cross = abs(u[0] * v[1] - u[1] * v[0])
    else:
        cross = np.linalg.norm(np.cross(u, v))
    return bool(cross <= tol * np.linalg.norm(u) * np.linalg.norm(v))


def _along_axis(v, axis: AxisTag, tol: float) -> bool:
    return _parallel(v, axis.unit, tol)


def _off_axis(v, axis: AxisTag) -> np.ndarray:
    out = np.array(v, dtype=float)
    out[axis.value] = 0.0
    return out


def table_invalid(case: SingularCase, vm1: VectorObservation, vm2: VectorObservation, axis: AxisTag, tol: float = 1e-6) -> bool:
    """A-priori rejection rule for a half-turn detour, evaluated on the unrotated data.

    Args:
        case: singular case of the original problem; must not be ``REGULAR``.
        vm1: first observation.
        vm2: second observation.
        axis: detour axis.
        tol: relative threshold for every parallelism test.

    Returns:
        True when the rule says the detour leaves the problem singular.
    """
    i = axis.value
    j, k = [m for m in range(3) if m != i]
    if case is SingularCase.A_ZERO_ATTITUDE:
        return (
            _along_axis(vm1.b, axis, tol)
            or _along_axis(vm2.b, axis, tol)
            or _parallel(_off_axis(vm1.r, axis), _off_axis(vm2.r, axis), tol)
        )
    if case in (SingularCase.B_AROUND_VM1, SingularCase.C_AROUND_VM2):
        fixed, other = (vm1, vm2) if case is SingularCase.B_AROUND_VM1 else (vm2, vm1)
        s = other.b + other.r
        return _along_axis(fixed.b, axis, tol) and _parallel(
            (s[j], s[k]), (fixed.r[j], fixed.r[k]), tol
        )
    if case is SingularCase.D_PARALLEL_DIFFS:
        d1 = 0.5 * (vm1.b - vm1.r)
        d2 = 0.5 * (vm2.b - vm2.r)
        return _parallel(d1 + _off_axis(vm1.r, axis), d2 + _off_axis(vm2.r, axis), tol)
    raise ValueError("the a-priori rule only covers singular cases")


def detour_is_regular(vm1, vm2, axis: AxisTag, cfg: EstimatorConfig = EstimatorConfig()) -> bool:
    c1, c2 = rotate_observations(vm1, vm2, axis)
    if classify(c1, c2, cfg) is not SingularCase.REGULAR:
        return False
    return bool(np.linalg.norm(estimate_raw(c1, c2)) >= cfg.singularity_threshold)


def validate_axis(case: SingularCase, vm1, vm2, axis: AxisTag, cfg: EstimatorConfig = EstimatorConfig()) -> bool:
    """Accept a detour only if the a-priori rule passes and the rotated problem is regular.

    For ``REGULAR`` (ill-conditioned) inputs only the second check applies.
    """
    if case is not SingularCase.REGULAR and table_invalid(case, vm1, vm2, axis, cfg.singularity_threshold):
        return False
    return detour_is_regular(vm1, vm2, axis, cfg)


def resolve(
    vm1: VectorObservation,
    vm2: VectorObservation,
    cfg: EstimatorConfig = EstimatorConfig(),
    case: Optional[SingularCase] = None,
    plan: Optional[RotationPlan] = None,
) -> EstimateResult:
    """Estimate through the first valid half-turn detour.

    Raises:
        EstimationFailed: no candidate axis validates.
    """
    if case is None:
        case = classify(vm1, vm2, cfg)
    plan = plan or RotationPlan()
    raw_norm = float(np.linalg.norm(estimate_raw(vm1, vm2)))
    for axis in plan.candidates:
        if not validate_axis(case, vm1, vm2, axis, cfg):
            continue
        c1, c2 = rotate_observations(vm1, vm2, axis)
        qbar = estimate_raw(c1, c2)
        q = unmap_quaternion(qbar / np.linalg.norm(qbar), axis)
        plan.chosen = axis
        return EstimateResult(apply_hemisphere(q, cfg), case, raw_norm, axis.name, "sequential_rotation")
    raise EstimationFailed(f"no half-turn detour is valid for case {case.value}")
