"""Independent attitude solvers used to cross-check the closed-form estimator."""

from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation

from ..estimator import VectorObservation
from ..exceptions import CollinearObservations, DegenerateSpectrum

SPECTRAL_GAP = 1e-10


def davenport_matrix(observations, weights=None) -> np.ndarray:
    """The 4x4 matrix ``K`` whose dominant eigenvector solves Wahba's problem."""
    obs = list(observations)
    w = np.ones(len(obs)) if weights is None else np.asarray(weights, dtype=float)
    B = sum(wi * np.outer(o.b, o.r) for wi, o in zip(w, obs))
    z = sum(wi * np.cross(o.b, o.r) for wi, o in zip(w, obs))
    tr = np.trace(B)
    K = np.empty((4, 4))
    K[:3, :3] = B + B.T - tr * np.eye(3)
    K[:3, 3] = z
    K[3, :3] = z
    K[3, 3] = tr
    return K


def davenport_oracle(observations, weights=None) -> np.ndarray:
    """Davenport q-method: dominant eigenvector of ``K``, scalar part made non-negative.

    Raises:
        DegenerateSpectrum: the two largest eigenvalues are within 1e-10.
    """
    obs = list(observations)
    if len(obs) < 2:
        raise CollinearObservations("at least two observations are required")
    vals, vecs = np.linalg.eigh(davenport_matrix(obs, weights))
    if vals[-1] - vals[-2] <= SPECTRAL_GAP:
        raise DegenerateSpectrum(f"eigenvalue gap {vals[-1] - vals[-2]:.3g} is too small")
    q = vecs[:, -1]
    return -q if q[3] < 0 else q


def _triad(v1, v2) -> np.ndarray:
    t1 = v1 / np.linalg.norm(v1)
    c = np.cross(v1, v2)
    n = np.linalg.norm(c)
    if n < 1e-8:
        raise CollinearObservations("TRIAD needs two non-collinear vectors")
    t2 = c / n
    return np.column_stack((t1, t2, np.cross(t1, t2)))


def triad_oracle(vm1: VectorObservation, vm2: VectorObservation) -> np.ndarray:
    """TRIAD attitude; the first observation is matched exactly."""
    A = _triad(vm1.b, vm2.b) @ _triad(vm1.r, vm2.r).T
    x, y, z, w = Rotation.from_matrix(A).as_quat()
    # scipy returns the rotation that maps r to b actively; its conjugate is
    # the attitude quaternion in this package's convention
    q = np.array([-x, -y, -z, w])
    return -q if q[3] < 0 else q
