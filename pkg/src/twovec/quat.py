"""Quaternion and small-vector algebra.

Quaternions are stored scalar-last, ``[e1, e2, e3, q]``, as float64 numpy
arrays of shape ``(4,)``.

Rotation convention
-------------------
:func:`attitude_matrix` returns the attitude (direction cosine) matrix

    A(q) = (q^2 - |e|^2) I + 2 e e^T - 2 q [e x]

which maps reference-frame components to body-frame components,
``b = A(q) r``.  This is the convention under which the closed-form
two-vector estimator returns the true attitude.

Composition conventions
-----------------------
Two products are provided.

* :func:`compose` evaluates ``[q1 e2 + q2 e1 + e1 x e2 ; e1.e2 - q1 q2]``
  literally.  Its vector part equals the Hamilton product and its scalar part
  is the negated Hamilton scalar, so ``compose(p, q) = -conj(hamilton(p, q))``
  and ``compose(1_q, 1_q) = -1_q``.  Rotation-wise,
  ``A(compose(p, q)) = A(p)^T A(q)^T``.
* :func:`hamilton` is the standard Hamilton product.  With the attitude
  matrix above, ``A(hamilton(p, q)) = A(q) A(p)``: ``p`` is applied first.
  The multiplicative error ``conj(q) * q_hat`` uses this product.
"""

from __future__ import annotations

import numpy as np

from .exceptions import NonUnitQuaternion, NormUnderflow

UNIT_TOL = 1e-12

IDENTITY = np.array([0.0, 0.0, 0.0, 1.0])
IDENTITY.setflags(write=False)


def as_vec3(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite components")
    return v


def as_quat(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise ValueError(f"expected a 4-vector, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("quaternion has non-finite components")
    return q


def check_unit(q, tol: float = UNIT_TOL) -> np.ndarray:
    q = as_quat(q)
    if abs(q @ q - 1.0) > tol:
        raise NonUnitQuaternion(f"|q|^2 = {q @ q!r} is not 1 within {tol}")
    return q


def cross_matrix(v) -> np.ndarray:
    """Return ``[v x]`` such that ``cross_matrix(v) @ w == np.cross(v, w)``."""
    x, y, z = as_vec3(v)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def compose(q1, q2) -> np.ndarray:
    e1, s1 = q1[:3], q1[3]
    e2, s2 = q2[:3], q2[3]
    return np.concatenate((s1 * e2 + s2 * e1 + np.cross(e1, e2), [e1 @ e2 - s1 * s2]))


def hamilton(p, q) -> np.ndarray:
    """Hamilton product ``p (x) q`` in scalar-last storage."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    ep, sp = p[..., :3], p[..., 3:]
    eq, sq = q[..., :3], q[..., 3:]
    vec = sp * eq + sq * ep + np.cross(ep, eq)
    sca = sp * sq - np.sum(ep * eq, axis=-1, keepdims=True)
    return np.concatenate((vec, sca), axis=-1)


def conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.concatenate((-q[..., :3], q[..., 3:]), axis=-1)


def inverse(q) -> np.ndarray:
    """Inverse of a unit quaternion (its conjugate).

    ``hamilton(inverse(q), q)`` is ``1_q``; under :func:`compose` the same pair
    yields ``-1_q``, the image of the identity in that convention.
    """
    return conjugate(check_unit(q))


def normalize(qb) -> np.ndarray:
    qb = as_quat(qb)
    n = np.linalg.norm(qb)
    if n == 0.0:
        raise NormUnderflow("cannot normalize a zero quaternion")
    return qb / n


def attitude_matrix(q) -> np.ndarray:
    q = as_quat(q)
    e, s = q[:3], q[3]
    return (s * s - e @ e) * np.eye(3) + 2.0 * np.outer(e, e) - 2.0 * s * cross_matrix(e)


def rotate(q, v) -> np.ndarray:
    """Map reference-frame components ``v`` to the body frame: ``A(q) v``."""
    return attitude_matrix(check_unit(q)) @ as_vec3(v)


def angle_between(q1, q2) -> float:
    """Rotation angle separating two attitudes, in ``[0, pi]``.

    Equal to ``2 acos(|q1 . q2|)`` but evaluated as
    ``4 atan2(|q1 - s q2|, |q1 + s q2|)`` with ``s = sign(q1 . q2)``, which keeps
    full relative precision for nearly equal attitudes where ``acos`` cannot
    resolve angles below about 1e-8.
    """
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    s = -1.0 if float(np.dot(q1, q2)) < 0.0 else 1.0
    return 4.0 * float(np.arctan2(np.linalg.norm(q1 - s * q2), np.linalg.norm(q1 + s * q2)))


def axis_angle(axis, angle: float) -> np.ndarray:
    """Quaternion ``[u sin(a/2); cos(a/2)]`` for a unit-normalized ``axis``."""
    u = as_vec3(axis)
    u = u / np.linalg.norm(u)
    return np.concatenate((u * np.sin(angle / 2.0), [np.cos(angle / 2.0)]))


def random_unit_quaternion(rng: np.random.Generator, size=None) -> np.ndarray:
    shape = (4,) if size is None else (size, 4)
    q = rng.standard_normal(shape)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def random_unit_vector(rng: np.random.Generator, size=None) -> np.ndarray:
    shape = (3,) if size is None else (size, 3)
    v = rng.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)
