"""Gaussian fourth moments and the fourth-order covariance of the additive error.

For a zero-mean Gaussian ``x ~ N(0, P)`` every fourth moment follows from
Isserlis' theorem,

    E{x_i x_j x_k x_m} = P_ij P_km + P_ik P_jm + P_im P_jk,

and every odd moment vanishes because an odd index set has no pairing.  The
second-order error model

    dq_hat = (I - q q^T) D + [D D^T + 1/2 (D^T Q D) I] q,   Q = I - 3 q q^T,

is therefore a polynomial of degree two in ``D``, and its covariance is an
exact finite sum of fourth moments.  :func:`cov_additive_fourth_order`
assembles it from the full moment tensor.
"""

from __future__ import annotations

import numpy as np


def gaussian_moment4(P, i: int, j: int, k: int, m: int) -> float:
    """``E{x_i x_j x_k x_m}`` for ``x ~ N(0, P)``.

    The three pairings are summed in sorted order so the result is bitwise
    identical under every permutation of the indices.
    """
    P = np.asarray(P, dtype=float)

    def c(a, b):
        return P[min(a, b), max(a, b)]

    terms = sorted((c(i, j) * c(k, m), c(i, k) * c(j, m), c(i, m) * c(j, k)))
    return float(terms[0] + terms[1] + terms[2])


def moment_tensor(P) -> np.ndarray:
    """All fourth moments at once, ``K[i, j, k, m] = E{x_i x_j x_k x_m}``."""
    P = np.asarray(P, dtype=float)
    return (
        np.einsum("ij,km->ijkm", P, P)
        + np.einsum("ik,jm->ijkm", P, P)
        + np.einsum("im,jk->ijkm", P, P)
    )


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def fourth_order_terms(q, P) -> dict:
    """The six fourth-moment contributions to ``E{z z^T}``, ``z = [D D^T + 1/2 (D^T Q D) I] q``.

    Keys ``"T1"`` to ``"T6"`` hold, with ``D ~ N(0, P)``:

    * ``T1 = E{(D^T q)^2 D D^T}``
    * ``T2 = -3 E{(D^T q)^3 D} q^T``
    * ``T3 = E{(D^T D) D D^T} q q^T``
    * ``T4 = 1/4 E{(D^T D)^2} q q^T``
    * ``T5 = -3/2 E{(D^T q)^2 (D^T D)} q q^T``
    * ``T6 = 9/4 E{(D^T q)^4} q q^T``

    ``T2`` and ``T3`` are not symmetric on their own; ``E{z z^T}`` contains
    their symmetric parts.
    """
    q = np.asarray(q, dtype=float)
    K = moment_tensor(P)
    qq = np.outer(q, q)
    t1 = np.einsum("i,j,ijab->ab", q, q, K)
    v = np.einsum("i,j,k,ijka->a", q, q, q, K)
    w = np.einsum("iiab->ab", K)
    trace_sq = np.einsum("iijj->", K)
    qq_tr = np.einsum("i,j,ijkk->", q, q, K)
    q4 = np.einsum("i,j,k,m,ijkm->", q, q, q, q, K)
    return {
        "T1": t1,
        "T2": -3.0 * np.outer(v, q),
        "T3": w @ qq,
        "T4": 0.25 * trace_sq * qq,
        "T5": -1.5 * qq_tr * qq,
        "T6": 2.25 * q4 * qq,
    }


def second_moment_quadratic(q, P) -> np.ndarray:
    """``E{z z^T}`` for the quadratic part ``z`` of the second-order error model."""
    t = fourth_order_terms(q, P)
    return t["T1"] + _sym(t["T2"] + t["T3"]) + t["T4"] + t["T5"] + t["T6"]


def cov_additive_fourth_order(q, P) -> np.ndarray:
    """Exact covariance of the second-order additive error model under ``D ~ N(0, P)``.

    Cross terms between the linear and quadratic parts are third moments and
    vanish, so the result is ``L P L^T + E{z z^T} - E{z} E{z}^T`` with
    ``L = I - q q^T`` and ``E{z} = [P + 1/2 tr(Q P) I] q``.
    """
    q = np.asarray(q, dtype=float)
    P = np.asarray(P, dtype=float)
    L = np.eye(4) - np.outer(q, q)
    Q = np.eye(4) - 3.0 * np.outer(q, q)
    mean_z = (P + 0.5 * np.trace(Q @ P) * np.eye(4)) @ q
    cov = L @ P @ L.T + second_moment_quadratic(q, P) - np.outer(mean_z, mean_z)
    return _sym(cov)
