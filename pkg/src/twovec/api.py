"""Scikit-learn style wrapper around :func:`twovec.estimate`.

Each row of ``X`` holds one observation pair laid out as
``[b1 (3), r1 (3), b2 (3), r2 (3)]``; ``predict`` returns one unit quaternion
``[x, y, z, w]`` per row.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .estimator import EstimatorConfig, VectorObservation, estimate

N_FEATURES = 12


class TwoVectorAttitudeEstimator(BaseEstimator):
    """Closed-form attitude from two vector observations per sample.

    The estimator has nothing to learn; ``fit`` only validates the input
    shape and the hyperparameters.

    Args:
        singularity_threshold: Floor below which a geometry counts as singular.
        collinearity_threshold: Floor on ``|b1 x b2|`` and ``|r1 x r2|``.
        renormalize: Normalize each input vector before estimating.
    """

    def __init__(self, singularity_threshold=1e-6, collinearity_threshold=1e-8, renormalize=False):
        self.singularity_threshold = singularity_threshold
        self.collinearity_threshold = collinearity_threshold
        self.renormalize = renormalize

    def _config(self) -> EstimatorConfig:
        return EstimatorConfig(
            singularity_threshold=self.singularity_threshold,
            collinearity_threshold=self.collinearity_threshold,
            renormalize=self.renormalize,
        )

    def _check(self, X):
        X = check_array(X, dtype=float)
        if X.shape[1] != N_FEATURES:
            raise ValueError(f"X must have {N_FEATURES} columns (b1, r1, b2, r2), got {X.shape[1]}")
        return X

    def fit(self, X, y=None):
        self._config()
        X = self._check(X)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "n_features_in_")
        X = self._check(X)
        cfg = self._config()
        out = np.empty((X.shape[0], 4))
        for k, row in enumerate(X):
            vm1 = VectorObservation.checked(row[0:3], row[3:6], renormalize=self.renormalize)
            vm2 = VectorObservation.checked(row[6:9], row[9:12], renormalize=self.renormalize)
            out[k] = estimate(vm1, vm2, cfg).quaternion
        return out

    def predict_cases(self, X):
        """Singular-case label (``"regular"``, ``"A"`` to ``"D"``) for each row."""
        check_is_fitted(self, "n_features_in_")
        X = self._check(X)
        cfg = self._config()
        return np.array([
            estimate(
                VectorObservation.checked(row[0:3], row[3:6], renormalize=self.renormalize),
                VectorObservation.checked(row[6:9], row[9:12], renormalize=self.renormalize),
                cfg,
            ).case.value
            for row in X
        ])
