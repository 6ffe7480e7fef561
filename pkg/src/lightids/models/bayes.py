"""Gaussian naive Bayes."""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .base import TrainedModel, as_matrix_f32

_LOG_2PI = float(np.log(2.0 * np.pi))


class GaussianNBModel(TrainedModel):
    family = "nb"

    def __init__(self, n_classes: int, n_features: int, priors: np.ndarray,
                 means: np.ndarray, variances: np.ndarray):
        super().__init__(n_classes, n_features)
        self.priors = np.ascontiguousarray(priors, dtype=np.float32)
        self.means = np.ascontiguousarray(means, dtype=np.float32)
        self.variances = np.ascontiguousarray(variances, dtype=np.float32)

    @classmethod
    def train(cls, X, y, n_classes: int, var_smoothing: float = 1e-9) -> "GaussianNBModel":
        X32 = as_matrix_f32(np.asarray(X), np.asarray(X).shape[1])
        X64 = X32.astype(np.float64)
        y = np.asarray(y, dtype=np.int64)
        counts = np.bincount(y, minlength=n_classes)
        if (counts == 0).any():
            missing = np.flatnonzero(counts == 0)
            raise DataError(f"classes without training samples: {missing.tolist()}")

        d = X64.shape[1]
        means = np.empty((n_classes, d))
        variances = np.empty((n_classes, d))
        for c in range(n_classes):
            rows = X64[y == c]
            means[c] = rows.mean(axis=0)
            variances[c] = rows.var(axis=0)
        epsilon = var_smoothing * float(X64.var(axis=0).max())
        # floor keeps log-likelihoods finite even on all-constant features
        smoothed = np.maximum(variances + epsilon, 1e-35)
        return cls(n_classes, d, counts / len(y), means, smoothed)

    def log_posteriors(self, features: np.ndarray) -> np.ndarray:
        X = as_matrix_f32(features, self.n_features).astype(np.float64)
        mu = self.means.astype(np.float64)
        var = self.variances.astype(np.float64)
        out = np.empty((len(X), self.n_classes))
        for c in range(self.n_classes):
            quad = ((X - mu[c]) ** 2 / var[c]).sum(axis=1)
            out[:, c] = (
                np.log(float(self.priors[c]))
                - 0.5 * (np.log(var[c]).sum() + self.n_features * _LOG_2PI + quad)
            )
        return out

    def predict(self, features: np.ndarray) -> np.ndarray:
        return np.argmax(self.log_posteriors(features), axis=1).astype(np.int64)

    def payload_arrays(self) -> list[np.ndarray]:
        return [self.priors, self.means, self.variances]
