"""One-vs-rest linear classifiers trained with mini-batch gradient descent.

Logistic regression minimizes L2-regularized log loss; the linear SVM takes
sub-gradient steps on L2-regularized hinge loss. Both share the same
constant-rate schedule, and all one-vs-rest scorers for a model are updated
jointly on the same shuffled batches (the per-class updates are independent,
so this equals training each scorer separately on that batch stream).
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .base import TrainedModel, as_matrix_f32


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_grad(w: np.ndarray, b: float, X: np.ndarray, targets: np.ndarray,
                       l2: float) -> tuple[float, np.ndarray, float]:
    """L2-regularized mean log loss and its analytic gradient.

    ``targets`` is 0/1. The bias is not regularized.
    """
    m = len(X)
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - targets * z) + 0.5 * l2 * (w @ w))
    resid = _sigmoid(z) - targets
    grad_w = X.T @ resid / m + l2 * w
    grad_b = float(np.mean(resid))
    return loss, grad_w, grad_b


def hinge_loss_grad(w: np.ndarray, b: float, X: np.ndarray, targets: np.ndarray,
                    l2: float) -> tuple[float, np.ndarray, float]:
    """L2-regularized mean hinge loss and a sub-gradient (targets are +/-1)."""
    m = len(X)
    z = X @ w + b
    margin = 1.0 - targets * z
    loss = float(np.mean(np.maximum(margin, 0.0)) + 0.5 * l2 * (w @ w))
    active = (margin > 0).astype(np.float64) * targets
    grad_w = -(X.T @ active) / m + l2 * w
    grad_b = float(-np.mean(active))
    return loss, grad_w, grad_b


def _fit_ovr(X64: np.ndarray, y: np.ndarray, n_classes: int, kind: str,
             learning_rate: float, epochs: int, batch_size: int, l2: float,
             seed: int) -> tuple[np.ndarray, np.ndarray]:
    n, d = X64.shape
    rng = np.random.default_rng(seed)
    W = np.zeros((n_classes, d), dtype=np.float64)
    B = np.zeros(n_classes, dtype=np.float64)
    onehot = np.zeros((n, n_classes), dtype=np.float64)
    onehot[np.arange(n), y] = 1.0
    if kind == "hinge":
        T = 2.0 * onehot - 1.0
    else:
        T = onehot

    for _ in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            rows = perm[start:start + batch_size]
            Xb = X64[rows]
            Tb = T[rows]
            m = len(rows)
            Z = Xb @ W.T + B
            if kind == "logistic":
                R = _sigmoid(Z) - Tb
                grad_w = R.T @ Xb / m + l2 * W
                grad_b = R.mean(axis=0)
            else:
                act = ((1.0 - Tb * Z) > 0) * Tb
                grad_w = -(act.T @ Xb) / m + l2 * W
                grad_b = -act.mean(axis=0)
            W -= learning_rate * grad_w
            B -= learning_rate * grad_b
    return W.astype(np.float32), B.astype(np.float32)


class _LinearModel(TrainedModel):
    kind = "?"

    def __init__(self, n_classes: int, n_features: int,
                 weights: np.ndarray, biases: np.ndarray):
        super().__init__(n_classes, n_features)
        self.weights = np.ascontiguousarray(weights, dtype=np.float32)
        self.biases = np.ascontiguousarray(biases, dtype=np.float32)

    @classmethod
    def train(cls, X, y, n_classes: int, seed: int, learning_rate: float = 0.1,
              epochs: int = 50, batch_size: int = 256, l2: float = 1e-4):
        X32 = as_matrix_f32(np.asarray(X), np.asarray(X).shape[1])
        if learning_rate <= 0:
            raise DataError("learning_rate must be positive")
        W, B = _fit_ovr(X32.astype(np.float64), np.asarray(y, dtype=np.int64),
                        n_classes, cls.kind, learning_rate, epochs, batch_size,
                        l2, seed)
        return cls(n_classes, X32.shape[1], W, B)

    def scores(self, features: np.ndarray) -> np.ndarray:
        X = as_matrix_f32(features, self.n_features).astype(np.float64)
        return X @ self.weights.astype(np.float64).T + self.biases.astype(np.float64)

    def predict(self, features: np.ndarray) -> np.ndarray:
        return np.argmax(self.scores(features), axis=1).astype(np.int64)

    def payload_arrays(self) -> list[np.ndarray]:
        return [self.weights, self.biases]


class LogisticRegressionModel(_LinearModel):
    family = "lr"
    kind = "logistic"


class LinearSvmModel(_LinearModel):
    family = "svm"
    kind = "hinge"
