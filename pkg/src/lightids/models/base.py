"""Shared contract for trained classifiers.

Models store their deployable parameters as float32 buffers so that the
serialized form (also float32) predicts bit-identically to the in-memory
model. Inputs are cast to float32 once at the boundary; score arithmetic
then runs in float64.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError


def as_matrix_f32(features: np.ndarray, n_features: int) -> np.ndarray:
    """Validate a prediction input and return it as C-contiguous float32."""
    X = np.asarray(features)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise DataError(
            f"feature matrix has width {X.shape[1] if X.ndim == 2 else 'n/a'},"
            f" model expects {n_features}"
        )
    if not np.isfinite(X).all():
        raise DataError("feature matrix contains non-finite values")
    return np.ascontiguousarray(X, dtype=np.float32)


class TrainedModel:
    """Base class: every family provides predict plus payload accounting."""

    family: str = "?"

    def __init__(self, n_classes: int, n_features: int):
        self.n_classes = int(n_classes)
        self.n_features = int(n_features)

    def predict(self, features: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def payload_arrays(self) -> list[np.ndarray]:
        """Buffers required to serve predictions (deployment footprint)."""
        raise NotImplementedError

    def memory_bytes(self) -> int:
        return int(sum(a.nbytes for a in self.payload_arrays()))
