"""K-nearest-neighbors classifier (brute-force Euclidean).

Ties are deterministic: equally distant training rows are taken in
ascending row order, and tied votes go to the lower class index.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .base import TrainedModel, as_matrix_f32

_BATCH_BUDGET = 32_000_000  # bytes of distance buffer per query batch


class KnnModel(TrainedModel):
    family = "knn"

    def __init__(self, n_classes: int, n_features: int, k: int,
                 points: np.ndarray, labels: np.ndarray):
        super().__init__(n_classes, n_features)
        self.k = int(k)
        self.points = np.ascontiguousarray(points, dtype=np.float32)
        self.labels = np.ascontiguousarray(labels, dtype=np.int32)

    @classmethod
    def train(cls, X, y, n_classes: int, k: int = 5) -> "KnnModel":
        X32 = as_matrix_f32(np.asarray(X), np.asarray(X).shape[1])
        if k > len(X32):
            raise DataError(f"k={k} exceeds training size {len(X32)}")
        return cls(n_classes, X32.shape[1], k, X32, np.asarray(y, dtype=np.int32))

    def predict(self, features: np.ndarray) -> np.ndarray:
        Q = as_matrix_f32(features, self.n_features).astype(np.float64)
        X = self.points.astype(np.float64)
        sq_x = np.einsum("ij,ij->i", X, X)
        out = np.empty(len(Q), dtype=np.int64)
        batch = max(1, _BATCH_BUDGET // (8 * max(len(X), 1)))
        for start in range(0, len(Q), batch):
            B = Q[start:start + batch]
            D = np.einsum("ij,ij->i", B, B)[:, None] + sq_x[None, :] - 2.0 * (B @ X.T)
            kth = np.partition(D, self.k - 1, axis=1)[:, self.k - 1]
            for i in range(len(B)):
                cand = np.flatnonzero(D[i] <= kth[i])
                top = cand[np.lexsort((cand, D[i, cand]))][: self.k]
                votes = np.bincount(self.labels[top], minlength=self.n_classes)
                out[start + i] = int(np.argmax(votes))
        return out

    def payload_arrays(self) -> list[np.ndarray]:
        return [self.points, self.labels]
