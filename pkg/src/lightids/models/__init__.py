"""Six lightweight classifier families behind one train/predict contract.

Families: dt (CART decision tree), rf (bagged random forest), knn
(brute-force k-nearest-neighbors), lr (one-vs-rest logistic regression),
nb (Gaussian naive Bayes), svm (one-vs-rest linear SVM). Training is fully
deterministic for a fixed ``ModelSpec``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataset import Dataset
from ..errors import DataError
from .base import TrainedModel
from .bayes import GaussianNBModel
from .io import FILE_EXTENSION, deserialize, read_header, serialize
from .knn import KnnModel
from .linear import LinearSvmModel, LogisticRegressionModel, hinge_loss_grad, logistic_loss_grad
from .tree import DecisionTreeModel, RandomForestModel

FAMILIES = ("dt", "rf", "knn", "lr", "nb", "svm")

DEFAULT_HYPERPARAMETERS: dict[str, dict] = {
    "dt": {"max_depth": 32, "min_samples_split": 2},
    "rf": {"trees": 100, "max_depth": 8, "min_samples_split": 2,
           "feature_bag": "sqrt", "bootstrap": True},
    "knn": {"k": 5},
    "lr": {"learning_rate": 0.1, "epochs": 50, "batch_size": 256, "l2": 1e-4},
    "svm": {"learning_rate": 0.1, "epochs": 50, "batch_size": 256, "l2": 1e-4},
    "nb": {"var_smoothing": 1e-9},
}

_POSITIVE_INTS = {"max_depth", "min_samples_split", "trees", "k", "epochs", "batch_size"}
_POSITIVE_FLOATS = {"learning_rate", "var_smoothing"}
_NONNEG_FLOATS = {"l2"}


def _validate_params(family: str, params: dict) -> dict:
    merged = dict(DEFAULT_HYPERPARAMETERS[family])
    for key, value in params.items():
        if key not in merged:
            raise DataError(f"unknown hyperparameter {key!r} for family {family!r}")
        merged[key] = value
    for key, value in merged.items():
        if key in _POSITIVE_INTS:
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise DataError(f"{family}.{key} must be an integer >= 1, got {value!r}")
        elif key in _POSITIVE_FLOATS:
            if not isinstance(value, (int, float, np.floating)) or value <= 0:
                raise DataError(f"{family}.{key} must be > 0, got {value!r}")
        elif key in _NONNEG_FLOATS:
            if not isinstance(value, (int, float, np.floating)) or value < 0:
                raise DataError(f"{family}.{key} must be >= 0, got {value!r}")
        elif key == "bootstrap":
            if not isinstance(value, bool):
                raise DataError(f"{family}.bootstrap must be a boolean, got {value!r}")
        elif key == "feature_bag":
            ok = value in ("sqrt", "all") or (
                isinstance(value, (int, np.integer)) and not isinstance(value, bool) and value >= 1
            )
            if not ok:
                raise DataError(f"{family}.feature_bag must be 'sqrt', 'all', or an int >= 1")
    return merged


@dataclass(frozen=True)
class ModelSpec:
    """Family tag plus validated hyperparameters and a training seed."""

    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise DataError(f"unknown model family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "params", _validate_params(self.family, self.params))


def train(spec: ModelSpec, data: Dataset) -> TrainedModel:
    """Train one classifier on a Dataset; deterministic per (spec, data)."""
    if data.n_rows == 0:
        raise DataError("cannot train on an empty dataset")
    if len(np.unique(data.labels)) < 2:
        raise DataError("training data contains a single class")
    X, y = data.features, data.labels
    n_classes = len(data.class_names)
    p = spec.params

    if spec.family == "dt":
        return DecisionTreeModel.train(
            X, y, n_classes, max_depth=p["max_depth"],
            min_samples_split=p["min_samples_split"])
    if spec.family == "rf":
        return RandomForestModel.train(
            X, y, n_classes, seed=spec.seed, trees=p["trees"],
            max_depth=p["max_depth"], min_samples_split=p["min_samples_split"],
            feature_bag=p["feature_bag"], bootstrap=p["bootstrap"])
    if spec.family == "knn":
        return KnnModel.train(X, y, n_classes, k=p["k"])
    if spec.family == "lr":
        return LogisticRegressionModel.train(
            X, y, n_classes, seed=spec.seed, learning_rate=p["learning_rate"],
            epochs=p["epochs"], batch_size=p["batch_size"], l2=p["l2"])
    if spec.family == "svm":
        return LinearSvmModel.train(
            X, y, n_classes, seed=spec.seed, learning_rate=p["learning_rate"],
            epochs=p["epochs"], batch_size=p["batch_size"], l2=p["l2"])
    return GaussianNBModel.train(X, y, n_classes, var_smoothing=p["var_smoothing"])


__all__ = [
    "FAMILIES",
    "DEFAULT_HYPERPARAMETERS",
    "FILE_EXTENSION",
    "ModelSpec",
    "TrainedModel",
    "DecisionTreeModel",
    "RandomForestModel",
    "KnnModel",
    "LogisticRegressionModel",
    "LinearSvmModel",
    "GaussianNBModel",
    "train",
    "serialize",
    "deserialize",
    "read_header",
    "hinge_loss_grad",
    "logistic_loss_grad",
]
