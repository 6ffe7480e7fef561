"""Compact versioned binary model format (``.lsm`` files).

Layout, all little-endian:

    magic "LSHD" | version u8 | family u8 | n_classes u32 | n_features u32 |
    family payload

Weights, thresholds, and class distributions are float32; structural arrays
are length-prefixed int32/uint64. The byte length of a serialized model is
the canonical model size reported everywhere in this toolkit.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import (
    BadMagicError,
    ModelFormatError,
    TruncatedPayloadError,
    UnsupportedVersionError,
)
from .base import TrainedModel
from .bayes import GaussianNBModel
from .knn import KnnModel
from .linear import LinearSvmModel, LogisticRegressionModel
from .tree import DecisionTreeModel, RandomForestModel, Tree

MAGIC = b"LSHD"
FORMAT_VERSION = 1
FILE_EXTENSION = ".lsm"

_FAMILY_TAGS = {"dt": 0, "rf": 1, "knn": 2, "lr": 3, "nb": 4, "svm": 5}
_TAG_FAMILIES = {tag: fam for fam, tag in _FAMILY_TAGS.items()}


class _Writer:
    def __init__(self) -> None:
        self.buf = bytearray()

    def u8(self, v: int) -> None:
        self.buf += struct.pack("<B", v)

    def u32(self, v: int) -> None:
        self.buf += struct.pack("<I", v)

    def array(self, arr: np.ndarray, dtype: str) -> None:
        self.buf += np.ascontiguousarray(arr, dtype=np.dtype(dtype).newbyteorder("<")).tobytes()


class _Reader:
    def __init__(self, blob: bytes) -> None:
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise TruncatedPayloadError(
                f"model blob ends at byte {len(self.blob)},"
                f" needed {self.pos + n}"
            )
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return struct.unpack("<B", self.take(1))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def array(self, count: int, dtype: str) -> np.ndarray:
        dt = np.dtype(dtype).newbyteorder("<")
        raw = self.take(count * dt.itemsize)
        return np.frombuffer(raw, dtype=dt).astype(np.dtype(dtype), copy=True)

    def done(self) -> None:
        if self.pos != len(self.blob):
            raise ModelFormatError(
                f"{len(self.blob) - self.pos} trailing bytes after model payload"
            )


def _write_tree(w: _Writer, tree: Tree) -> None:
    w.u32(tree.n_nodes)
    w.array(tree.feature, "int32")
    w.array(tree.threshold, "float32")
    w.array(tree.left, "int32")
    w.array(tree.right, "int32")
    w.u32(len(tree.leaf_counts))
    w.array(tree.leaf_counts, "float32")


def _read_tree(r: _Reader, n_classes: int, n_features: int) -> Tree:
    n_nodes = r.u32()
    if n_nodes == 0:
        raise ModelFormatError("tree with zero nodes")
    feature = r.array(n_nodes, "int32")
    threshold = r.array(n_nodes, "float32")
    left = r.array(n_nodes, "int32")
    right = r.array(n_nodes, "int32")
    n_leaves = r.u32()
    counts = r.array(n_leaves * n_classes, "float32").reshape(n_leaves, n_classes)
    if int((feature < 0).sum()) != n_leaves:
        raise ModelFormatError("leaf count does not match node structure")
    if feature.max(initial=-1) >= n_features:
        raise ModelFormatError("tree references a feature beyond n_features")
    internal = feature >= 0
    kids = np.concatenate([left[internal], right[internal]])
    if internal.any() and (kids.min() < 0 or kids.max() >= n_nodes):
        raise ModelFormatError("tree child index out of range")
    return Tree(feature=feature, threshold=threshold, left=left, right=right,
                leaf_counts=counts)


def serialize(model: TrainedModel) -> bytes:
    """Encode a trained model; the returned length is its canonical size."""
    w = _Writer()
    w.buf += MAGIC
    w.u8(FORMAT_VERSION)
    w.u8(_FAMILY_TAGS[model.family])
    w.u32(model.n_classes)
    w.u32(model.n_features)

    if isinstance(model, DecisionTreeModel):
        _write_tree(w, model.tree)
    elif isinstance(model, RandomForestModel):
        w.u32(len(model.trees))
        w.array(model.bag_seeds, "uint64")
        for tree in model.trees:
            _write_tree(w, tree)
    elif isinstance(model, KnnModel):
        w.u32(model.k)
        w.u32(len(model.points))
        w.array(model.points, "float32")
        w.array(model.labels, "int32")
    elif isinstance(model, (LogisticRegressionModel, LinearSvmModel)):
        w.array(model.weights, "float32")
        w.array(model.biases, "float32")
    elif isinstance(model, GaussianNBModel):
        w.array(model.priors, "float32")
        w.array(model.means, "float32")
        w.array(model.variances, "float32")
    else:
        raise ModelFormatError(f"cannot serialize model of type {type(model).__name__}")
    return bytes(w.buf)


def deserialize(blob: bytes) -> TrainedModel:
    """Decode a model blob; raises a distinct error per failure mode."""
    if blob[:4] != MAGIC:
        raise BadMagicError("not a model blob: bad magic bytes")
    r = _Reader(blob)
    r.pos = 4
    version = r.u8()
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported model format version {version}")
    tag = r.u8()
    if tag not in _TAG_FAMILIES:
        raise ModelFormatError(f"unknown model family tag {tag}")
    family = _TAG_FAMILIES[tag]
    n_classes = r.u32()
    n_features = r.u32()
    if n_classes < 1 or n_features < 1:
        raise ModelFormatError("model header declares empty class or feature space")

    if family == "dt":
        model: TrainedModel = DecisionTreeModel(
            n_classes, n_features, _read_tree(r, n_classes, n_features))
    elif family == "rf":
        n_trees = r.u32()
        seeds = r.array(n_trees, "uint64")
        trees = [_read_tree(r, n_classes, n_features) for _ in range(n_trees)]
        model = RandomForestModel(n_classes, n_features, trees, seeds)
    elif family == "knn":
        k = r.u32()
        n_rows = r.u32()
        points = r.array(n_rows * n_features, "float32").reshape(n_rows, n_features)
        labels = r.array(n_rows, "int32")
        if k < 1 or k > max(n_rows, 1):
            raise ModelFormatError(f"k={k} invalid for {n_rows} stored rows")
        if n_rows and labels.max() >= n_classes:
            raise ModelFormatError("stored label out of class range")
        model = KnnModel(n_classes, n_features, k, points, labels)
    elif family in ("lr", "svm"):
        W = r.array(n_classes * n_features, "float32").reshape(n_classes, n_features)
        b = r.array(n_classes, "float32")
        klass = LogisticRegressionModel if family == "lr" else LinearSvmModel
        model = klass(n_classes, n_features, W, b)
    else:  # nb
        priors = r.array(n_classes, "float32")
        means = r.array(n_classes * n_features, "float32").reshape(n_classes, n_features)
        variances = r.array(n_classes * n_features, "float32").reshape(n_classes, n_features)
        model = GaussianNBModel(n_classes, n_features, priors, means, variances)

    r.done()
    return model


def read_header(blob: bytes) -> dict:
    """Decode just the header (family, version, shape) for inspection."""
    if blob[:4] != MAGIC:
        raise BadMagicError("not a model blob: bad magic bytes")
    r = _Reader(blob)
    r.pos = 4
    version = r.u8()
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported model format version {version}")
    tag = r.u8()
    if tag not in _TAG_FAMILIES:
        raise ModelFormatError(f"unknown model family tag {tag}")
    return {
        "family": _TAG_FAMILIES[tag],
        "version": version,
        "n_classes": r.u32(),
        "n_features": r.u32(),
    }
