"""Decision tree and random forest classifiers on the exact CART kernel."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from . import _cart
from .base import TrainedModel, as_matrix_f32


@dataclass
class Tree:
    """Grown tree as flat node arrays (feature == -1 marks a leaf)."""

    feature: np.ndarray      # int32, original column id
    threshold: np.ndarray    # float32
    left: np.ndarray         # int32, -1 on leaves
    right: np.ndarray        # int32, -1 on leaves
    leaf_counts: np.ndarray  # (n_leaves, K) float32, leaves in node order
    node_pred: np.ndarray = field(init=False)     # int32 argmax class per node
    impurity: np.ndarray | None = None            # training-only
    node_n: np.ndarray | None = None              # training-only

    def __post_init__(self) -> None:
        leaf_slot = np.cumsum(self.feature < 0) - 1
        pred = np.zeros(len(self.feature), dtype=np.int32)
        is_leaf = self.feature < 0
        if is_leaf.any():
            pred[is_leaf] = np.argmax(self.leaf_counts, axis=1)[leaf_slot[is_leaf]]
        self.node_pred = pred

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict_arrays(self) -> list[np.ndarray]:
        return [self.feature, self.threshold, self.left, self.right,
                self.leaf_counts, self.node_pred]

    def importances(self, n_features: int) -> np.ndarray:
        """Impurity-decrease importance, normalized to sum to 1."""
        if self.impurity is None or self.node_n is None:
            raise DataError("tree was loaded without training statistics")
        imp = np.zeros(n_features, dtype=np.float64)
        internal = np.flatnonzero(self.feature >= 0)
        for node in internal:
            l, r = self.left[node], self.right[node]
            gain = (
                self.node_n[node] * self.impurity[node]
                - self.node_n[l] * self.impurity[l]
                - self.node_n[r] * self.impurity[r]
            )
            imp[self.feature[node]] += gain
        imp /= self.node_n[0]
        total = imp.sum()
        if total > 0:
            imp /= total
        return imp


def _presort(X32: np.ndarray) -> np.ndarray:
    """Stable per-feature row order, shaped (d, n) C-contiguous."""
    return np.ascontiguousarray(np.argsort(X32, axis=0, kind="stable").T.astype(np.int32))


def grow_forest(
    X32: np.ndarray,
    y32: np.ndarray,
    n_classes: int,
    sort_idx: np.ndarray,
    cols: np.ndarray,
    n_trees: int,
    max_depth: int,
    min_samples_split: int,
    bag_size: int,
    bootstrap: bool,
    seed: int,
) -> tuple[list[Tree], np.ndarray]:
    """Grow ``n_trees`` CART trees over the given columns.

    Bootstrap weights and per-tree bag seeds are drawn up front from one
    seeded generator, so results are identical whether trees are grown
    sequentially or on the thread pool.
    """
    n = X32.shape[0]
    master = np.random.default_rng(seed)
    bag_seeds = master.integers(1, 2**63, size=n_trees, dtype=np.uint64)
    if bootstrap:
        weights = [
            np.bincount(master.integers(0, n, size=n), minlength=n).astype(np.int64)
            for _ in range(n_trees)
        ]
    else:
        weights = [np.ones(n, dtype=np.int64)] * n_trees

    def grow(t: int) -> Tree:
        feat, thr, left, right, impurity, node_n, _, counts = _cart.grow_tree(
            X32, y32, n_classes, weights[t], sort_idx, cols,
            max_depth, min_samples_split, bag_size, bag_seeds[t],
        )
        return Tree(
            feature=feat, threshold=thr, left=left, right=right,
            leaf_counts=counts.astype(np.float32),
            impurity=impurity, node_n=node_n,
        )

    workers = min(n_trees, os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(grow, range(n_trees)))
    else:
        trees = [grow(t) for t in range(n_trees)]
    return trees, bag_seeds


def _prepare_training(data_X: np.ndarray, data_y: np.ndarray):
    X32 = np.asfortranarray(np.asarray(data_X), dtype=np.float32)
    if not np.isfinite(X32).all():
        raise DataError("training features contain non-finite values")
    y32 = np.ascontiguousarray(data_y, dtype=np.int32)
    return X32, y32


def resolve_bag_size(feature_bag, d: int) -> int:
    """'all', 'sqrt' (floor), or an explicit per-split feature count."""
    if feature_bag == "all":
        return d
    if feature_bag == "sqrt":
        return max(1, int(np.sqrt(d)))
    size = int(feature_bag)
    if not 1 <= size <= d:
        raise DataError(f"feature bag size {size} out of range [1, {d}]")
    return size


class DecisionTreeModel(TrainedModel):
    family = "dt"

    def __init__(self, n_classes: int, n_features: int, tree: Tree):
        super().__init__(n_classes, n_features)
        self.tree = tree

    @classmethod
    def train(cls, X, y, n_classes: int, max_depth: int = 32,
              min_samples_split: int = 2) -> "DecisionTreeModel":
        X32, y32 = _prepare_training(X, y)
        d = X32.shape[1]
        cols = np.arange(d, dtype=np.int32)
        trees, _ = grow_forest(
            X32, y32, n_classes, _presort(X32), cols,
            n_trees=1, max_depth=max_depth, min_samples_split=min_samples_split,
            bag_size=d, bootstrap=False, seed=0,
        )
        return cls(n_classes, d, trees[0])

    def predict(self, features: np.ndarray) -> np.ndarray:
        X = as_matrix_f32(features, self.n_features)
        out = np.empty(len(X), dtype=np.int32)
        t = self.tree
        _cart.predict_tree(X, t.feature, t.threshold, t.left, t.right, t.node_pred, out)
        return out.astype(np.int64)

    def payload_arrays(self) -> list[np.ndarray]:
        return self.tree.predict_arrays()


class RandomForestModel(TrainedModel):
    family = "rf"

    def __init__(self, n_classes: int, n_features: int,
                 trees: list[Tree], bag_seeds: np.ndarray):
        super().__init__(n_classes, n_features)
        self.trees = trees
        self.bag_seeds = np.asarray(bag_seeds, dtype=np.uint64)

    @classmethod
    def train(cls, X, y, n_classes: int, seed: int, trees: int = 100,
              max_depth: int = 8, min_samples_split: int = 2,
              feature_bag="sqrt", bootstrap: bool = True) -> "RandomForestModel":
        X32, y32 = _prepare_training(X, y)
        d = X32.shape[1]
        cols = np.arange(d, dtype=np.int32)
        bag = resolve_bag_size(feature_bag, d)
        grown, bag_seeds = grow_forest(
            X32, y32, n_classes, _presort(X32), cols,
            n_trees=trees, max_depth=max_depth, min_samples_split=min_samples_split,
            bag_size=bag, bootstrap=bootstrap, seed=seed,
        )
        return cls(n_classes, d, grown, bag_seeds)

    def predict(self, features: np.ndarray) -> np.ndarray:
        X = as_matrix_f32(features, self.n_features)
        votes = np.zeros((len(X), self.n_classes), dtype=np.int64)
        for t in self.trees:
            _cart.add_tree_votes(X, t.feature, t.threshold, t.left, t.right,
                                 t.node_pred, votes)
        return np.argmax(votes, axis=1).astype(np.int64)

    def importances(self) -> np.ndarray:
        per_tree = np.stack([t.importances(self.n_features) for t in self.trees])
        return per_tree.mean(axis=0)

    def payload_arrays(self) -> list[np.ndarray]:
        arrays = [self.bag_seeds]
        for t in self.trees:
            arrays.extend(t.predict_arrays())
        return arrays
