"""Two-stage hybrid feature selection.

Stage one scores every feature by mutual information with the labels
(equal-frequency binning, log base 2) and keeps the top M. Stage two runs
recursive feature elimination with stratified cross-validation: each round
scores the surviving set by mean weighted F1 of a small random-forest
wrapper, then drops the feature with the lowest mean impurity-decrease
importance across folds. The full CV curve down to one feature is always
recorded; the returned subset is the curve's argmax unless a size is
forced.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .errors import DataError
from .metrics import confusion, quality
from .models.tree import Tree, grow_forest, resolve_bag_size, _presort
from .models import _cart  # noqa: F401  (kernel warm-up happens through tree)
from .models._cart import add_tree_votes


@dataclass(frozen=True)
class MiScores:
    """Per-feature mutual information with the labels, in bits."""

    scores: np.ndarray
    bins: int

    def __post_init__(self) -> None:
        self.scores.setflags(write=False)


@dataclass(frozen=True)
class FeatureSubset:
    """Ordered selection of feature indices plus the evidence behind it."""

    indices: tuple[int, ...]
    mi_scores: tuple[float, ...]
    cv_curve: tuple[tuple[int, float], ...] = ()
    forced_size: int | None = None

    def __post_init__(self) -> None:
        if len(set(self.indices)) != len(self.indices):
            raise DataError("feature subset has repeated indices")
        if any(i < 0 for i in self.indices):
            raise DataError("feature subset has negative indices")
        if len(self.mi_scores) != len(self.indices):
            raise DataError("mi_scores length must match indices")


def _quantile_codes(values: np.ndarray, bins: int) -> tuple[np.ndarray, int]:
    """Discretize into at most ``bins`` equal-frequency bins."""
    edges = np.unique(np.quantile(values, np.linspace(0.0, 1.0, bins + 1)))
    interior = edges[1:-1]
    codes = np.searchsorted(interior, values, side="right")
    return codes, len(interior) + 1


def mutual_information(data: Dataset, bins: int = 32) -> MiScores:
    """I(X_j; Y) per feature from the binned joint histogram."""
    if data.n_rows == 0:
        raise DataError("cannot score an empty dataset")
    if bins < 2:
        raise DataError(f"bins must be >= 2, got {bins}")
    n = data.n_rows
    y = data.labels
    n_classes = len(data.class_names)
    scores = np.empty(data.n_features, dtype=np.float64)
    for j in range(data.n_features):
        codes, n_codes = _quantile_codes(data.features[:, j], bins)
        joint = np.bincount(codes * n_classes + y, minlength=n_codes * n_classes)
        pxy = joint.reshape(n_codes, n_classes) / n
        px = pxy.sum(axis=1, keepdims=True)
        py = pxy.sum(axis=0, keepdims=True)
        nz = pxy > 0
        mi = float((pxy[nz] * np.log2(pxy[nz] / (px * py)[nz])).sum())
        scores[j] = max(mi, 0.0)
    return MiScores(scores=scores, bins=bins)


def rank_by_mi(scores: MiScores, keep: int = 30) -> FeatureSubset:
    """Top ``keep`` features by descending MI; ties go to the lower index."""
    d = len(scores.scores)
    if not 1 <= keep <= d:
        raise DataError(f"keep must be in [1, {d}], got {keep}")
    order = np.lexsort((np.arange(d), -scores.scores))[:keep]
    return FeatureSubset(
        indices=tuple(int(i) for i in order),
        mi_scores=tuple(float(scores.scores[i]) for i in order),
    )


def _stratified_folds(y: np.ndarray, folds: int, seed: int) -> np.ndarray:
    counts = np.bincount(y)
    thin = np.flatnonzero((counts > 0) & (counts < folds))
    if len(thin):
        raise DataError(
            f"stratification impossible: classes {thin.tolist()} have fewer"
            f" than {folds} samples"
        )
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(y), dtype=np.int64)
    for cls in range(len(counts)):
        rows = np.flatnonzero(y == cls)
        rng.shuffle(rows)
        fold_of[rows] = np.arange(len(rows)) % folds
    return fold_of


def _forest_predict(trees: list[Tree], X32: np.ndarray, n_classes: int) -> np.ndarray:
    votes = np.zeros((len(X32), n_classes), dtype=np.int64)
    for t in trees:
        add_tree_votes(X32, t.feature, t.threshold, t.left, t.right, t.node_pred, votes)
    return np.argmax(votes, axis=1)


def rfecv(
    data: Dataset,
    start: FeatureSubset,
    folds: int = 5,
    seed: int = 0,
    force_size: int | None = None,
    wrapper_trees: int = 25,
    wrapper_depth: int = 8,
) -> FeatureSubset:
    """Recursive feature elimination scored by cross-validated weighted F1.

    Eliminates one feature per round, from ``len(start)`` down to 1.
    Importance ties drop the higher feature index; CV-score ties on the
    final curve prefer the smaller subset size. With ``force_size`` the
    result is the set alive at exactly that size (the curve is still
    recorded in full).
    """
    m = len(start.indices)
    if m == 0:
        raise DataError("start subset is empty")
    if folds < 2:
        raise DataError(f"folds must be >= 2, got {folds}")
    if force_size is not None and not 1 <= force_size <= m:
        raise DataError(f"force_size must be in [1, {m}], got {force_size}")

    base = np.array(sorted(start.indices), dtype=np.int64)
    y = data.labels.astype(np.int32)
    n_classes = len(data.class_names)
    fold_of = _stratified_folds(data.labels, folds, seed)

    # per-fold training matrices and presorted row orders are reused by
    # every elimination round
    fold_train: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    fold_val: list[tuple[np.ndarray, np.ndarray]] = []
    sub = data.features[:, base]
    for f in range(folds):
        tr = fold_of != f
        X32 = np.asfortranarray(sub[tr], dtype=np.float32)
        fold_train.append((X32, y[tr], _presort(X32)))
        fold_val.append((np.ascontiguousarray(sub[~tr], dtype=np.float32), y[~tr]))

    master = np.random.default_rng(seed)
    active = np.ones(m, dtype=bool)
    pos_of = {int(orig): pos for pos, orig in enumerate(base)}

    curve: list[tuple[int, float]] = []
    alive_at: dict[int, list[int]] = {}
    for size in range(m, 0, -1):
        alive_at[size] = [i for i in start.indices if active[pos_of[i]]]
        cols = np.flatnonzero(active).astype(np.int32)
        bag = resolve_bag_size("sqrt", len(cols))
        round_seeds = master.integers(0, 2**63, size=folds)

        scores = np.empty(folds)
        importances = np.zeros((folds, m))
        for f in range(folds):
            X32, y_tr, sort_idx = fold_train[f]
            trees, _ = grow_forest(
                X32, y_tr, n_classes, sort_idx, cols,
                n_trees=wrapper_trees, max_depth=wrapper_depth,
                min_samples_split=2, bag_size=bag, bootstrap=True,
                seed=int(round_seeds[f]),
            )
            X_val, y_val = fold_val[f]
            pred = _forest_predict(trees, X_val, n_classes)
            cm = confusion(y_val, pred, n_classes, data.class_names)
            scores[f] = quality(cm, data.task).f1_weighted
            importances[f] = np.mean([t.importances(m) for t in trees], axis=0)

        curve.append((size, float(scores.mean())))
        if size > 1:
            mean_imp = importances.mean(axis=0)
            mean_imp[~active] = np.inf
            # lowest importance loses; ties drop the higher feature index
            worst = np.flatnonzero(mean_imp == mean_imp[active].min()).max()
            active[worst] = False

    if force_size is not None:
        chosen = force_size
    else:
        best_size, best_score = curve[0]
        for size, score in curve:
            if score >= best_score:
                best_size, best_score = size, score
        chosen = best_size

    mi_of = dict(zip(start.indices, start.mi_scores))
    picked = alive_at[chosen]
    return FeatureSubset(
        indices=tuple(picked),
        mi_scores=tuple(mi_of[i] for i in picked),
        cv_curve=tuple(curve),
        forced_size=force_size,
    )


def project(data: Dataset, subset: FeatureSubset) -> Dataset:
    """Restrict a dataset to the subset's columns, in subset order."""
    idx = np.array(subset.indices, dtype=np.int64)
    if len(idx) and idx.max() >= data.n_features:
        raise DataError(
            f"subset index {int(idx.max())} out of range for {data.n_features} features"
        )
    return Dataset(
        features=data.features[:, idx].copy(),
        labels=data.labels.copy(),
        feature_names=tuple(data.feature_names[i] for i in subset.indices),
        class_names=data.class_names,
        task=data.task,
    )


def save_subset(subset: FeatureSubset, feature_names: tuple[str, ...],
                path: str | Path) -> None:
    """Write the plain-text sidecar: feature lines, then the CV curve."""
    lines = [f"{i},{feature_names[i]},{score!r}"
             for i, score in zip(subset.indices, subset.mi_scores)]
    lines.append("# cv_curve")
    lines.extend(f"{size},{score!r}" for size, score in subset.cv_curve)
    if subset.forced_size is not None:
        lines.append("# forced_size")
        lines.append(str(subset.forced_size))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_subset(path: str | Path) -> tuple[FeatureSubset, tuple[str, ...]]:
    """Read a sidecar back; returns the subset and the selected names."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    indices: list[int] = []
    names: list[str] = []
    mi: list[float] = []
    curve: list[tuple[int, float]] = []
    forced: int | None = None
    section = "features"
    for raw in text:
        line = raw.strip()
        if not line:
            continue
        if line == "# cv_curve":
            section = "curve"
            continue
        if line == "# forced_size":
            section = "forced"
            continue
        if line.startswith("#"):
            continue
        try:
            if section == "features":
                idx, name, score = line.split(",")
                indices.append(int(idx))
                names.append(name)
                mi.append(float(score))
            elif section == "curve":
                size, score = line.split(",")
                curve.append((int(size), float(score)))
            else:
                forced = int(line)
        except ValueError:
            raise DataError(f"{path}: malformed sidecar line {line!r}") from None
    subset = FeatureSubset(
        indices=tuple(indices), mi_scores=tuple(mi),
        cv_curve=tuple(curve), forced_size=forced,
    )
    return subset, tuple(names)
