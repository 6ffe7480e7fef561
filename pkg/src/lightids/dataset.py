"""CSV ingestion and preprocessing for network-flow datasets.

The flow is: ``load_csv`` -> ``deduplicate`` (training data only) ->
``fit_preprocessor`` on training data -> ``transform`` train and test with
the same fitted state -> optionally ``balance`` the multiclass training set.
Everything downstream consumes the dense, standardized ``Dataset``.

Conventions fixed here (the source files only say "cleaning, encoding,
scaling"):

* categorical values are ordinal-encoded by descending frequency with a
  lexicographic tie-break; unseen values at transform time map to a reserved
  code equal to the number of fitted categories, missing values map to the
  most frequent category;
* missing numerics are median-imputed; means/medians/sds are computed over
  observed cells only (population sd, clamped to at least 1e-12);
* every encoded feature, categorical codes included, is z-score standardized
  with parameters fitted on training data.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, SchemaError
from .schema import ColumnSchema, predictive_columns, validate_schema

TASKS = ("binary", "multiclass")
BINARY_CLASS_NAMES = ("normal", "attack")


@dataclass
class RawTable:
    """Parsed CSV with per-column typed storage.

    Numeric and binary-label columns are float arrays (NaN marks a missing
    cell); categorical and multiclass-label columns are string arrays with
    "" marking a missing cell. Drop columns are parsed for shape validation
    but not retained.
    """

    schema: list[ColumnSchema]
    columns: dict[str, np.ndarray | None]
    row_count: int

    def column(self, name: str) -> np.ndarray:
        col = self.columns.get(name)
        if col is None:
            raise KeyError(f"column {name!r} is not retained (drop column or unknown)")
        return col

    def rows(self) -> list[tuple]:
        """Materialize retained cells row-wise (drop columns excluded)."""
        kept = [c.name for c in self.schema if c.kind != "drop"]
        cols = [self.columns[n] for n in kept]
        return list(zip(*cols)) if cols else []


def _parse_float(raw: str, col: str, row: int) -> float:
    text = raw.strip()
    if not text:
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise DataError(f"row {row}: column {col!r}: cannot parse {raw!r} as a number") from None


def load_csv(path: str | Path, schema: list[ColumnSchema]) -> RawTable:
    """Read an RFC-4180 CSV with a header row into a typed RawTable.

    The header is matched to the schema by name, order-insensitively. Empty
    cells are missing values. Numeric parsing is only attempted for numeric
    and binary-label columns.
    """
    path = Path(path)
    validate_schema(schema)
    if not path.is_file():
        raise DataError(f"CSV file not found: {path}")

    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty, expected a header row") from None
        header = [h.strip() for h in header]
        want = {c.name for c in schema}
        have = set(header)
        if want != have:
            missing = sorted(want - have)
            extra = sorted(have - want)
            raise SchemaError(
                f"{path}: header does not match schema"
                f" (missing: {missing or 'none'}, extra: {extra or 'none'})"
            )
        if len(have) != len(header):
            raise SchemaError(f"{path}: header repeats a column name")

        file_pos = {name: i for i, name in enumerate(header)}
        numeric_like = [c for c in schema if c.kind in ("numeric", "binary_label")]
        string_like = [c for c in schema if c.kind in ("categorical", "multiclass_label")]

        num_cells: dict[str, list[float]] = {c.name: [] for c in numeric_like}
        str_cells: dict[str, list[str]] = {c.name: [] for c in string_like}
        width = len(schema)
        n = 0
        for row_no, cells in enumerate(reader, start=1):
            if len(cells) != width:
                raise DataError(
                    f"{path}: row {row_no} has {len(cells)} cells, expected {width}"
                )
            for c in numeric_like:
                num_cells[c.name].append(_parse_float(cells[file_pos[c.name]], c.name, row_no))
            for c in string_like:
                str_cells[c.name].append(cells[file_pos[c.name]].strip())
            n += 1

    columns: dict[str, np.ndarray | None] = {}
    for c in schema:
        if c.kind == "drop":
            columns[c.name] = None
        elif c.name in num_cells:
            columns[c.name] = np.asarray(num_cells[c.name], dtype=np.float64)
        else:
            columns[c.name] = np.asarray(str_cells[c.name], dtype=object)
    return RawTable(schema=list(schema), columns=columns, row_count=n)


def _row_codes(table: RawTable) -> np.ndarray:
    """Integer fingerprint matrix over retained columns (NaN is one code)."""
    kept = [c for c in table.schema if c.kind != "drop"]
    out = np.empty((table.row_count, len(kept)), dtype=np.int64)
    for j, c in enumerate(kept):
        col = table.columns[c.name]
        if col.dtype == object:
            _, codes = np.unique(col.astype(str), return_inverse=True)
        else:
            missing = np.isnan(col)
            filled = np.where(missing, 0.0, col)
            _, codes = np.unique(filled, return_inverse=True)
            codes = codes.astype(np.int64)
            codes[missing] = codes.max(initial=0) + 1
        out[:, j] = codes
    return out


def deduplicate(table: RawTable) -> RawTable:
    """Drop exact-duplicate rows (labels included), keeping first occurrences.

    Comparison covers every retained column; drop columns (row ids and the
    like) do not participate. Original row order is preserved.
    """
    if table.row_count == 0:
        return table
    codes = _row_codes(table)
    _, first = np.unique(codes, axis=0, return_index=True)
    keep = np.sort(first)
    if len(keep) == table.row_count:
        return table
    columns = {
        name: (col[keep] if col is not None else None)
        for name, col in table.columns.items()
    }
    return RawTable(schema=table.schema, columns=columns, row_count=len(keep))


def _frequency_codes(values: np.ndarray) -> dict[str, int]:
    """Category -> ordinal code, most frequent first, lexicographic ties."""
    cats, counts = np.unique(values, return_counts=True)
    order = sorted(range(len(cats)), key=lambda i: (-counts[i], cats[i]))
    return {str(cats[i]): code for code, i in enumerate(order)}


@dataclass
class Preprocessor:
    """Train-fitted encoding, imputation, and scaling state.

    Fit once on the training table, then apply to train and test alike; the
    transform never refits. Unseen categories at transform time get the
    reserved code ``len(categories)`` instead of raising.
    """

    schema: list[ColumnSchema] = field(default_factory=list)
    cat_codes: dict[str, dict[str, int]] = field(default_factory=dict)
    medians: dict[str, float] = field(default_factory=dict)
    means: dict[str, float] = field(default_factory=dict)
    sds: dict[str, float] = field(default_factory=dict)
    multiclass_names: tuple[str, ...] = ()
    fitted: bool = False

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in predictive_columns(self.schema))

    def reserved_code(self, column: str) -> int:
        return len(self.cat_codes[column])


def fit_preprocessor(table: RawTable) -> Preprocessor:
    """Learn encoding maps, imputation values, and scaling parameters."""
    if table.row_count < 2:
        raise DataError(f"need at least 2 rows to fit a preprocessor, got {table.row_count}")
    pre = Preprocessor(schema=list(table.schema))

    for col in predictive_columns(table.schema):
        values = table.column(col.name)
        if col.kind == "categorical":
            observed = values[values.astype(str) != ""]
            if len(observed) == 0:
                raise DataError(f"column {col.name!r} has no observed values")
            pre.cat_codes[col.name] = _frequency_codes(observed.astype(str))
            encoded = np.array(
                [pre.cat_codes[col.name][str(v)] for v in observed], dtype=np.float64
            )
        else:
            encoded = values[~np.isnan(values)]
            if len(encoded) == 0:
                raise DataError(f"column {col.name!r} has no observed values")
            pre.medians[col.name] = float(np.median(encoded))
        pre.means[col.name] = float(np.mean(encoded))
        pre.sds[col.name] = max(float(np.std(encoded)), 1e-12)

    label_col = next(c for c in table.schema if c.kind == "multiclass_label")
    classes = table.column(label_col.name).astype(str)
    if (classes == "").any():
        raise DataError(f"column {label_col.name!r} has missing labels")
    pre.multiclass_names = tuple(sorted(np.unique(classes)))
    pre.fitted = True
    return pre


@dataclass(frozen=True)
class Dataset:
    """Dense numeric feature matrix plus labels for one task.

    ``features`` is standardized float64 with no non-finite values; labels
    index into ``class_names``. Instances are immutable; every operation on
    them returns a new Dataset.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    class_names: tuple[str, ...]
    task: str

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise DataError(f"unknown task {self.task!r}")
        if self.features.ndim != 2 or self.features.shape[1] != len(self.feature_names):
            raise DataError("feature matrix width does not match feature_names")
        if len(self.labels) != len(self.features):
            raise DataError("labels length does not match feature rows")
        if not np.isfinite(self.features).all():
            raise DataError("feature matrix contains non-finite values")
        if len(self.labels) and (
            self.labels.min() < 0 or self.labels.max() >= len(self.class_names)
        ):
            raise DataError("labels out of range for class_names")
        self.features.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=len(self.class_names))


def _require_fitted(pre: Preprocessor) -> None:
    if not pre.fitted:
        raise DataError("preprocessor is not fitted; call fit_preprocessor first")


def transform(pre: Preprocessor, table: RawTable, task: str) -> Dataset:
    """Apply fitted preprocessing to a table and derive labels for ``task``."""
    _require_fitted(pre)
    if task not in TASKS:
        raise DataError(f"unknown task {task!r}")
    schema_sig = [(c.name, c.kind) for c in pre.schema]
    if [(c.name, c.kind) for c in table.schema] != schema_sig:
        raise SchemaError("table schema does not match the fitted preprocessor")

    cols = predictive_columns(pre.schema)
    out = np.empty((table.row_count, len(cols)), dtype=np.float64)
    for j, col in enumerate(cols):
        values = table.column(col.name)
        if col.kind == "categorical":
            codes = pre.cat_codes[col.name]
            reserved = pre.reserved_code(col.name)
            encoded = np.array(
                [codes.get(str(v), reserved) if str(v) != "" else 0 for v in values],
                dtype=np.float64,
            )
        else:
            encoded = np.where(np.isnan(values), pre.medians[col.name], values)
        out[:, j] = (encoded - pre.means[col.name]) / pre.sds[col.name]

    if task == "binary":
        label_col = next(c for c in pre.schema if c.kind == "binary_label")
        raw = table.column(label_col.name)
        if np.isnan(raw).any():
            raise DataError(f"column {label_col.name!r} has missing labels")
        labels = raw.astype(np.int64)
        if not np.isin(labels, (0, 1)).all() or not (labels == raw).all():
            raise DataError(f"column {label_col.name!r} must contain only 0/1 labels")
        class_names = BINARY_CLASS_NAMES
    else:
        label_col = next(c for c in pre.schema if c.kind == "multiclass_label")
        raw = table.column(label_col.name).astype(str)
        index = {name: i for i, name in enumerate(pre.multiclass_names)}
        labels = np.empty(table.row_count, dtype=np.int64)
        for i, v in enumerate(raw):
            if v not in index:
                raise DataError(f"row {i + 1}: unknown class {v!r} not seen during fit")
            labels[i] = index[v]
        class_names = pre.multiclass_names

    return Dataset(
        features=out,
        labels=labels,
        feature_names=pre.feature_names,
        class_names=tuple(class_names),
        task=task,
    )


def balance(data: Dataset, seed: int) -> Dataset:
    """Random-oversample every class up to the majority count.

    Original rows are all kept; the copies appended for each class are drawn
    with replacement by a generator seeded with ``seed``, so the result is
    bit-identical for identical inputs.
    """
    if data.task != "multiclass":
        raise DataError("balance applies to multiclass datasets only")
    counts = data.class_counts()
    if (counts == 0).any():
        empty = [data.class_names[i] for i in np.flatnonzero(counts == 0)]
        raise DataError(f"cannot balance: classes with zero samples: {', '.join(empty)}")
    target = int(counts.max())
    if (counts == target).all():
        return data

    rng = np.random.default_rng(seed)
    picks = [np.arange(data.n_rows)]
    for cls in range(len(data.class_names)):
        need = target - int(counts[cls])
        if need > 0:
            rows = np.flatnonzero(data.labels == cls)
            picks.append(rng.choice(rows, size=need, replace=True))
    order = np.concatenate(picks)
    return Dataset(
        features=data.features[order].copy(),
        labels=data.labels[order].copy(),
        feature_names=data.feature_names,
        class_names=data.class_names,
        task=data.task,
    )


def drop_classes(data: Dataset, class_names: list[str]) -> Dataset:
    """Remove whole classes and re-index the remaining labels densely."""
    known = set(data.class_names)
    for name in class_names:
        if name not in known:
            raise DataError(f"unknown class {name!r}; dataset has: {', '.join(data.class_names)}")
    if not class_names:
        return data
    dropped = set(class_names)
    kept_names = tuple(n for n in data.class_names if n not in dropped)
    remap = np.full(len(data.class_names), -1, dtype=np.int64)
    for new, name in enumerate(kept_names):
        remap[data.class_names.index(name)] = new
    keep_rows = remap[data.labels] >= 0
    return Dataset(
        features=data.features[keep_rows].copy(),
        labels=remap[data.labels[keep_rows]],
        feature_names=data.feature_names,
        class_names=kept_names,
        task=data.task,
    )
