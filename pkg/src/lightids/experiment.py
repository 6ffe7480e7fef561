"""End-to-end experiment runs: binary, multiclass, and class ablation.

Pipeline order is fixed: load -> deduplicate(train) -> fit preprocessing on
train -> transform train and test -> (multiclass) balance train -> MI
ranking -> RFECV -> project -> per family train/evaluate/profile. Test data
only ever enters transform, project, and predict, so nothing is fitted on
it. Artifacts are written only after a run completes.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import featsel
from .config import ExperimentConfig
from .dataset import (
    Dataset,
    balance,
    deduplicate,
    drop_classes,
    fit_preprocessor,
    load_csv,
    transform,
)
from .errors import ConfigError, DataError, annotate_stage
from .metrics import CostReport, QualityReport, confusion, profile_cost, quality
from .models import FAMILIES, ModelSpec, serialize, train
from .schema import load_schema_file, unsw_nb15_schema


@contextlib.contextmanager
def _stage(name: str):
    try:
        yield
    except BaseException as exc:
        annotate_stage(exc, name)
        raise


@dataclass(frozen=True)
class FamilyResult:
    family: str
    quality: QualityReport
    cost: CostReport


@dataclass
class EvaluationReport:
    task: str
    variant: str
    fingerprint: str
    class_names: tuple[str, ...]
    feature_names: tuple[str, ...]          # full post-transform feature space
    subset: featsel.FeatureSubset
    results: dict[str, FamilyResult]
    model_blobs: dict[str, bytes]


def _resolve_schema(config: ExperimentConfig):
    path = config["data.schema"]
    return load_schema_file(path) if path else unsw_nb15_schema()


def _stratified_rows(labels: np.ndarray, max_rows: int, seed: int) -> np.ndarray:
    """Proportional per-class row pick, deterministic, original order kept."""
    n = len(labels)
    if max_rows <= 0 or max_rows >= n:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    counts = np.bincount(labels)
    exact = counts * (max_rows / n)
    take = np.floor(exact).astype(np.int64)
    short = max_rows - int(take.sum())
    for cls in np.argsort(-(exact - take), kind="stable")[:short]:
        take[cls] += 1
    picked = [
        rng.choice(np.flatnonzero(labels == cls), size=int(take[cls]), replace=False)
        for cls in range(len(counts))
        if take[cls] > 0
    ]
    return np.sort(np.concatenate(picked))


def _prepare(config: ExperimentConfig, drop: tuple[str, ...] = (),
             need_test: bool = True):
    """Shared front of the pipeline, up to the projected train/test pair."""
    task = config.task
    with _stage("config"):
        if task not in ("binary", "multiclass"):
            raise ConfigError(f"data.task must be binary or multiclass, got {task!r}")
        keys = ("data.train", "data.test") if need_test else ("data.train",)
        for key in keys:
            if not config[key]:
                raise ConfigError(f"config key {key} is required")
            if not Path(config[key]).is_file():
                raise DataError(f"{key} file not found: {config[key]}")
        schema = _resolve_schema(config)

    with _stage("load"):
        train_raw = load_csv(config["data.train"], schema)
        test_raw = load_csv(config["data.test"], schema) if need_test else None
    with _stage("dedup"):
        train_raw = deduplicate(train_raw)
    with _stage("preprocess"):
        pre = fit_preprocessor(train_raw)
        train_ds = transform(pre, train_raw, task)
        test_ds = transform(pre, test_raw, task) if need_test else None
    if drop:
        with _stage("ablation"):
            train_ds = drop_classes(train_ds, list(drop))
            if need_test:
                test_ds = drop_classes(test_ds, list(drop))
    if task == "multiclass":
        with _stage("balance"):
            train_ds = balance(train_ds, seed=config.seed + 1)

    with _stage("featsel"):
        mi = featsel.mutual_information(train_ds, bins=config["featsel.bins"])
        keep = min(config["featsel.keep"], train_ds.n_features)
        ranked = featsel.rank_by_mi(mi, keep=keep)
        subset = featsel.rfecv(
            train_ds,
            ranked,
            folds=config["featsel.folds"],
            seed=config.seed + 2,
            force_size=config["featsel.force_size"],
            wrapper_trees=config["featsel.wrapper_trees"],
            wrapper_depth=config["featsel.wrapper_depth"],
        )
        train_p = featsel.project(train_ds, subset)
        test_p = featsel.project(test_ds, subset) if need_test else None
    return train_ds, train_p, test_p, subset


def run_task(config: ExperimentConfig, drop: tuple[str, ...] = (),
             variant: str = "full", write: bool = True) -> EvaluationReport:
    """Run the full pipeline for one task and emit a report plus artifacts."""
    train_full, train_p, test_p, subset = _prepare(config, drop)

    results: dict[str, FamilyResult] = {}
    blobs: dict[str, bytes] = {}
    for family in config.families:
        with _stage(f"train[{family}]"):
            spec = ModelSpec(
                family=family,
                params=config.family_params(family),
                seed=config.seed + 100 + FAMILIES.index(family),
            )
            model = train(spec, train_p)
        with _stage(f"evaluate[{family}]"):
            eval_rows = np.arange(test_p.n_rows)
            if family == "knn":
                eval_rows = _stratified_rows(
                    test_p.labels, config["models.knn.max_eval_rows"], config.seed + 3)
            eval_X = test_p.features[eval_rows]
            predictions = model.predict(eval_X)
            cm = confusion(test_p.labels[eval_rows], predictions,
                           len(test_p.class_names), test_p.class_names)
            q = quality(cm, config.task)
        with _stage(f"profile[{family}]"):
            probe_rows = config["output.probe_rows"]
            probe = eval_X[:probe_rows] if probe_rows > 0 else eval_X
            cost = profile_cost(model, probe, repeats=config["output.repeats"])
        results[family] = FamilyResult(family=family, quality=q, cost=cost)
        blobs[family] = serialize(model)

    report = EvaluationReport(
        task=config.task,
        variant=variant,
        fingerprint=config.fingerprint(),
        class_names=test_p.class_names,
        feature_names=train_full.feature_names,
        subset=subset,
        results=results,
        model_blobs=blobs,
    )
    if write:
        with _stage("write"):
            write_artifacts(report, Path(config["output.dir"]))
    return report


def ablation_variants(classes: tuple[str, ...]) -> list[tuple[str, tuple[str, ...]]]:
    """Variant grid: full, minus each listed class, minus all of them."""
    variants: list[tuple[str, tuple[str, ...]]] = [("full", ())]
    for name in classes:
        variants.append((f"-{name}", (name,)))
    if len(classes) > 1:
        variants.append(("-" + "-".join(classes), tuple(classes)))
    return variants


@dataclass
class AblationTable:
    variants: tuple[str, ...]
    families: tuple[str, ...]
    accuracy: dict[tuple[str, str], float]   # (family, variant) -> accuracy
    reports: dict[str, EvaluationReport]


def run_ablation(config: ExperimentConfig, write: bool = True) -> AblationTable:
    """Re-run the multiclass pipeline with attack classes removed."""
    if config.task != "multiclass":
        raise ConfigError("ablation requires data.task = multiclass")
    classes = config["ablation.classes"]
    out_root = Path(config["output.dir"])
    table = AblationTable(
        variants=tuple(v for v, _ in ablation_variants(classes)),
        families=config.families,
        accuracy={},
        reports={},
    )
    for variant, dropped in ablation_variants(classes):
        sub = config.replace(**{
            "output.dir": str(out_root / _variant_dir(variant))})
        report = run_task(sub, drop=dropped, variant=variant, write=write)
        table.reports[variant] = report
        for family, res in report.results.items():
            table.accuracy[(family, variant)] = res.quality.accuracy
    if write:
        out_root.mkdir(parents=True, exist_ok=True)
        (out_root / "ablation.csv").write_text(render_ablation(table, "csv"),
                                               encoding="utf-8")
        (out_root / "ablation.md").write_text(render_ablation(table, "markdown"),
                                              encoding="utf-8")
    return table


def _variant_dir(variant: str) -> str:
    return "full" if variant == "full" else "drop_" + variant.lstrip("-").replace("-", "_")


# -- report rendering ---------------------------------------------------------

_QUALITY_METRICS = (
    "accuracy", "precision_macro", "recall_macro", "f1_macro",
    "precision_weighted", "recall_weighted", "f1_weighted", "fpr",
)
_COST_METRICS = (
    "model_size_bytes", "latency_median_s", "latency_p95_s", "accounted_memory_bytes",
)
TIMING_METRICS = ("latency_median_s", "latency_p95_s")


def render_report(report: EvaluationReport, fmt: str) -> str:
    """Render an EvaluationReport as 'csv' or 'markdown' text."""
    if fmt == "csv":
        lines = [
            f"# task,{report.task}",
            f"# variant,{report.variant}",
            f"# fingerprint,{report.fingerprint}",
            "family,task,metric,value",
        ]
        for family, res in report.results.items():
            for metric in _QUALITY_METRICS:
                lines.append(f"{family},{report.task},{metric},{getattr(res.quality, metric)!r}")
            for cls, name in enumerate(report.class_names):
                lines.append(
                    f"{family},{report.task},precision[{name}],{res.quality.precision[cls]!r}")
                lines.append(
                    f"{family},{report.task},recall[{name}],{res.quality.recall[cls]!r}")
                lines.append(f"{family},{report.task},f1[{name}],{res.quality.f1[cls]!r}")
            for metric in _COST_METRICS:
                lines.append(f"{family},{report.task},{metric},{getattr(res.cost, metric)!r}")
        return "\n".join(lines) + "\n"

    if fmt == "markdown":
        k = len(report.subset.indices)
        lines = [
            "# Evaluation report",
            "",
            f"- task: {report.task}",
            f"- variant: {report.variant}",
            f"- config fingerprint: {report.fingerprint}",
            f"- selected features: {k} of {len(report.feature_names)} (see features.txt)",
            "",
            "| Model | Accuracy (%) | F1 weighted (%) | Size (MB) |",
            "|-------|--------------|-----------------|-----------|",
        ]
        for family, res in report.results.items():
            size_mb = res.cost.model_size_bytes / 1e6
            lines.append(
                f"| {family} | {100 * res.quality.accuracy:.2f}"
                f" | {100 * res.quality.f1_weighted:.2f} | {size_mb:.4f} |"
            )
        return "\n".join(lines) + "\n"
    raise ConfigError(f"unknown report format {fmt!r}")


def parse_report_csv(text: str) -> dict[tuple[str, str, str], float]:
    """Inverse of render_report(..., 'csv') for the numeric rows."""
    out: dict[tuple[str, str, str], float] = {}
    for line in text.splitlines():
        if not line or line.startswith("#") or line.startswith("family,"):
            continue
        family, task, metric, value = line.split(",", 3)
        out[(family, task, metric)] = float(value)
    return out


def render_ablation(table: AblationTable, fmt: str) -> str:
    if fmt == "csv":
        lines = ["family,variant,accuracy"]
        for family in table.families:
            for variant in table.variants:
                lines.append(f"{family},{variant},{table.accuracy[(family, variant)]!r}")
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        head = "| Model | " + " | ".join(table.variants) + " |"
        sep = "|" + "---|" * (len(table.variants) + 1)
        lines = ["# Attack-class ablation (multiclass accuracy %)", "", head, sep]
        for family in table.families:
            cells = " | ".join(
                f"{100 * table.accuracy[(family, variant)]:.2f}" for variant in table.variants
            )
            lines.append(f"| {family} | {cells} |")
        return "\n".join(lines) + "\n"
    raise ConfigError(f"unknown report format {fmt!r}")


def write_artifacts(report: EvaluationReport, out_dir: Path) -> None:
    """Persist report.md, report.csv, features.txt, and models/*.lsm."""
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.md").write_text(render_report(report, "markdown"), encoding="utf-8")
    (out_dir / "report.csv").write_text(render_report(report, "csv"), encoding="utf-8")
    featsel.save_subset(report.subset, report.feature_names, out_dir / "features.txt")
    models_dir = out_dir / "models"
    models_dir.mkdir(exist_ok=True)
    for family, blob in report.model_blobs.items():
        (models_dir / f"{family}.lsm").write_bytes(blob)


def emit_report(report: EvaluationReport, fmt: str, path: str | Path) -> Path:
    """Write a single rendered report to ``path`` and return it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report(report, fmt), encoding="utf-8")
    return path


def select_features(config: ExperimentConfig, write: bool = True) -> featsel.FeatureSubset:
    """Feature selection only; writes features.txt under the output dir."""
    train_full, _, _, subset = _prepare(config, need_test=False)
    if write:
        with _stage("write"):
            out_dir = Path(config["output.dir"])
            out_dir.mkdir(parents=True, exist_ok=True)
            featsel.save_subset(subset, train_full.feature_names, out_dir / "features.txt")
    return subset
