"""Command-line front end.

Subcommands: run (full experiment), ablate (attack-class ablation grid),
select (feature selection only), profile (cost-profile a saved model),
inspect (print model file metadata). Exit codes: 0 success, 1 usage error,
2 data error, 3 internal error. Human diagnostics go to stderr; machine
output goes to files (inspect prints its metadata to stdout).
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .config import apply_overrides, default_config, load_config
from .errors import ConfigError, DataError
from .experiment import run_ablation, run_task, select_features
from .metrics import profile_cost
from .models import deserialize, read_header

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lightids",
        description="Lightweight intrusion-detection experiments on network-flow CSVs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="experiment config file (key = value sections)")
        p.add_argument(
            "--set", action="append", default=[], metavar="KEY=VALUE",
            help="override a config key, e.g. featsel.force_size=20",
        )
        p.add_argument("-v", "--verbose", action="store_true")

    add_config_args(sub.add_parser("run", help="run one binary/multiclass experiment"))
    add_config_args(sub.add_parser("ablate", help="run the attack-class ablation grid"))
    add_config_args(sub.add_parser("select", help="run feature selection only"))

    profile = sub.add_parser("profile", help="cost-profile a serialized model")
    profile.add_argument("--model", required=True, help="path to a .lsm model file")
    profile.add_argument("--probe", required=True,
                         help="numeric CSV of feature rows (header optional)")
    profile.add_argument("--repeats", type=int, default=30)
    profile.add_argument("--out", help="write metric,value CSV here")
    profile.add_argument("-v", "--verbose", action="store_true")

    inspect = sub.add_parser("inspect", help="print model file metadata")
    inspect.add_argument("model", help="path to a .lsm model file")
    return parser


def _load_probe_matrix(path: str) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"probe file not found: {path}")
    rows: list[list[float]] = []
    with p.open(newline="", encoding="utf-8-sig") as fh:
        for lineno, cells in enumerate(csv.reader(fh), start=1):
            if not cells:
                continue
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise DataError(f"{path}: row {lineno} is not numeric") from None
            if len(rows) > 1 and len(rows[-1]) != len(rows[0]):
                raise DataError(f"{path}: row {lineno} has {len(rows[-1])} cells,"
                                f" expected {len(rows[0])}")
    if not rows:
        raise DataError(f"{path}: no numeric rows found")
    return np.asarray(rows, dtype=np.float64)


def _load_model_file(path: str) -> bytes:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"model file not found: {path}")
    return p.read_bytes()


def _resolve_config(args: argparse.Namespace):
    config = load_config(args.config) if args.config else default_config()
    try:
        return apply_overrides(config, args.set)
    except ConfigError as exc:
        # bad --set flags are usage errors, not data errors
        raise _UsageError(str(exc)) from exc


class _UsageError(Exception):
    pass


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "run":
        config = _resolve_config(args)
        report = run_task(config)
        if args.verbose:
            for family, res in report.results.items():
                print(f"{family}: accuracy={res.quality.accuracy:.4f}"
                      f" size={res.cost.model_size_bytes}B", file=sys.stderr)
        print(f"report written to {config['output.dir']}", file=sys.stderr)
        return EXIT_OK

    if args.command == "ablate":
        config = _resolve_config(args)
        table = run_ablation(config)
        if args.verbose:
            for key, acc in table.accuracy.items():
                print(f"{key[0]} {key[1]}: accuracy={acc:.4f}", file=sys.stderr)
        print(f"ablation written to {config['output.dir']}", file=sys.stderr)
        return EXIT_OK

    if args.command == "select":
        config = _resolve_config(args)
        subset = select_features(config)
        print(f"selected {len(subset.indices)} features;"
              f" sidecar written to {config['output.dir']}", file=sys.stderr)
        return EXIT_OK

    if args.command == "profile":
        if args.repeats < 3:
            raise _UsageError("--repeats must be >= 3")
        model = deserialize(_load_model_file(args.model))
        probe = _load_probe_matrix(args.probe)
        cost = profile_cost(model, probe, repeats=args.repeats)
        lines = [
            f"model_size_bytes,{cost.model_size_bytes}",
            f"latency_median_s,{cost.latency_median_s!r}",
            f"latency_p95_s,{cost.latency_p95_s!r}",
            f"accounted_memory_bytes,{cost.accounted_memory_bytes}",
        ]
        if args.out:
            Path(args.out).write_text("\n".join(["metric,value"] + lines) + "\n",
                                      encoding="utf-8")
        for line in lines:
            print(line.replace(",", " = ", 1), file=sys.stderr)
        return EXIT_OK

    if args.command == "inspect":
        header = read_header(_load_model_file(args.model))
        print(f"family={header['family']}")
        print(f"version={header['version']}")
        print(f"classes={header['n_classes']}")
        print(f"features={header['n_features']}")
        return EXIT_OK

    raise _UsageError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return _dispatch(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        stage = getattr(exc, "stage", None)
        where = f" [stage: {stage}]" if stage else ""
        print(f"data error{where}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
