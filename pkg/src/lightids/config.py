"""Experiment configuration: defaults, file parsing, overrides, fingerprint.

The config file is flat ``key = value`` text under ``[section]`` headers
(sections: data, featsel, models, models.<family>, ablation, output). Every
key has a typed entry in ``CONFIG_SCHEMA``; unknown keys are rejected, both
from files and from command-line overrides. Precedence is flags > file >
defaults.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass
from types import MappingProxyType

from .errors import ConfigError
from .models import FAMILIES

# key -> (type tag, default); type tags: str, int, float, bool,
# optional_int, families, str_list, bag
CONFIG_SCHEMA: dict[str, tuple[str, object]] = {
    "data.train": ("str", ""),
    "data.test": ("str", ""),
    "data.schema": ("str", ""),
    "data.task": ("str", "binary"),
    "data.seed": ("int", 0),
    "featsel.bins": ("int", 32),
    "featsel.keep": ("int", 30),
    "featsel.folds": ("int", 5),
    "featsel.force_size": ("optional_int", 20),
    "featsel.wrapper_trees": ("int", 25),
    "featsel.wrapper_depth": ("int", 8),
    "models.families": ("families", FAMILIES),
    "models.dt.max_depth": ("int", 32),
    "models.dt.min_samples_split": ("int", 2),
    "models.rf.trees": ("int", 100),
    "models.rf.max_depth": ("int", 8),
    "models.rf.min_samples_split": ("int", 2),
    "models.rf.feature_bag": ("bag", "sqrt"),
    "models.rf.bootstrap": ("bool", True),
    "models.knn.k": ("int", 5),
    "models.knn.max_eval_rows": ("int", 0),
    "models.lr.learning_rate": ("float", 0.1),
    "models.lr.epochs": ("int", 50),
    "models.lr.batch_size": ("int", 256),
    "models.lr.l2": ("float", 1e-4),
    "models.svm.learning_rate": ("float", 0.1),
    "models.svm.epochs": ("int", 50),
    "models.svm.batch_size": ("int", 256),
    "models.svm.l2": ("float", 1e-4),
    "models.nb.var_smoothing": ("float", 1e-9),
    "ablation.classes": ("str_list", ("Worms", "Shellcode")),
    "output.dir": ("str", "out"),
    "output.repeats": ("int", 30),
    "output.probe_rows": ("int", 0),
}


def parse_value(key: str, text: str):
    """Parse one config value according to the schema type of ``key``."""
    if key not in CONFIG_SCHEMA:
        raise ConfigError(f"unknown config key {key!r}")
    tag = CONFIG_SCHEMA[key][0]
    text = text.strip()
    try:
        if tag == "str":
            return text
        if tag == "int":
            return int(text)
        if tag == "float":
            return float(text)
        if tag == "bool":
            if text.lower() in ("true", "1", "yes", "on"):
                return True
            if text.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(text)
        if tag == "optional_int":
            if text.lower() in ("", "none"):
                return None
            return int(text)
        if tag == "families":
            fams = tuple(dict.fromkeys(p.strip() for p in text.split(",") if p.strip()))
            bad = [f for f in fams if f not in FAMILIES]
            if bad or not fams:
                raise ValueError(text)
            return fams
        if tag == "str_list":
            return tuple(p.strip() for p in text.split(",") if p.strip())
        if tag == "bag":
            if text in ("sqrt", "all"):
                return text
            return int(text)
    except ValueError:
        raise ConfigError(f"invalid value {text!r} for config key {key!r}") from None
    raise ConfigError(f"unhandled type tag for {key!r}")


def format_value(key: str, value) -> str:
    """Canonical text form used by files, reports, and the fingerprint."""
    tag = CONFIG_SCHEMA[key][0]
    if tag == "bool":
        return "true" if value else "false"
    if tag == "optional_int":
        return "" if value is None else str(value)
    if tag in ("families", "str_list"):
        return ",".join(value)
    if tag == "float":
        return repr(float(value))
    return str(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """Immutable, fully-populated view of one experiment's knobs."""

    values: MappingProxyType

    def __getitem__(self, key: str):
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        return self.values[key]

    @property
    def task(self) -> str:
        return self.values["data.task"]

    @property
    def seed(self) -> int:
        return self.values["data.seed"]

    @property
    def families(self) -> tuple[str, ...]:
        return self.values["models.families"]

    def family_params(self, family: str) -> dict:
        prefix = f"models.{family}."
        skip = {f"models.{family}.max_eval_rows"}
        return {
            key[len(prefix):]: value
            for key, value in self.values.items()
            if key.startswith(prefix) and key not in skip
        }

    def fingerprint(self) -> str:
        lines = "\n".join(
            f"{key}={format_value(key, self.values[key])}"
            for key in sorted(self.values)
        )
        return hashlib.sha256(lines.encode("utf-8")).hexdigest()

    def replace(self, **dotted) -> "ExperimentConfig":
        """New config with dotted keys (dots as underscores not needed) changed."""
        merged = dict(self.values)
        for key, value in dotted.items():
            if key not in CONFIG_SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = value
        return ExperimentConfig(values=MappingProxyType(merged))


def default_config() -> ExperimentConfig:
    return ExperimentConfig(
        values=MappingProxyType({k: v for k, (_, v) in CONFIG_SCHEMA.items()})
    )


def load_config(path: str) -> ExperimentConfig:
    """Parse a config file on top of the built-in defaults."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise ConfigError(f"config file not found: {path}")
    merged = {k: v for k, (_, v) in CONFIG_SCHEMA.items()}
    for section in parser.sections():
        for option, text in parser.items(section):
            key = f"{section}.{option}"
            if key not in CONFIG_SCHEMA:
                raise ConfigError(f"{path}: unknown config key {key!r}")
            merged[key] = parse_value(key, text)
    return ExperimentConfig(values=MappingProxyType(merged))


def apply_overrides(config: ExperimentConfig, overrides: list[str]) -> ExperimentConfig:
    """Apply ``section.key=value`` override strings (highest precedence)."""
    merged = dict(config.values)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        key, _, text = item.partition("=")
        key = key.strip()
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown config key {key!r} in override")
        merged[key] = parse_value(key, text)
    return ExperimentConfig(values=MappingProxyType(merged))


def dump_config(config: ExperimentConfig) -> str:
    """Render a config back to file syntax (canonical section order)."""
    sections: dict[str, list[str]] = {}
    for key in CONFIG_SCHEMA:
        section, _, option = key.rpartition(".")
        sections.setdefault(section, []).append(
            f"{option} = {format_value(key, config.values[key])}"
        )
    blocks = [f"[{name}]\n" + "\n".join(lines) for name, lines in sections.items()]
    return "\n\n".join(blocks) + "\n"
