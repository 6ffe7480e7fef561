"""Column schemas for network-flow CSV files.

A schema assigns every CSV column a role: predictive feature (numeric or
categorical), label (binary or multiclass), or drop. The UNSW-NB15 official
train/test split layout ships as the built-in default; any other layout can
be supplied as a plain-text schema file with one ``name,kind`` line per
column.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import SchemaError

KINDS = ("numeric", "categorical", "binary_label", "multiclass_label", "drop")


@dataclass(frozen=True)
class ColumnSchema:
    """Role of one CSV column."""

    name: str
    kind: str
    position: int

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")


def validate_schema(columns: list[ColumnSchema]) -> list[ColumnSchema]:
    """Check global schema invariants and return the schema unchanged."""
    if not columns:
        raise SchemaError("schema has no columns")
    names = [c.name for c in columns]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise SchemaError(f"duplicate column names: {', '.join(dupes)}")
    for want in ("binary_label", "multiclass_label"):
        n = sum(1 for c in columns if c.kind == want)
        if n != 1:
            raise SchemaError(f"schema must have exactly one {want} column, found {n}")
    for i, c in enumerate(columns):
        if c.position != i:
            raise SchemaError(f"column {c.name!r} has position {c.position}, expected {i}")
    return columns


def predictive_columns(columns: list[ColumnSchema]) -> list[ColumnSchema]:
    """Feature columns in schema order (labels and drops excluded)."""
    return [c for c in columns if c.kind in ("numeric", "categorical")]


def _make(names_kinds: list[tuple[str, str]]) -> list[ColumnSchema]:
    return validate_schema(
        [ColumnSchema(name, kind, i) for i, (name, kind) in enumerate(names_kinds)]
    )


# Layout of UNSW_NB15_training-set.csv / UNSW_NB15_testing-set.csv (45 columns).
# The row counter `id` is dropped; `proto`, `service`, `state` are the string
# protocol fields; everything else is numeric flow statistics.
_UNSW_CATEGORICAL = {"proto", "service", "state"}
_UNSW_COLUMNS = (
    "id", "dur", "proto", "service", "state", "spkts", "dpkts", "sbytes",
    "dbytes", "rate", "sttl", "dttl", "sload", "dload", "sloss", "dloss",
    "sinpkt", "dinpkt", "sjit", "djit", "swin", "stcpb", "dtcpb", "dwin",
    "tcprtt", "synack", "ackdat", "smean", "dmean", "trans_depth",
    "response_body_len", "ct_srv_src", "ct_state_ttl", "ct_dst_ltm",
    "ct_src_dport_ltm", "ct_dst_sport_ltm", "ct_dst_src_ltm", "is_ftp_login",
    "ct_ftp_cmd", "ct_flw_http_mthd", "ct_src_ltm", "ct_srv_dst",
    "is_sm_ips_ports", "attack_cat", "label",
)


def _unsw_kind(name: str) -> str:
    if name == "id":
        return "drop"
    if name == "label":
        return "binary_label"
    if name == "attack_cat":
        return "multiclass_label"
    if name in _UNSW_CATEGORICAL:
        return "categorical"
    return "numeric"


def unsw_nb15_schema() -> list[ColumnSchema]:
    """Built-in schema for the UNSW-NB15 official train/test split files."""
    return _make([(n, _unsw_kind(n)) for n in _UNSW_COLUMNS])


def load_schema_file(path: str | Path) -> list[ColumnSchema]:
    """Parse a ``name,kind`` schema file (one column per line, # comments)."""
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"schema file not found: {path}")
    pairs: list[tuple[str, str]] = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2 or not parts[0]:
            raise SchemaError(f"{path}:{lineno}: expected 'name,kind', got {raw!r}")
        if parts[1] not in KINDS:
            raise SchemaError(f"{path}:{lineno}: unknown kind {parts[1]!r}")
        pairs.append((parts[0], parts[1]))
    return _make(pairs)


def save_schema_file(columns: list[ColumnSchema], path: str | Path) -> None:
    """Write a schema in the same ``name,kind`` format ``load_schema_file`` reads."""
    lines = [f"{c.name},{c.kind}" for c in columns]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
