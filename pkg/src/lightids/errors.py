"""Exception hierarchy shared across the toolkit.

``DataError`` covers everything caused by bad input (files, schemas, model
blobs, invalid configuration values); anything else escaping the pipeline is
treated as an internal error by the CLI. Pipeline stages attach a ``stage``
attribute to exceptions passing through them so operators can tell where a
run died.
"""

from __future__ import annotations


class DataError(Exception):
    """Invalid input data, file, schema, or configuration value."""

    stage: str | None = None


class SchemaError(DataError):
    """Column schema is malformed or does not match a CSV header."""


class ConfigError(DataError):
    """Experiment configuration file or value is invalid."""


class ModelFormatError(DataError):
    """Serialized model blob cannot be decoded."""


class BadMagicError(ModelFormatError):
    """Blob does not start with the expected magic bytes."""


class UnsupportedVersionError(ModelFormatError):
    """Blob declares a format version this build cannot read."""


class TruncatedPayloadError(ModelFormatError):
    """Blob ends before its declared payload is complete."""


def annotate_stage(exc: BaseException, stage: str) -> None:
    """Tag ``exc`` with the pipeline stage it escaped from (first tag wins)."""
    if getattr(exc, "stage", None) is None:
        try:
            exc.stage = stage  # type: ignore[attr-defined]
        except AttributeError:
            pass
