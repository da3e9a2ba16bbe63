"""Exception hierarchy shared across the toolkit.

Each class maps to a CLI exit code: configuration and data problems exit 2,
inference contract violations exit 3, numeric failures exit 4.
"""

from __future__ import annotations


class IdiomDetectError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 2


class SchemaError(IdiomDetectError):
    """A corpus file does not match the declared column schema."""

    exit_code = 2


class DataError(IdiomDetectError):
    """A corpus row violates a data invariant (bad label, duplicate id, ...)."""

    exit_code = 2


class FormatError(IdiomDetectError):
    """An embedding table or model file is malformed."""

    exit_code = 2


class ConfigError(IdiomDetectError):
    """A run configuration is missing, inconsistent, or references absent paths."""

    exit_code = 2


class EmbeddingLookupError(IdiomDetectError):
    """An embedding lookup key is absent from the table."""

    exit_code = 2

    def __init__(self, split: str, sample_id: str):
        self.split = split
        self.sample_id = sample_id
        super().__init__(f"no embedding for sample {sample_id!r} in split {split!r}")


class InferenceError(IdiomDetectError):
    """An inference-time contract is broken (empty or mismatched support set)."""

    exit_code = 3


class NumericError(IdiomDetectError):
    """A non-finite value appeared where the math requires finite numbers."""

    exit_code = 4
