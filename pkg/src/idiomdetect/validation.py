"""Small input validators shared by the estimator classes."""

from __future__ import annotations

import numpy as np

from .corpus import Label


def as_matrix(X, name: str, cols: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {X.shape}")
    if cols is not None and X.shape[1] != cols:
        raise ValueError(f"{name} must have {cols} columns, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def as_bool_vector(y, name: str, length: int | None = None) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"{name} must be a 1-D array, got shape {y.shape}")
    if length is not None and y.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got {y.shape[0]}")
    return y.astype(bool)


def as_binary_targets(y, name: str, length: int | None = None) -> np.ndarray:
    """Map labels to float targets with Idiomatic -> 1.0, Literal -> 0.0.

    Accepts Label enums, the strings "Idiomatic"/"Literal", or 0/1 values.
    """
    values = list(y)
    if length is not None and len(values) != length:
        raise ValueError(f"{name} must have length {length}, got {len(values)}")
    targets = np.empty(len(values), dtype=np.float64)
    for i, v in enumerate(values):
        if isinstance(v, Label):
            targets[i] = 1.0 if v is Label.IDIOMATIC else 0.0
        elif isinstance(v, str):
            targets[i] = 1.0 if Label(v) is Label.IDIOMATIC else 0.0
        elif v in (0, 1, 0.0, 1.0, False, True):
            targets[i] = float(v)
        else:
            raise ValueError(f"{name}[{i}] = {v!r} is not a recognizable binary label")
    return targets
