"""Per-column min-max scaling of the feature matrix.

``x' = (x - min) / (max - min)`` per column, fitted on the full matrix.
A constant column maps to 0 everywhere, and transforming out-of-range
values (scoring held-out data) clamps into [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .features import FEATURE_NAMES


@dataclass
class MinMaxScaler:
    """Exact per-column extrema recorded by :func:`fit`."""

    mins: np.ndarray  # (d,)
    maxs: np.ndarray  # (d,)

    @property
    def n_columns(self) -> int:
        return int(self.mins.shape[0])


def fit(matrix: np.ndarray) -> MinMaxScaler:
    values = np.asarray(matrix, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] < 1:
        raise ValidationError("cannot fit a min-max scaler on an empty matrix")
    return MinMaxScaler(mins=values.min(axis=0), maxs=values.max(axis=0))


def transform(scaler: MinMaxScaler, matrix: np.ndarray) -> np.ndarray:
    values = np.asarray(matrix, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != scaler.n_columns:
        raise ValidationError(
            f"matrix has {values.shape[1] if values.ndim == 2 else '?'} columns, "
            f"scaler expects {scaler.n_columns}"
        )
    span = scaler.maxs - scaler.mins
    out = np.zeros_like(values)
    nonconst = span > 0
    out[:, nonconst] = (values[:, nonconst] - scaler.mins[nonconst]) / span[nonconst]
    np.clip(out, 0.0, 1.0, out=out)
    return out


def write_scaler_json(scaler: MinMaxScaler, path, names=FEATURE_NAMES) -> None:
    """Exact decimal round-trip: floats serialize via repr."""
    cols = [
        {"name": names[i], "min": float(scaler.mins[i]), "max": float(scaler.maxs[i])}
        for i in range(scaler.n_columns)
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"columns": cols}, fh, indent=2)
        fh.write("\n")


def read_scaler_json(path) -> MinMaxScaler:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    cols = data["columns"]
    mins = np.array([c["min"] for c in cols], dtype=np.float64)
    maxs = np.array([c["max"] for c in cols], dtype=np.float64)
    if np.any(maxs < mins):
        raise ValidationError(f"{path}: scaler has max < min")
    return MinMaxScaler(mins=mins, maxs=maxs)
