"""Airfoil self-noise data handling: loading, standardisation, bounds, batching."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .nn import ShapeError

FEATURE_NAMES = (
    "frequency_hz",
    "angle_of_attack_deg",
    "chord_length_m",
    "free_stream_velocity_m_s",
    "suction_side_displacement_thickness_m",
)
TARGET_NAME = "scaled_sound_pressure_level_db"
N_FEATURES = len(FEATURE_NAMES)
CANONICAL_RECORD_COUNT = 1503

FORMATS = ("whitespace", "csv")


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class DesignRecord:
    x: tuple[float, ...]
    y: float

    def __post_init__(self):
        if len(self.x) != N_FEATURES:
            raise DatasetError(f"a design record has {N_FEATURES} features, got {len(self.x)}")
        if not (np.all(np.isfinite(self.x)) and np.isfinite(self.y)):
            raise DatasetError(f"non-finite value in record {self}")


@dataclass(frozen=True)
class Dataset:
    """Design matrix ``X`` (raw units, ``n x 5``) and target ``y`` in dB."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES
    source: str = ""

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if X.ndim != 2 or X.shape[1] != N_FEATURES:
            raise DatasetError(f"X must be (n, {N_FEATURES}), got {X.shape}")
        if X.shape[0] == 0:
            raise DatasetError("dataset is empty")
        if y.shape[0] != X.shape[0]:
            raise DatasetError(f"{X.shape[0]} feature rows but {y.shape[0]} targets")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise DatasetError("dataset contains non-finite values")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.X.shape[0]

    @property
    def records(self) -> list[DesignRecord]:
        return [DesignRecord(tuple(row), float(t)) for row, t in zip(self.X.tolist(), self.y.tolist())]

    @property
    def table(self) -> np.ndarray:
        """``n x 6`` array: features then target."""
        return np.column_stack([self.X, self.y])

    @classmethod
    def from_records(cls, records: Sequence[DesignRecord], source: str = "") -> "Dataset":
        return cls(np.array([r.x for r in records], dtype=np.float64),
                   np.array([r.y for r in records], dtype=np.float64), source=source)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.feature_names, self.source)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_dataset(path, format: str = "whitespace") -> Dataset:
    """Read a 6-column table (5 features then the target).

    ``format="whitespace"`` is the tab/space-delimited NASA distribution;
    ``format="csv"`` accepts comma-delimited files, optionally with a header
    row made entirely of non-numeric labels.
    """
    path = Path(path)
    if format not in FORMATS:
        raise DatasetError(f"unknown dataset format {format!r}; expected one of {FORMATS}")
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")

    with path.open(newline="") as fh:
        if format == "csv":
            rows = [(i, [c.strip() for c in row]) for i, row in enumerate(csv.reader(fh), start=1)]
        else:
            rows = [(i, line.split()) for i, line in enumerate(fh, start=1)]
    rows = [(i, cells) for i, cells in rows if cells and any(cells)]
    if format == "csv" and rows and not any(_is_number(c) for c in rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise DatasetError(f"{path}: no data rows")

    values = np.empty((len(rows), N_FEATURES + 1))
    for k, (lineno, cells) in enumerate(rows):
        if len(cells) != N_FEATURES + 1:
            raise DatasetError(f"{path}: row {lineno} has {len(cells)} columns, expected {N_FEATURES + 1}")
        for j, cell in enumerate(cells):
            try:
                values[k, j] = float(cell)
            except ValueError:
                raise DatasetError(f"{path}: row {lineno}, column {j + 1}: non-numeric cell {cell!r}") from None
    if not np.isfinite(values).all():
        bad = int(np.argwhere(~np.isfinite(values))[0, 0])
        raise DatasetError(f"{path}: row {rows[bad][0]} contains a non-finite value")
    return Dataset(values[:, :N_FEATURES], values[:, N_FEATURES], source=str(path))


def save_dataset(ds: Dataset, path, format: str = "whitespace") -> None:
    sep = "," if format == "csv" else "\t"
    with Path(path).open("w") as fh:
        for row in ds.table:
            fh.write(sep.join(repr(float(v)) for v in row) + "\n")


# -- standardisation ---------------------------------------------------------

@dataclass(frozen=True)
class Standardizer:
    """Per-column affine scaling for the 5 features followed by the target."""

    means: np.ndarray
    stds: np.ndarray
    columns: tuple[str, ...] = field(default=FEATURE_NAMES + (TARGET_NAME,))

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        stds = np.asarray(self.stds, dtype=np.float64)
        if means.shape != (N_FEATURES + 1,) or stds.shape != (N_FEATURES + 1,):
            raise ShapeError(f"standardizer needs {N_FEATURES + 1} means and stds")
        if not (stds > 0).all():
            raise DatasetError(f"all standard deviations must be positive, got {stds}")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)

    def _cols(self, values: np.ndarray) -> slice:
        width = values.shape[-1] if values.ndim else 0
        if width == N_FEATURES + 1:
            return slice(None)
        if width == N_FEATURES:
            return slice(0, N_FEATURES)
        raise ShapeError(f"expected {N_FEATURES} or {N_FEATURES + 1} columns, got shape {values.shape}")

    def transform(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=np.float64)
        cols = self._cols(v)
        return (v - self.means[cols]) / self.stds[cols]

    def inverse_transform(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=np.float64)
        cols = self._cols(v)
        return v * self.stds[cols] + self.means[cols]

    def transform_target(self, y):
        return (np.asarray(y, dtype=np.float64) - self.means[-1]) / self.stds[-1]

    def inverse_transform_target(self, y):
        return np.asarray(y, dtype=np.float64) * self.stds[-1] + self.means[-1]

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "means": self.means.tolist(), "stds": self.stds.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.array(d["means"]), np.array(d["stds"]), tuple(d.get("columns", cls.columns)))


def fit_standardizer(ds: Dataset) -> Standardizer:
    """Column means and population standard deviations of features and target."""
    if len(ds) < 2:
        raise DatasetError("need at least 2 records to fit a standardizer")
    table = ds.table
    means = table.mean(axis=0)
    stds = table.std(axis=0)
    names = ds.feature_names + (TARGET_NAME,)
    for j, s in enumerate(stds):
        # relative test: a column of identical values can still give s ~ 1e-17 * |mean|
        if s <= 1e-12 * max(1.0, abs(means[j])):
            raise DatasetError(f"column {j} ({names[j]}) is constant; cannot standardize")
    return Standardizer(means, stds, names)


# -- bounds, percentiles, batches -------------------------------------------

@dataclass(frozen=True)
class FeatureBounds:
    x_min: np.ndarray
    x_max: np.ndarray
    delta: np.ndarray

    @property
    def lower(self) -> np.ndarray:
        return self.x_min - self.delta

    @property
    def upper(self) -> np.ndarray:
        return self.x_max + self.delta

    def to_dict(self) -> dict:
        return {"x_min": self.x_min.tolist(), "x_max": self.x_max.tolist(), "delta": self.delta.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureBounds":
        return cls(np.array(d["x_min"], dtype=float), np.array(d["x_max"], dtype=float),
                   np.array(d["delta"], dtype=float))


def compute_bounds(ds: Dataset, margin_fraction: float = 0.05) -> FeatureBounds:
    """Raw-unit feature ranges widened by ``margin_fraction`` of the range on each side."""
    if margin_fraction < 0:
        raise ValueError("margin_fraction must be non-negative")
    x_min = ds.X.min(axis=0)
    x_max = ds.X.max(axis=0)
    return FeatureBounds(x_min, x_max, margin_fraction * (x_max - x_min))


def percentile(values, p: float) -> float:
    """Linear-interpolation percentile (numpy's default ``linear`` method)."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("percentile of an empty sequence")
    if not 0 <= p <= 100:
        raise ValueError(f"percentile must lie in [0, 100], got {p}")
    return float(np.percentile(values, p, method="linear"))


def batches(data: Dataset | int, batch_size: int,
            seed: int | np.random.Generator = 0) -> Iterator[np.ndarray]:
    """Yield shuffled row-index batches covering each record exactly once.

    The last batch keeps the remainder. An integer seed always gives the same
    order; pass a ``Generator`` to draw a fresh permutation per epoch.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    n = data if isinstance(data, (int, np.integer)) else len(data)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]
