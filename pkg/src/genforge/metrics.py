"""Portfolio assessment: validity, diversity, performance statistics, histogram."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .data import FeatureBounds


@dataclass
class ValidityReport:
    flags: np.ndarray  # bool per design
    violations: list[list[int]]  # violated feature indices per design
    valid_count: int
    validity_rate: float

    @property
    def total(self) -> int:
        return len(self.flags)

    def violation_counts(self, n_features: int = 5) -> list[int]:
        counts = [0] * n_features
        for v in self.violations:
            for j in v:
                counts[j] += 1
        return counts


def check_validity(designs, bounds: FeatureBounds) -> ValidityReport:
    """Closed-interval membership test of every feature in ``[x_min - delta, x_max + delta]``."""
    designs = np.atleast_2d(np.asarray(designs, dtype=np.float64))
    if designs.shape[1] != bounds.x_min.shape[0]:
        raise ValueError(f"designs have {designs.shape[1]} features, bounds {bounds.x_min.shape[0]}")
    outside = (designs < bounds.lower) | (designs > bounds.upper)
    violations = [np.flatnonzero(row).tolist() for row in outside]
    flags = ~outside.any(axis=1)
    valid = int(flags.sum())
    return ValidityReport(flags, violations, valid, valid / len(designs) if len(designs) else 0.0)


@dataclass
class DiversityScore:
    value: float
    pair_count: int


def diversity(designs) -> DiversityScore:
    """Mean pairwise Euclidean distance (raw units, so dominated by the largest-scale feature)."""
    designs = np.atleast_2d(np.asarray(designs, dtype=np.float64))
    n = designs.shape[0]
    if n < 2:
        raise ValueError(f"diversity needs at least 2 designs, got {n}")
    return DiversityScore(float(pdist(designs).mean()), n * (n - 1) // 2)


@dataclass
class PerformanceStats:
    mean: float
    std: float
    min: float
    max: float
    threshold: float
    count_below_threshold: int
    fraction_below_threshold: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def performance_stats(predicted_db, threshold_db: float) -> PerformanceStats:
    v = np.asarray(predicted_db, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("no predictions to summarise")
    below = int(np.count_nonzero(v < threshold_db))
    return PerformanceStats(float(v.mean()), float(v.std()), float(v.min()), float(v.max()),
                            float(threshold_db), below, below / v.size, int(v.size))


@dataclass
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    baseline_marker: float

    def to_dict(self) -> dict:
        return {"bin_edges": self.bin_edges.tolist(), "counts": self.counts.tolist(),
                "baseline_marker": self.baseline_marker}


def build_histogram(values, bin_count: int = 30, baseline_marker: float = float("nan")) -> Histogram:
    """Equal-width bins over ``[min, max]``; the last bin includes its right edge."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("cannot histogram an empty sequence")
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    counts, edges = np.histogram(v, bins=bin_count)
    return Histogram(edges, counts.astype(int), float(baseline_marker))
