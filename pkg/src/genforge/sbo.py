"""Greedy linear-surrogate optimisation over the finite pool of dataset designs.

The "true" objective of a design is its recorded dataset value, so the loop is
a tabular benchmark: fit least squares on what has been evaluated, evaluate the
unevaluated pool point with the lowest predicted level, repeat.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, Standardizer, fit_standardizer
from .surrogate import MlpSurrogate, fit_linear, predict


@dataclass
class SboConfig:
    initial_sample_count: int = 20
    evaluation_budget: int = 70
    seed: int = 0

    def __post_init__(self):
        if self.initial_sample_count < 6:
            raise ValueError("initial_sample_count must be >= 6 to fit a 5-feature linear model")
        if self.evaluation_budget < self.initial_sample_count:
            raise ValueError("evaluation_budget must be >= initial_sample_count")


@dataclass
class SboResult:
    best_design: np.ndarray
    best_true_value: float
    best_index: int
    evaluated_indices: list[int] = field(default_factory=list)
    evaluated_values: list[float] = field(default_factory=list)
    evaluated_designs: np.ndarray | None = None

    @property
    def trace(self) -> list[tuple[np.ndarray, float]]:
        """``(design, true value)`` in evaluation order."""
        return list(zip(self.evaluated_designs, self.evaluated_values))

    def incumbent_trace(self) -> np.ndarray:
        return np.minimum.accumulate(np.asarray(self.evaluated_values))

    def to_dict(self) -> dict:
        return {
            "best_design": self.best_design.tolist(),
            "best_true_value": self.best_true_value,
            "best_index": self.best_index,
            "evaluated_indices": list(self.evaluated_indices),
            "evaluated_values": list(self.evaluated_values),
            "evaluated_designs": np.asarray(self.evaluated_designs).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SboResult":
        return cls(np.asarray(d["best_design"], dtype=float), float(d["best_true_value"]),
                   int(d["best_index"]), list(d["evaluated_indices"]), list(d["evaluated_values"]),
                   np.asarray(d["evaluated_designs"], dtype=float))


def run_sbo(dataset: Dataset, config: SboConfig | None = None,
            standardizer: Standardizer | None = None) -> SboResult:
    config = config or SboConfig()
    n = len(dataset)
    if config.evaluation_budget > n:
        raise ValueError(f"budget {config.evaluation_budget} exceeds the {n} available designs")
    standardizer = standardizer or fit_standardizer(dataset)
    x_std = standardizer.transform(dataset.X)
    y_std = standardizer.transform_target(dataset.y)

    rng = np.random.default_rng(config.seed)
    evaluated = [int(i) for i in rng.choice(n, size=config.initial_sample_count, replace=False)]
    pending = np.ones(n, dtype=bool)
    pending[evaluated] = False
    while len(evaluated) < config.evaluation_budget:
        model = fit_linear(x_std[evaluated], y_std[evaluated])
        candidates = np.flatnonzero(pending)
        # argmin returns the first minimum, i.e. the lowest dataset index on ties
        pick = int(candidates[np.argmin(model.predict(x_std[candidates]))])
        evaluated.append(pick)
        pending[pick] = False

    values = [float(dataset.y[i]) for i in evaluated]
    k = int(np.argmin(values))
    return SboResult(dataset.X[evaluated[k]].copy(), values[k], evaluated[k], evaluated, values,
                     dataset.X[evaluated].copy())


def baseline_predicted_score(oracle: MlpSurrogate, result: SboResult) -> float:
    return float(predict(oracle, result.best_design)[0])
