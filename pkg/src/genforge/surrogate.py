"""Performance oracles: an MLP regressor used as the common scorer, and an
ordinary least-squares model used inside the SBO loop."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import nn
from .data import N_FEATURES, Dataset, Standardizer, batches
from .nn import ShapeError, TrainingDivergedError


class RankDeficientError(np.linalg.LinAlgError):
    pass


def r2_score(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("R^2 is undefined for a constant truth vector")
    return 1.0 - float(np.sum((truth - pred) ** 2)) / ss_tot


def rmse(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.shape != truth.shape:
        raise ShapeError(f"{pred.shape[0]} predictions vs {truth.shape[0]} targets")
    if pred.size < 2:
        raise ValueError("need at least 2 points")
    return pred, truth


# -- MLP oracle --------------------------------------------------------------

@dataclass
class SurrogateConfig:
    hidden: tuple[int, ...] = (128, 128)
    epochs: int = 400
    learning_rate: float = 1e-3
    batch_size: int = 128
    seed: int = 0

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.epochs < 1 or self.batch_size < 1 or min(self.hidden, default=1) < 1:
            raise ValueError(f"invalid surrogate config {self}")


@dataclass(eq=False)
class MlpSurrogate:
    """Frozen regressor: raw design vectors in, predicted dB out."""

    network: nn.MultiLayerPerceptron
    standardizer: Standardizer
    train_rmse: float = float("nan")
    train_r2: float = float("nan")
    loss_trace: list[float] = field(default_factory=list)

    def predict(self, designs) -> np.ndarray:
        return predict(self, designs)


def train_mlp_surrogate(dataset: Dataset, standardizer: Standardizer,
                        config: SurrogateConfig | None = None) -> MlpSurrogate:
    config = config or SurrogateConfig()
    net = nn.init_network([N_FEATURES, *config.hidden, 1], seed=config.seed)
    x = standardizer.transform(dataset.X)
    y = standardizer.transform_target(dataset.y)[:, None]
    rng = np.random.default_rng(config.seed + 1)
    params = net.params()
    state = nn.AdamState.for_params(params, learning_rate=config.learning_rate)
    trace = []
    for epoch in range(config.epochs):
        total = 0.0
        for idx in batches(len(dataset), config.batch_size, rng):
            out, cache = nn.forward(net, x[idx])
            loss, grad = nn.mse_loss(out, y[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"surrogate loss became non-finite at epoch {epoch + 1}")
            nn.adam_step(params, nn.backward(net, cache, grad), state, net=net)
            total += loss * len(idx)
        trace.append(total / len(dataset))
    oracle = MlpSurrogate(net, standardizer, loss_trace=trace)
    fitted = predict(oracle, dataset.X)
    oracle.train_rmse = rmse(fitted, dataset.y)
    oracle.train_r2 = r2_score(fitted, dataset.y)
    return oracle


def predict(oracle: MlpSurrogate, designs) -> np.ndarray:
    """Standardise, evaluate, and map back to dB. Does not touch oracle state."""
    if oracle is None or oracle.network is None:
        raise ValueError("oracle is not trained")
    designs = np.atleast_2d(np.asarray(designs, dtype=np.float64))
    if designs.shape[1] != N_FEATURES:
        raise ShapeError(f"designs must have {N_FEATURES} columns, got {designs.shape}")
    out = nn.forward(oracle.network, oracle.standardizer.transform(designs))[0][:, 0]
    return oracle.standardizer.inverse_transform_target(out)


def save_surrogate(oracle: MlpSurrogate, path, config: SurrogateConfig | None = None) -> None:
    header = {
        "kind": "mlp-surrogate",
        "standardizer": oracle.standardizer.to_dict(),
        "train_rmse": oracle.train_rmse,
        "train_r2": oracle.train_r2,
        "config": asdict(config) if config is not None else None,
    }
    nn.save_network(oracle.network, path, header)


def load_surrogate(path) -> MlpSurrogate:
    net, header = nn.load_network(path)
    if header.get("kind") != "mlp-surrogate":
        raise ValueError(f"{path} is not a surrogate checkpoint")
    return MlpSurrogate(net, Standardizer.from_dict(header["standardizer"]),
                        header["train_rmse"], header["train_r2"])


# -- linear least squares ----------------------------------------------------

@dataclass
class LinearSurrogate:
    weights: np.ndarray
    intercept: float

    def predict(self, x) -> np.ndarray:
        return np.atleast_2d(np.asarray(x, dtype=np.float64)) @ self.weights + self.intercept


def fit_linear(x, y) -> LinearSurrogate:
    """Least-squares ``y ~ x @ w + b``. Raises :class:`RankDeficientError` unless ``[1, x]`` has full column rank."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] != y.shape[0]:
        raise ShapeError(f"{x.shape[0]} rows of x vs {y.shape[0]} targets")
    design = np.column_stack([np.ones(x.shape[0]), x])
    if x.shape[0] < design.shape[1]:
        raise RankDeficientError(f"{x.shape[0]} points cannot determine {design.shape[1]} coefficients")
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise RankDeficientError(f"design matrix has rank {rank} < {design.shape[1]}")
    return LinearSurrogate(coef[1:], float(coef[0]))
