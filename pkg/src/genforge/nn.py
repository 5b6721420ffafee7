"""Small dense neural-network engine on numpy.

Networks are plain lists of :class:`DenseLayer`. ``forward`` returns the output
together with a :class:`ForwardCache`; ``backward`` consumes that cache and
returns exact chain-rule gradients for every weight and bias, plus the gradient
with respect to the network input (needed to push gradients through the
reparameterised latent sample of the CVAE).

Weights are stored ``(out_dim, in_dim)`` so a layer computes ``x @ W.T + b``.
Everything is float64.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

RELU = "relu"
IDENTITY = "identity"
ACTIVATIONS = (RELU, IDENTITY)

CHECKPOINT_FORMAT = "genforge-mlp"


class ShapeError(ValueError):
    """Raised when array shapes do not line up with a network or with each other."""


class StaleCacheError(RuntimeError):
    """Raised when ``backward`` is given a cache from another network or an older parameter state."""


class TrainingDivergedError(RuntimeError):
    """Raised when a training loss becomes non-finite."""


@dataclass
class DenseLayer:
    weights: np.ndarray
    biases: np.ndarray
    activation: str = RELU

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ShapeError(f"weights must be 2-D, got shape {self.weights.shape}")
        if self.biases.shape != (self.weights.shape[0],):
            raise ShapeError(
                f"biases shape {self.biases.shape} does not match weights {self.weights.shape}"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


class MultiLayerPerceptron:
    """Ordered stack of dense layers.

    ``version`` is bumped whenever parameters are updated through
    :func:`adam_step`, so that caches produced before an update are rejected.
    """

    def __init__(self, layers: Sequence[DenseLayer]):
        if not layers:
            raise ValueError("a network needs at least one layer")
        for i in range(len(layers) - 1):
            if layers[i].out_dim != layers[i + 1].in_dim:
                raise ShapeError(
                    f"layer {i} out_dim {layers[i].out_dim} != layer {i + 1} in_dim {layers[i + 1].in_dim}"
                )
        self.layers = list(layers)
        self.version = 0

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def dims(self) -> list[int]:
        return [self.in_dim] + [layer.out_dim for layer in self.layers]

    @property
    def activations(self) -> list[str]:
        return [layer.activation for layer in self.layers]

    def params(self) -> list[np.ndarray]:
        """Parameter arrays in the order ``[W0, b0, W1, b1, ...]`` (live references)."""
        out = []
        for layer in self.layers:
            out.extend([layer.weights, layer.biases])
        return out

    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def copy(self) -> "MultiLayerPerceptron":
        return MultiLayerPerceptron(
            [DenseLayer(l.weights.copy(), l.biases.copy(), l.activation) for l in self.layers]
        )

    def __call__(self, batch) -> np.ndarray:
        return forward(self, batch)[0]

    def __repr__(self):
        return f"MultiLayerPerceptron(dims={self.dims}, activations={self.activations})"


@dataclass
class ForwardCache:
    net: MultiLayerPerceptron
    version: int
    inputs: list[np.ndarray]  # input to each layer
    pre_activations: list[np.ndarray]


@dataclass
class GradientBundle:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input: np.ndarray | None = None

    def as_list(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def flat(self) -> np.ndarray:
        return np.concatenate([g.ravel() for g in self.as_list()])


def _as_batch(batch) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch[None, :]
    if batch.ndim != 2:
        raise ShapeError(f"expected a 2-D batch, got shape {batch.shape}")
    return batch


def forward(net: MultiLayerPerceptron, batch) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate ``net`` on a ``(n, in_dim)`` batch. Does not mutate ``net``."""
    h = _as_batch(batch)
    inputs, pre = [], []
    for i, layer in enumerate(net.layers):
        if h.shape[1] != layer.in_dim:
            raise ShapeError(
                f"layer {i}: expected input width {layer.in_dim}, got {h.shape[1]}"
            )
        inputs.append(h)
        a = h @ layer.weights.T + layer.biases
        pre.append(a)
        h = np.maximum(a, 0.0) if layer.activation == RELU else a
    return h, ForwardCache(net, net.version, inputs, pre)


def backward(net: MultiLayerPerceptron, cache: ForwardCache, output_gradient) -> GradientBundle:
    """Backpropagate ``dL/d(output)`` through ``net``.

    Returns gradients for every layer's weights and biases and for the batch
    that was fed to ``forward``.
    """
    if cache.net is not net or cache.version != net.version:
        raise StaleCacheError("cache does not belong to the current state of this network")
    g = np.asarray(output_gradient, dtype=np.float64)
    if g.ndim == 1:
        g = g[None, :]
    expected = cache.pre_activations[-1].shape
    if g.shape != expected:
        raise ShapeError(f"output gradient shape {g.shape} != network output shape {expected}")

    n_layers = len(net.layers)
    dw: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    db: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    for i in reversed(range(n_layers)):
        layer = net.layers[i]
        if layer.activation == RELU:
            g = g * (cache.pre_activations[i] > 0.0)
        dw[i] = g.T @ cache.inputs[i]
        db[i] = g.sum(axis=0)
        g = g @ layer.weights
    return GradientBundle(dw, db, g)


def mse_loss(pred, target) -> tuple[float, np.ndarray]:
    """Mean squared error over all elements and its gradient with respect to ``pred``."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"pred shape {pred.shape} != target shape {target.shape}")
    diff = pred - target
    return float(np.mean(diff**2)), 2.0 * diff / diff.size


def init_network(layer_dims: Sequence[int], activations: Sequence[str] | str | None = None,
                 seed: int | np.random.Generator = 0) -> MultiLayerPerceptron:
    """He-normal weights (std ``sqrt(2/in_dim)``), zero biases.

    ``activations`` defaults to ReLU on every hidden layer and identity on the
    output layer.
    """
    dims = list(layer_dims)
    if len(dims) < 2:
        raise ValueError("layer_dims needs at least an input and an output width")
    if any(int(d) < 1 for d in dims):
        raise ValueError(f"layer widths must be positive, got {dims}")
    n_layers = len(dims) - 1
    if activations is None:
        activations = [RELU] * (n_layers - 1) + [IDENTITY]
    elif isinstance(activations, str):
        activations = [activations] * n_layers
    if len(activations) != n_layers:
        raise ValueError(f"{n_layers} layers but {len(activations)} activations")
    rng = np.random.default_rng(seed)
    layers = []
    for d_in, d_out, act in zip(dims[:-1], dims[1:], activations):
        w = rng.standard_normal((d_out, d_in)) * np.sqrt(2.0 / d_in)
        layers.append(DenseLayer(w, np.zeros(d_out), act))
    return MultiLayerPerceptron(layers)


@dataclass
class AdamState:
    first_moments: list[np.ndarray]
    second_moments: list[np.ndarray]
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], learning_rate: float = 1e-3, **kwargs) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params],
                   learning_rate=learning_rate, **kwargs)


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray] | GradientBundle,
              state: AdamState, net: MultiLayerPerceptron | Sequence[MultiLayerPerceptron] | None = None):
    """One bias-corrected Adam update, applied in place.

    Pass the owning network(s) as ``net`` so their ``version`` is bumped and
    old forward caches become unusable.
    """
    if isinstance(grads, GradientBundle):
        grads = grads.as_list()
    params, grads = list(params), list(grads)
    if len(params) != len(grads) or len(params) != len(state.first_moments):
        raise ShapeError(
            f"{len(params)} params, {len(grads)} grads, {len(state.first_moments)} moment slots"
        )
    for i, (p, g, m) in enumerate(zip(params, grads, state.first_moments)):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"parameter {i}: shape {p.shape}, grad {g.shape}, moment {m.shape}")

    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for p, g, m, v in zip(params, grads, state.first_moments, state.second_moments):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.epsilon)

    if net is not None:
        for n in ([net] if isinstance(net, MultiLayerPerceptron) else net):
            n.version += 1
    return params, state


# -- checkpoints -------------------------------------------------------------

def network_to_dict(net: MultiLayerPerceptron) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": 1,
        "dims": net.dims,
        "layers": [
            {
                "in_dim": layer.in_dim,
                "out_dim": layer.out_dim,
                "activation": layer.activation,
                # row-major (out_dim, in_dim); json writes the shortest round-trip repr
                "weights": layer.weights.ravel().tolist(),
                "biases": layer.biases.tolist(),
            }
            for layer in net.layers
        ],
    }


def network_from_dict(data: dict) -> MultiLayerPerceptron:
    if data.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"not a {CHECKPOINT_FORMAT} checkpoint: format={data.get('format')!r}")
    layers = []
    for i, entry in enumerate(data["layers"]):
        w = np.asarray(entry["weights"], dtype=np.float64)
        if w.size != entry["in_dim"] * entry["out_dim"]:
            raise ShapeError(f"layer {i}: {w.size} weights for declared shape "
                             f"({entry['out_dim']}, {entry['in_dim']})")
        layers.append(DenseLayer(w.reshape(entry["out_dim"], entry["in_dim"]),
                                 np.asarray(entry["biases"], dtype=np.float64), entry["activation"]))
    return MultiLayerPerceptron(layers)


def save_network(net: MultiLayerPerceptron, path, header: dict | None = None) -> None:
    payload = dict(header or {})
    payload["network"] = network_to_dict(net)
    Path(path).write_text(json.dumps(payload, indent=1))


def load_network(path) -> tuple[MultiLayerPerceptron, dict]:
    """Read a checkpoint written by :func:`save_network`; returns ``(net, header)``."""
    payload = json.loads(Path(path).read_text())
    net = network_from_dict(payload.pop("network"))
    return net, payload
