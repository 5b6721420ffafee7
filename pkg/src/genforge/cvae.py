"""Conditional variational autoencoder over standardised design vectors.

The encoder sees ``[x, c]`` and emits ``[mu, log_var]``; the decoder sees
``[z, c]`` and emits the reconstructed design mean. Training minimises

    MSE(decoder(z, c), x) + beta * mean_rows(KL(N(mu, exp(log_var)) || N(0, I)))

with one reparameterised sample ``z = mu + exp(log_var / 2) * eps`` per row.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .data import N_FEATURES, Dataset, Standardizer, batches
from .nn import ShapeError, TrainingDivergedError

log = logging.getLogger(__name__)

LOG_VAR_CLAMP = 10.0


@dataclass
class CvaeConfig:
    input_dim: int = N_FEATURES
    latent_dim: int = 8
    condition_dim: int = 1
    hidden: tuple[int, ...] = (128, 128)
    beta: float = 1.0
    epochs: int = 400
    learning_rate: float = 1e-3
    batch_size: int = 128
    seed: int = 0

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        dims = (self.input_dim, self.latent_dim, self.condition_dim, self.batch_size) + self.hidden
        if min(dims) < 1:
            raise ValueError(f"all dimensions must be positive: {self}")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")


@dataclass
class CvaeModel:
    encoder: nn.MultiLayerPerceptron
    decoder: nn.MultiLayerPerceptron
    config: CvaeConfig
    epochs_trained: int = 0
    loss_trace: list[float] = field(default_factory=list)

    def __post_init__(self):
        c = self.config
        if self.encoder.in_dim != c.input_dim + c.condition_dim or self.encoder.out_dim != 2 * c.latent_dim:
            raise ShapeError(f"encoder dims {self.encoder.dims} do not fit {c}")
        if self.decoder.in_dim != c.latent_dim + c.condition_dim or self.decoder.out_dim != c.input_dim:
            raise ShapeError(f"decoder dims {self.decoder.dims} do not fit {c}")

    @property
    def latent_dim(self) -> int:
        return self.config.latent_dim

    def params(self) -> list[np.ndarray]:
        return self.encoder.params() + self.decoder.params()


def build_model(config: CvaeConfig) -> CvaeModel:
    rng = np.random.default_rng(config.seed)
    c = config
    enc = nn.init_network([c.input_dim + c.condition_dim, *c.hidden, 2 * c.latent_dim], seed=rng)
    dec = nn.init_network([c.latent_dim + c.condition_dim, *c.hidden, c.input_dim], seed=rng)
    return CvaeModel(enc, dec, config)


def _condition(c, n: int, width: int) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    if c.ndim == 0:
        c = np.full((n, width), float(c))
    elif c.ndim == 1:
        c = c[:, None] if width == 1 or c.shape[0] != width else np.broadcast_to(c, (n, width))
    if c.shape != (n, width):
        raise ShapeError(f"condition must be ({n}, {width}), got {c.shape}")
    return c


def encode(model: CvaeModel, x_std, c_std) -> tuple[np.ndarray, np.ndarray]:
    """Posterior parameters ``(mu, log_var)``; ``log_var`` is clamped to [-10, 10]."""
    mu, log_var, _, _ = _encode(model, x_std, c_std)
    return mu, log_var


def _encode(model, x_std, c_std):
    x = np.atleast_2d(np.asarray(x_std, dtype=np.float64))
    if x.shape[1] != model.config.input_dim:
        raise ShapeError(f"x must have {model.config.input_dim} columns, got {x.shape}")
    c = _condition(c_std, x.shape[0], model.config.condition_dim)
    out, cache = nn.forward(model.encoder, np.hstack([x, c]))
    d = model.latent_dim
    raw_log_var = out[:, d:]
    return out[:, :d], np.clip(raw_log_var, -LOG_VAR_CLAMP, LOG_VAR_CLAMP), raw_log_var, cache


def decode(model: CvaeModel, z, c_std) -> np.ndarray:
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    if z.shape[1] != model.latent_dim:
        raise ShapeError(f"z must have {model.latent_dim} columns, got {z.shape}")
    c = _condition(c_std, z.shape[0], model.config.condition_dim)
    return nn.forward(model.decoder, np.hstack([z, c]))[0]


@dataclass
class LatentSample:
    mu: np.ndarray
    log_var: np.ndarray
    epsilon: np.ndarray
    z: np.ndarray


def reparameterize(mu, log_var, rng: np.random.Generator | int | None = None,
                   epsilon=None) -> LatentSample:
    """Draw ``z = mu + exp(log_var / 2) * eps``; ``epsilon`` may be supplied to freeze the noise."""
    mu = np.asarray(mu, dtype=np.float64)
    log_var = np.asarray(log_var, dtype=np.float64)
    if mu.shape != log_var.shape:
        raise ShapeError(f"mu {mu.shape} and log_var {log_var.shape} differ")
    if epsilon is None:
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        epsilon = rng.standard_normal(mu.shape)
    epsilon = np.asarray(epsilon, dtype=np.float64)
    if epsilon.shape != mu.shape:
        raise ShapeError(f"epsilon {epsilon.shape} does not match mu {mu.shape}")
    return LatentSample(mu, log_var, epsilon, mu + np.exp(0.5 * log_var) * epsilon)


def kl_divergence_diag_gaussian(mu, log_var) -> np.ndarray:
    """KL(N(mu, diag(exp(log_var))) || N(0, I)) for each row."""
    mu = np.asarray(mu, dtype=np.float64)
    log_var = np.asarray(log_var, dtype=np.float64)
    if mu.shape != log_var.shape:
        raise ShapeError(f"mu {mu.shape} and log_var {log_var.shape} differ")
    # expm1(lv) - lv is the cancellation-free form of exp(lv) - 1 - lv
    return 0.5 * np.sum(mu**2 + np.expm1(log_var) - log_var, axis=-1)


@dataclass
class ElboBreakdown:
    reconstruction_loss: float
    kl_divergence: float
    total: float
    beta: float


@dataclass
class ElboGradients:
    encoder: nn.GradientBundle
    decoder: nn.GradientBundle

    def as_list(self) -> list[np.ndarray]:
        return self.encoder.as_list() + self.decoder.as_list()


def elbo_loss(model: CvaeModel, x_std, c_std, beta: float | None = None,
              rng: np.random.Generator | int | None = None, epsilon=None
              ) -> tuple[ElboBreakdown, ElboGradients]:
    """Negative ELBO of a batch and its exact gradient for every encoder and decoder parameter."""
    beta = model.config.beta if beta is None else beta
    x = np.atleast_2d(np.asarray(x_std, dtype=np.float64))
    n = x.shape[0]
    mu, log_var, raw_log_var, enc_cache = _encode(model, x, c_std)
    sample = reparameterize(mu, log_var, rng, epsilon)
    c = _condition(c_std, n, model.config.condition_dim)
    x_hat, dec_cache = nn.forward(model.decoder, np.hstack([sample.z, c]))

    recon, d_xhat = nn.mse_loss(x_hat, x)
    kl_rows = kl_divergence_diag_gaussian(mu, log_var)
    kl = float(kl_rows.mean())
    total = recon + beta * kl
    if not np.isfinite(total):
        raise TrainingDivergedError(f"non-finite loss (reconstruction={recon}, kl={kl})")

    dec_grads = nn.backward(model.decoder, dec_cache, d_xhat)
    d = model.latent_dim
    d_z = dec_grads.input[:, :d]
    sigma = np.exp(0.5 * log_var)
    d_mu = d_z + beta * mu / n
    d_log_var = d_z * sample.epsilon * 0.5 * sigma + beta * 0.5 * np.expm1(log_var) / n
    d_log_var = d_log_var * (np.abs(raw_log_var) <= LOG_VAR_CLAMP)
    enc_grads = nn.backward(model.encoder, enc_cache, np.hstack([d_mu, d_log_var]))

    return ElboBreakdown(recon, kl, total, beta), ElboGradients(enc_grads, dec_grads)


def train(model: CvaeModel, dataset: Dataset, standardizer: Standardizer,
          config: CvaeConfig | None = None) -> CvaeModel:
    """Full-batch-sequence Adam training; appends the size-weighted mean loss of each epoch to ``loss_trace``."""
    config = config or model.config
    x_all = standardizer.transform(dataset.X)
    c_all = standardizer.transform_target(dataset.y)[:, None]
    rng = np.random.default_rng(config.seed + 1)
    params = model.params()
    state = nn.AdamState.for_params(params, learning_rate=config.learning_rate)
    nets = (model.encoder, model.decoder)
    for epoch in range(config.epochs):
        total, count = 0.0, 0
        for b, idx in enumerate(batches(len(dataset), config.batch_size, rng)):
            try:
                parts, grads = elbo_loss(model, x_all[idx], c_all[idx], config.beta, rng)
            except TrainingDivergedError as exc:
                raise TrainingDivergedError(f"epoch {epoch + 1}, batch {b + 1}: {exc}") from None
            nn.adam_step(params, grads.as_list(), state, net=nets)
            total += parts.total * len(idx)
            count += len(idx)
        model.loss_trace.append(total / count)
        model.epochs_trained += 1
        if (epoch + 1) % 50 == 0:
            log.debug("cvae epoch %d loss %.5f", epoch + 1, model.loss_trace[-1])
    return model


def generate(model: CvaeModel, standardizer: Standardizer, c_target_raw: float, n: int,
             rng: np.random.Generator | int = 0) -> np.ndarray:
    """Decode ``n`` prior samples at a fixed target condition; returns raw-unit designs ``(n, 5)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if model.epochs_trained < 1:
        raise ValueError("model has not been trained")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    z = rng.standard_normal((n, model.latent_dim))
    c = float(standardizer.transform_target(c_target_raw))
    return standardizer.inverse_transform(decode(model, z, c))


def save_model(model: CvaeModel, path, standardizer: Standardizer | None = None) -> None:
    payload = {
        "kind": "cvae",
        "config": asdict(model.config),
        "standardizer": standardizer.to_dict() if standardizer is not None else None,
        "epochs_trained": model.epochs_trained,
        "loss_trace": model.loss_trace,
        "encoder": nn.network_to_dict(model.encoder),
        "decoder": nn.network_to_dict(model.decoder),
    }
    Path(path).write_text(json.dumps(payload, indent=1))


def load_model(path) -> tuple[CvaeModel, Standardizer | None]:
    payload = json.loads(Path(path).read_text())
    if payload.get("kind") != "cvae":
        raise ValueError(f"{path} is not a CVAE checkpoint")
    model = CvaeModel(nn.network_from_dict(payload["encoder"]), nn.network_from_dict(payload["decoder"]),
                      CvaeConfig(**payload["config"]), payload["epochs_trained"], list(payload["loss_trace"]))
    std = payload.get("standardizer")
    return model, Standardizer.from_dict(std) if std else None
