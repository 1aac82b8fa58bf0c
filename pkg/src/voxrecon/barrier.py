"""Learned log barrier: a shape discriminator and its penalty.

The discriminator scores how much a voxel grid looks like the unlabeled
shape pool. The reconstruction pays ``-(1/t) log g(x)`` and the
discriminator is trained on the usual two-sample objective, with instance
noise and an error gate that skips training while the discriminator is
already accurate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .optim import AdamState, adam_step
from .voxel import LogitGrid, VoxelGrid, occupancy

G_EPS = 1e-7


@dataclass
class BarrierConfig:
    t: float = 100.0
    sigma_noise: float = 0.1
    gate_threshold: float | None = 0.2  # None disables gating
    lr_g: float = 1e-4
    anneal_noise: bool = True  # linear decay of sigma_noise to 0 over the run

    def noise_at(self, iteration, total):
        if not self.anneal_noise or total <= 0:
            return self.sigma_noise
        return self.sigma_noise * (1.0 - iteration / total)

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("barrier sharpness t must be positive")
        if self.gate_threshold is not None and not 0.0 <= self.gate_threshold < 0.5:
            raise ValueError("gate threshold must lie in [0, 0.5)")
        if self.sigma_noise < 0:
            raise ValueError("instance noise must be nonnegative")


@dataclass(frozen=True)
class PenaltyUpdate:
    error: float
    objective: float
    gated: bool


def _stack(batch):
    if isinstance(batch, np.ndarray):
        return batch.astype(np.float64, copy=False)
    return np.stack([g.values if isinstance(g, VoxelGrid) else np.asarray(g, dtype=np.float64)
                     for g in batch])


def _pool2(x):
    """2x max pooling of ``(B, n, n, n)``; returns pooled values and flat argmax per block."""
    B, n = x.shape[0], x.shape[1]
    h = n // 2
    blocks = x.reshape(B, h, 2, h, 2, h, 2).transpose(0, 1, 3, 5, 2, 4, 6).reshape(B, h, h, h, 8)
    arg = np.argmax(blocks, axis=-1)
    return np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0], arg


def _unpool2(grad_pooled, arg, n):
    B, h = grad_pooled.shape[0], n // 2
    blocks = np.zeros((B, h, h, h, 8))
    np.put_along_axis(blocks, arg[..., None], grad_pooled[..., None], axis=-1)
    return blocks.reshape(B, h, h, h, 2, 2, 2).transpose(0, 1, 4, 2, 5, 3, 6).reshape(B, n, n, n)


class Discriminator:
    """Fully connected scorer on 2x max-pooled grids shifted to [-0.5, 0.5]: ReLU hidden layers, logistic output."""

    def __init__(self, n=16, hidden=(128, 64), seed=0, weights=None):
        if n % 2:
            raise ValueError("discriminator input resolution must be even")
        self.n = n
        if weights is not None:
            self.weights = [np.asarray(w, dtype=np.float64) for w in weights[0]]
            self.biases = [np.asarray(b, dtype=np.float64) for b in weights[1]]
        else:
            rng = np.random.default_rng(seed)
            sizes = [(n // 2) ** 3, *hidden, 1]
            self.weights, self.biases = [], []
            for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
                last = k == len(sizes) - 2
                std = 0.01 if last else np.sqrt(2.0 / fan_in)
                self.weights.append(rng.normal(0.0, std, size=(fan_out, fan_in)))
                self.biases.append(np.zeros(fan_out))
        if self.weights[0].shape[1] != (self.n // 2) ** 3:
            raise ValueError("first layer does not match the grid resolution")
        self._adam = [AdamState.like(p) for p in self.params()]

    def params(self):
        return [*self.weights, *self.biases]

    def set_params(self, params):
        k = len(self.weights)
        self.weights = list(params[:k])
        self.biases = list(params[k:])

    def copy(self):
        d = Discriminator(self.n, weights=([w.copy() for w in self.weights],
                                           [b.copy() for b in self.biases]))
        d._adam = list(self._adam)
        return d

    def _forward(self, x):
        if x.shape[1:] != (self.n,) * 3:
            raise ValueError(f"discriminator expects {self.n}^3 grids, got {x.shape[1:]}")
        pooled, arg = _pool2(x)
        # centered so an empty grid still excites the first layer
        acts = [pooled.reshape(x.shape[0], -1) - 0.5]
        pre = []
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w.T + b
            pre.append(z)
            if k < len(self.weights) - 1:
                acts.append(np.maximum(z, 0.0))
        return pre[-1][:, 0], (acts, pre, arg)

    def _backward(self, dz, cache, need_input=False):
        acts, pre, arg = cache
        delta = dz[:, None]
        gw = [None] * len(self.weights)
        gb = [None] * len(self.weights)
        for k in range(len(self.weights) - 1, -1, -1):
            gw[k] = delta.T @ acts[k]
            gb[k] = delta.sum(axis=0)
            delta = delta @ self.weights[k]
            if k > 0:
                delta = delta * (pre[k - 1] > 0)
        gx = None
        if need_input:
            h = self.n // 2
            gx = _unpool2(delta.reshape(-1, h, h, h), arg, self.n)
        return gw, gb, gx

    def logits(self, batch):
        return self._forward(_stack(batch))[0]

    def scores(self, batch):
        return np.clip(expit(self.logits(batch)), G_EPS, 1.0 - G_EPS)

    def ascend(self, real, recon, lr):
        """One Adam ascent step on ``mean log g(real) + mean log(1 - g(recon))``."""
        x = np.concatenate([real, recon])
        z, cache = self._forward(x)
        s = expit(z)
        nr = real.shape[0]
        dz = np.concatenate([(1.0 - s[:nr]) / nr, -s[nr:] / recon.shape[0]])
        gw, gb, _ = self._backward(dz, cache)
        new = []
        for k, (p, g) in enumerate(zip(self.params(), [*gw, *gb])):
            p2, self._adam[k] = adam_step(self._adam[k], p, -g, lr)
            new.append(p2)
        self.set_params(new)


class TabularDiscriminator:
    """One free logit per distinct grid; unseen grids score 0.5. Trained by plain gradient ascent."""

    def __init__(self):
        self.table = {}

    @staticmethod
    def _key(x):
        return np.ascontiguousarray(x, dtype=np.float64).tobytes()

    def logits(self, batch):
        return np.array([self.table.get(self._key(x), 0.0) for x in _stack(batch)])

    def scores(self, batch):
        return np.clip(expit(self.logits(batch)), G_EPS, 1.0 - G_EPS)

    def probability(self, grid):
        return float(expit(self.table.get(self._key(_stack([grid])[0]), 0.0)))

    def ascend(self, real, recon, lr):
        grads = {}
        for x, sign, size in ((real, 1.0, len(real)), (recon, -1.0, len(recon))):
            for row in x:
                k = self._key(row)
                s = expit(self.table.get(k, 0.0))
                grads[k] = grads.get(k, 0.0) + ((1.0 - s) if sign > 0 else -s) / size
        for k, g in grads.items():
            self.table[k] = self.table.get(k, 0.0) + lr * g


def g_eval(d, grid) -> float:
    return float(d.scores([grid])[0])


def penalty(d, grid, t) -> float:
    if not t > 0:
        raise ValueError("barrier sharpness t must be positive")
    return -np.log(g_eval(d, grid)) / t


def penalty_and_grad(d: Discriminator, lg: LogitGrid, t):
    """Penalty at ``occupancy(lg)`` and its gradient with respect to the logits.

    The discriminator parameters are only read.
    """
    grid = occupancy(lg)
    x = grid.values[None]
    z, cache = d._forward(x)
    s = expit(z[0])
    g = min(max(s, G_EPS), 1.0 - G_EPS)
    value = -np.log(g) / t
    if not G_EPS < s < 1.0 - G_EPS:
        return value, np.zeros_like(lg.logits)
    # d(-log sigmoid(z))/dz = -(1 - sigmoid(z))
    _, _, gx = d._backward(np.array([-(1.0 - s) / t]), cache, need_input=True)
    p = grid.values
    return value, gx[0] * p * (1.0 - p)


def penalty_grad(d: Discriminator, lg: LogitGrid, t):
    return penalty_and_grad(d, lg, t)[1]


def _noisy(x, sigma, rng):
    if sigma <= 0:
        return x
    return np.clip(x + rng.normal(0.0, sigma, size=x.shape), 0.0, 1.0)


def update_penalty(d, recon_batch, real_batch, cfg: BarrierConfig, rng, sigma=None):
    """Error-gated discriminator update with instance noise.

    Returns ``(d, PenaltyUpdate)``; ``d`` is updated in place unless gated.
    ``sigma`` overrides ``cfg.sigma_noise`` (used for annealing).
    """
    if len(recon_batch) == 0 or len(real_batch) == 0:
        raise ValueError("penalty update needs nonempty reconstruction and real batches")
    recon, real = _stack(recon_batch), _stack(real_batch)
    if recon.shape[1:] != real.shape[1:]:
        raise ValueError("reconstruction and real grids differ in shape")
    sigma = cfg.sigma_noise if sigma is None else sigma
    real = _noisy(real, sigma, rng)
    recon = _noisy(recon, sigma, rng)
    g_real, g_recon = d.scores(real), d.scores(recon)
    error = 0.5 * (np.mean(g_real < 0.5) + np.mean(g_recon >= 0.5))
    objective = float(np.mean(np.log(g_real)) + np.mean(np.log(1.0 - g_recon)))
    gated = cfg.gate_threshold is not None and error <= cfg.gate_threshold
    if not gated:
        d.ascend(real, recon, cfg.lr_g)
    return d, PenaltyUpdate(float(error), objective, bool(gated))
