"""Manifold-constrained reconstruction by direct optimization of voxel logits.

Each iteration renders the current grid into every view, lets the
discriminator take one (possibly gated) step against a batch from the
shape pool, and then moves the logits with Adam along the gradient of
``reprojection loss - (1/t) log g``.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .barrier import BarrierConfig, Discriminator, penalty_and_grad, update_penalty
from .geometry import orbit_camera
from .losses import ViewSet, reproj_loss_and_grad
from .optim import AdamState, adam_step, step_lr
from .projection import MaskImage, build_ray_table, rp_forward
from .voxel import DEFAULT_EXTENT, LogitGrid, VoxelGrid, occupancy

__all__ = ["SolverConfig", "LogRow", "reconstruct", "reconstruct_unconstrained",
           "estimate_viewpoint", "adam_step", "AdamState", "step_lr"]


@dataclass
class SolverConfig:
    iterations: int = 40000
    lr_f: float = 1e-2
    milestones: tuple = (10000, 30000)
    lr_factor: float = 0.1
    batch_real: int = 8
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    seed: int = 0
    n: int = 32
    extent: tuple = DEFAULT_EXTENT
    log_every: int = 1

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if not self.lr_f > 0:
            raise ValueError("learning rate must be positive")
        if self.batch_real < 1:
            raise ValueError("batch_real must be at least 1")

    def lr(self, iteration):
        return step_lr(self.lr_f, iteration, self.milestones, self.lr_factor)


@dataclass(frozen=True)
class LogRow:
    iteration: int
    reproj_loss: float
    penalty: float
    disc_error: float
    gated: bool
    lr: float

    def csv(self):
        return (f"{self.iteration},{self.reproj_loss!r},{self.penalty!r},"
                f"{self.disc_error!r},{int(self.gated)},{self.lr!r}")


@dataclass
class SolverResult:
    grid: VoxelGrid
    log: list = field(default_factory=list)
    discriminator: Discriminator | None = None


def _run(views: ViewSet, cfg: SolverConfig, pool=None, bcfg=None, discriminator=None,
         freeze_discriminator=False):
    if len(views) == 0:
        raise ValueError("reconstruction needs at least one view")
    use_barrier = bcfg is not None
    if use_barrier and len(pool) == 0:
        raise ValueError("shape pool is empty")
    rng = np.random.default_rng(cfg.seed)
    lg = LogitGrid.zeros(cfg.n, cfg.extent)
    state = AdamState.like(lg.logits)
    d = None
    if use_barrier:
        d = discriminator if discriminator is not None else Discriminator(cfg.n, seed=cfg.seed)
        pool_values = np.stack([g.values for g in pool])
        if pool_values.shape[1:] != (cfg.n,) * 3:
            raise ValueError(f"pool grids must be {cfg.n}^3")
        recent = deque(maxlen=cfg.batch_real)
    log = []
    for it in range(cfg.iterations):
        grid = occupancy(lg)
        err, gated, pen = 0.0, True, 0.0
        if use_barrier:
            recent.append(grid.values)
            real = pool_values[rng.integers(0, len(pool_values), size=cfg.batch_real)]
            if not freeze_discriminator:
                sigma = bcfg.noise_at(it, cfg.iterations)
                _, upd = update_penalty(d, np.stack(recent), real, bcfg, rng, sigma=sigma)
                err, gated = upd.error, upd.gated
        loss, g_occ = reproj_loss_and_grad(grid, views)
        p = grid.values
        grad = g_occ * p * (1.0 - p)
        if use_barrier:
            pen, g_pen = penalty_and_grad(d, lg, bcfg.t)
            grad = grad + g_pen
        if not (math.isfinite(loss) and math.isfinite(pen)):
            raise FloatingPointError(f"non-finite loss at iteration {it}: reproj={loss} penalty={pen}")
        lr = cfg.lr(it)
        if it % cfg.log_every == 0:
            log.append(LogRow(it, float(loss), float(pen), float(err), bool(gated), lr))
        new, state = adam_step(state, lg.logits, grad, lr, cfg.betas, cfg.eps)
        lg = LogitGrid(new, *cfg.extent)
    return SolverResult(occupancy(lg), log, d)


def reconstruct(views: ViewSet, pool, cfg: SolverConfig, bcfg: BarrierConfig | None = None,
                discriminator=None, freeze_discriminator=False) -> SolverResult:
    """Reconstruct a grid from silhouettes under the learned shape-pool barrier."""
    if len(pool) == 0:
        raise ValueError("shape pool is empty")
    return _run(views, cfg, pool, bcfg or BarrierConfig(), discriminator, freeze_discriminator)


def reconstruct_unconstrained(views: ViewSet, cfg: SolverConfig) -> SolverResult:
    """Silhouette-only baseline: the same optimizer without the barrier."""
    return _run(views, cfg)


@dataclass(frozen=True)
class ViewpointSearch:
    azimuths: np.ndarray
    elevations: np.ndarray
    distances: np.ndarray
    width: int = 32
    height: int = 32
    fov_deg: float = 60.0

    @classmethod
    def grid(cls, bins=10, azimuth=(0.0, 360.0), elevation=(0.0, 60.0), distance=(1.8, 3.0),
             width=32, height=32, fov_deg=60.0):
        if bins < 2:
            raise ValueError("viewpoint search needs at least 2 bins")
        return cls(np.linspace(*azimuth, bins, endpoint=False), np.linspace(*elevation, bins),
                   np.linspace(*distance, bins), width, height, fov_deg)

    def camera(self, a, e, k, target=(0.0, 0.0, 0.0)):
        return orbit_camera(self.azimuths[a], self.elevations[e], self.distances[k], target=target,
                            width=self.width, height=self.height, fov_deg=self.fov_deg)

    def shape(self):
        return (len(self.azimuths), len(self.elevations), len(self.distances))


def viewpoint_scores(mask: MaskImage, reference: VoxelGrid, search: ViewpointSearch):
    """Squared silhouette difference for every candidate, shape ``(az, el, dist)``."""
    target = np.full(3, (reference.lo + reference.hi) / 2.0)
    scores = np.empty(search.shape())
    m = mask.values
    for a, e, k in itertools.product(*map(range, search.shape())):
        cam = search.camera(a, e, k, target)
        r = rp_forward(reference, cam, build_ray_table(cam, reference.n, reference.extent))
        scores[a, e, k] = float(np.sum((r.values - m) ** 2))
    return scores


def estimate_viewpoint(mask: MaskImage, reference: VoxelGrid, bins: int = 10, search=None, **ranges):
    """Exhaustive search over a bins^3 azimuth/elevation/distance grid of look-at cameras.

    Returns ``(camera, (a, e, k), score)``; ties go to the lexicographically
    smallest bin index.
    """
    search = search or ViewpointSearch.grid(bins, width=mask.width, height=mask.height, **ranges)
    scores = viewpoint_scores(mask, reference, search)
    flat = int(np.argmin(scores))  # C order gives the lexicographic tie rule
    a, e, k = np.unravel_index(flat, scores.shape)
    target = np.full(3, (reference.lo + reference.hi) / 2.0)
    return search.camera(a, e, k, target), (int(a), int(e), int(k)), float(scores.flat[flat])
