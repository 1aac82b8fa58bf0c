"""Small end-to-end experiments shared by the CLI, the notebooks and the acceptance tests."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import carve, nn_retrieve
from .barrier import BarrierConfig
from .datasets import ring_cameras
from .losses import render_views
from .metrics import average_precision, iou
from .projection import gs_forward, rp_forward
from .solver import SolverConfig, reconstruct, reconstruct_unconstrained
from .voxel import shape_pool

DEFAULT_SAMPLES = (8, 16, 32, 64, 128)


@dataclass(frozen=True)
class ProjectorRow:
    method: str
    samples: int | None
    ap: float
    recall: float
    nonzero: int

    def line(self):
        s = "-" if self.samples is None else str(self.samples)
        return f"method={self.method} samples={s} ap={self.ap:.6f} recall={self.recall:.6f} nonzero={self.nonzero}"


def compare_projectors(grid, cam, samples=DEFAULT_SAMPLES, depth_range=None):
    """Score grid-sampling masks against the raytraced mask of the same view.

    AP ranks pixels by the sampled mask value with the raytraced silhouette
    as ground truth; recall is the fraction of raytraced foreground pixels
    the sampled mask marks nonzero.
    """
    ref = rp_forward(grid, cam).values
    fg = ref > 0.5
    rows = [ProjectorRow("rp", None, average_precision(ref, fg), 1.0 if fg.any() else 0.0,
                         int(np.count_nonzero(ref)))]
    for d in samples:
        m = gs_forward(grid, cam, d, depth_range).values
        recall = float(np.count_nonzero(m[fg] > 0) / max(fg.sum(), 1))
        rows.append(ProjectorRow("gs", int(d), average_precision(m, fg), recall, int(np.count_nonzero(m))))
    return rows


@dataclass(frozen=True)
class ConcavityResult:
    seed: int
    iou_barrier: float
    iou_mask_only: float
    iou_carve: float
    iou_nn: float


def concavity_trial(seed, iterations=2000, n=16, pool_size=50, bcfg=None, image_size=32):
    """Single-view cup reconstruction: barrier solver vs silhouette-only, carving and retrieval.

    The ground-truth cup and the pool are drawn from the same parameter
    distribution with disjoint seeds; the view sits on the standard ring at
    azimuth ``30 * seed`` degrees.
    """
    gt = shape_pool(1000 + seed, 1, ("cup",), n=n)[0]
    pool = shape_pool(seed, pool_size, ("cup",), n=n)
    cam = ring_cameras(1, width=image_size, height=image_size, azimuth_offset=30.0 * seed)[0]
    views = render_views(gt, [cam])
    cfg = SolverConfig(iterations=iterations, n=n, seed=seed)
    bcfg = bcfg or BarrierConfig(sigma_noise=0.5, anneal_noise=False)
    barrier = reconstruct(views, pool, cfg, bcfg).grid
    mask_only = reconstruct_unconstrained(views, cfg).grid
    _, nn = nn_retrieve(mask_only, pool)
    return ConcavityResult(seed, iou(barrier, gt), iou(mask_only, gt), iou(carve(n, views), gt), iou(nn, gt))
