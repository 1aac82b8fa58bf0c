"""Silhouette cross-entropy and the multi-view reprojection loss."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Camera
from .projection import MaskImage, ray_table, rp_backward, rp_forward
from .voxel import LogitGrid, VoxelGrid, occupancy

CE_EPS = 1e-7


@dataclass(frozen=True)
class ViewSet:
    views: tuple  # ((Camera, MaskImage), ...)

    def __post_init__(self):
        views = tuple((c, m) for c, m in self.views)
        for cam, mask in views:
            if (mask.height, mask.width) != (cam.height, cam.width):
                raise ValueError(
                    f"mask is {mask.width}x{mask.height} but camera expects {cam.width}x{cam.height}")
        object.__setattr__(self, "views", views)

    def __len__(self):
        return len(self.views)

    def __iter__(self):
        return iter(self.views)

    @property
    def cameras(self):
        return [c for c, _ in self.views]


def render_views(grid: VoxelGrid, cameras) -> ViewSet:
    return ViewSet(tuple((c, rp_forward(grid, c)) for c in cameras))


def _as_array(m):
    return m.values if isinstance(m, MaskImage) else np.asarray(m, dtype=np.float64)


def pixel_ce(pred, target) -> float:
    p, t = _as_array(pred), _as_array(target)
    if p.shape != t.shape:
        raise ValueError(f"prediction shape {p.shape} does not match target shape {t.shape}")
    p = np.clip(p, CE_EPS, 1.0 - CE_EPS)
    return float(np.mean(-(t * np.log(p) + (1.0 - t) * np.log(1.0 - p))))


def pixel_ce_grad(pred, target):
    """Gradient of :func:`pixel_ce` with respect to the prediction (zero where clamped)."""
    p, t = _as_array(pred), _as_array(target)
    pc = np.clip(p, CE_EPS, 1.0 - CE_EPS)
    g = (pc - t) / (pc * (1.0 - pc)) / p.size
    return np.where((p > CE_EPS) & (p < 1.0 - CE_EPS), g, 0.0)


def _check_views(views):
    if len(views) == 0:
        raise ValueError("reprojection loss needs at least one view")


def reproj_loss(grid: VoxelGrid, views: ViewSet) -> float:
    _check_views(views)
    return float(np.mean([pixel_ce(rp_forward(grid, c), m) for c, m in views]))


def reproj_loss_and_grad(grid: VoxelGrid, views: ViewSet):
    """Loss and its gradient with respect to the occupancy values."""
    _check_views(views)
    M = len(views)
    total = 0.0
    grad = np.zeros_like(grid.values)
    for cam, mask in views:
        table = ray_table(cam, grid.n, grid.extent)
        pred = rp_forward(grid, cam, table)
        total += pixel_ce(pred, mask)
        grad += rp_backward(grid, cam, pixel_ce_grad(pred, mask), table)
    return total / M, grad / M


def reproj_grad(lg: LogitGrid, views: ViewSet):
    """Gradient of the reprojection loss with respect to the occupancy logits."""
    grid = occupancy(lg)
    _, g = reproj_loss_and_grad(grid, views)
    p = grid.values
    return g * p * (1.0 - p)
