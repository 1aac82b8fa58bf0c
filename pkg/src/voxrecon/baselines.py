"""Classical baselines: silhouette carving and nearest-shape retrieval."""
from __future__ import annotations

import itertools

import numpy as np

from .metrics import iou
from .voxel import DEFAULT_EXTENT, VoxelGrid, binarize, voxel_centers
from .geometry import project_points
from .projection import ray_table


def _footprint_points(n, extent):
    lo, hi = extent
    side = (hi - lo) / n
    centers = voxel_centers(n, extent)
    offsets = [np.zeros(3)] + [np.array(c) * side / 2.0
                               for c in itertools.product((-1.0, 1.0), repeat=3)]
    return np.stack([centers + off for off in offsets], axis=-2)  # (n, n, n, 9, 3)


def carve(n: int, views, extent=DEFAULT_EXTENT) -> VoxelGrid:
    """Visual hull by silhouette carving.

    A view removes a voxel when all nine of its test points (center plus
    corners) land on background or off-image, and additionally either every
    pixel ray of that view crossing the voxel is background or the voxel
    lies entirely off-image. Points behind the camera count as off-image.
    The ray condition keeps sub-pixel voxels that no pixel center observes,
    so the hull contains any shape whose masks came from :func:`rp_forward`.
    """
    if len(views) == 0:
        raise ValueError("carving needs at least one view")
    pts = _footprint_points(n, extent)
    keep = np.ones((n, n, n), dtype=bool)
    for cam, mask in views:
        u, v, _ = project_points(cam, pts)
        ok = np.isfinite(u) & np.isfinite(v)
        col = np.floor(np.where(ok, u, -1.0)).astype(np.int64)
        row = np.floor(np.where(ok, v, -1.0)).astype(np.int64)
        ok &= (col >= 0) & (col < cam.width) & (row >= 0) & (row < cam.height)
        fg = np.zeros(ok.shape, dtype=bool)
        fg[ok] = mask.values[row[ok], col[ok]] > 0.5
        points_bg = ~fg.any(axis=-1).ravel()
        off_image = ~ok.any(axis=-1).ravel()
        table = ray_table(cam, n, extent)
        fg_rays = (mask.values.ravel() > 0.5)[:, None]
        idx = table.index.ravel()
        valid = idx >= 0
        observed = np.zeros(n ** 3, dtype=bool)
        observed[idx[valid]] = True
        fg_hit = np.zeros(n ** 3, dtype=bool)
        fg_hit[idx[valid & np.broadcast_to(fg_rays, table.index.shape).ravel()]] = True
        rays_bg = observed & ~fg_hit
        removed = points_bg & (rays_bg | off_image)
        keep &= ~removed.reshape(n, n, n)
    return VoxelGrid(keep.astype(np.float64), *extent)


def nn_retrieve(pred: VoxelGrid, pool, tau: float = 0.4):
    """Pool member with the highest IOU against the binarized prediction; ties go to the lowest index."""
    if len(pool) == 0:
        raise ValueError("retrieval pool is empty")
    b = binarize(pred, tau)
    scores = []
    for k, shape in enumerate(pool):
        if shape.n != pred.n:
            raise ValueError(f"pool member {k} has resolution {shape.n}, expected {pred.n}")
        scores.append(_iou_or_zero(b, shape, tau))
    best = int(np.argmax(scores))
    return best, pool[best]


def _iou_or_zero(b, shape, tau):
    # empty-vs-empty counts as IOU 1 in metrics; for retrieval an empty intersection scores 0
    inter = np.logical_and(b.values > 0, shape.values > 0).sum()
    if inter == 0:
        return 0.0
    return iou(b, shape, tau)
