"""Reconstruction metrics: IOU at a binarization threshold and voxel-ranking AP."""
from __future__ import annotations

import numpy as np

from .voxel import VoxelGrid

IOU_THRESHOLD = 0.4
HIGH_THRESHOLD = 0.6
LOW_THRESHOLD = 0.1


def _values(g):
    return g.values if isinstance(g, VoxelGrid) else np.asarray(g, dtype=np.float64)


def iou(pred, gt, tau: float = IOU_THRESHOLD) -> float:
    """IOU of ``pred >= tau`` against the occupied voxels of ``gt``; both empty gives 1."""
    p, g = _values(pred), _values(gt)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {tau}")
    pb = p >= tau
    gb = g > 0.5
    union = np.logical_or(pb, gb).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(pb, gb).sum() / union)


def average_precision(pred, gt) -> float:
    """Non-interpolated AP of voxels ranked by predicted probability.

    Ties are ranked by linear voxel index. With no positive voxels AP is
    defined as 1.
    """
    p, g = _values(pred).ravel(), _values(gt).ravel() > 0.5
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {_values(pred).shape} vs {_values(gt).shape}")
    n_pos = int(g.sum())
    if n_pos == 0:
        return 1.0
    order = np.lexsort((np.arange(p.size), -p))
    hits = g[order]
    tp = np.cumsum(hits)
    precision = tp / np.arange(1, p.size + 1)
    return float(precision[hits].sum() / n_pos)


def export_colored(grid):
    """Visualization export: ``(x, y, z, r, g, b)`` rows for voxels with p >= 0.1.

    Voxels above 0.6 are pure red; from 0.6 down to 0.1 the color fades
    linearly to green. Returns integer rows plus the per-row class
    ``"high"`` or the graded parameter ``(p - 0.1) / 0.5``.
    """
    v = _values(grid)
    rows, labels = [], []
    for x, y, z in zip(*np.nonzero(v >= LOW_THRESHOLD)):
        p = v[x, y, z]
        if p > HIGH_THRESHOLD:
            rows.append((x, y, z, 255, 0, 0))
            labels.append("high")
        else:
            s = (p - LOW_THRESHOLD) / (HIGH_THRESHOLD - LOW_THRESHOLD)
            rows.append((x, y, z, int(round(255 * s)), int(round(255 * (1 - s))), 0))
            labels.append(float(s))
    return np.array(rows, dtype=np.int64).reshape(-1, 6), labels
