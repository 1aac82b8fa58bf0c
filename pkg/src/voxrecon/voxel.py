"""Occupancy grids, logit parameterization and procedural test shapes.

Grids are stored as ``(n, n, n)`` arrays indexed ``[x, y, z]``, so the C-order
flattening is x slowest, z fastest. World up is +z.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

DEFAULT_EXTENT = (-0.5, 0.5)
SHAPE_KINDS = ("box", "cup", "thin_plate", "chair_l")


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    values: np.ndarray
    lo: float = DEFAULT_EXTENT[0]
    hi: float = DEFAULT_EXTENT[1]

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 3 or not (v.shape[0] == v.shape[1] == v.shape[2]):
            raise ValueError(f"voxel values must be a cube, got shape {v.shape}")
        if not self.hi > self.lo:
            raise ValueError("grid extent requires hi > lo")
        if v.size and (v.min() < 0.0 or v.max() > 1.0 or not np.isfinite(v).all()):
            raise ValueError("occupancy values must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def side(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def extent(self):
        return (self.lo, self.hi)

    def with_values(self, values) -> "VoxelGrid":
        return VoxelGrid(values, self.lo, self.hi)

    def count(self) -> int:
        return int(np.count_nonzero(self.values))

    def __eq__(self, other):
        return (isinstance(other, VoxelGrid) and self.extent == other.extent
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True, eq=False)
class LogitGrid:
    logits: np.ndarray
    lo: float = DEFAULT_EXTENT[0]
    hi: float = DEFAULT_EXTENT[1]

    @property
    def n(self) -> int:
        return self.logits.shape[0]

    @classmethod
    def zeros(cls, n, extent=DEFAULT_EXTENT):
        return cls(np.zeros((n, n, n)), *extent)


def occupancy(lg: LogitGrid) -> VoxelGrid:
    return VoxelGrid(expit(lg.logits), lg.lo, lg.hi)


def binarize(g: VoxelGrid, tau: float = 0.4) -> VoxelGrid:
    if not 0.0 < tau < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {tau}")
    return g.with_values((g.values >= tau).astype(np.float64))


def voxel_centers(n, extent=DEFAULT_EXTENT):
    """World coordinates of voxel centers, shape ``(n, n, n, 3)``."""
    lo, hi = extent
    c = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    return np.stack(np.meshgrid(c, c, c, indexing="ij"), axis=-1)


def _grid_coords(n):
    # voxel-center coordinates relative to the grid center, in voxel units
    c = np.arange(n) + 0.5 - n / 2.0
    return np.meshgrid(c, c, c, indexing="ij")


def _box(n, ratios):
    rx, ry, rz = ratios
    x, y, z = _grid_coords(n)
    h = n / 2.0
    return (np.abs(x) <= rx * h) & (np.abs(y) <= ry * h) & (np.abs(z) <= rz * h)


def _cup(n, radius, height, wall, bottom):
    x, y, z = _grid_coords(n)
    h = n / 2.0
    r = np.hypot(x, y)
    r_out = radius * (h - 1)
    z0 = -height * (h - 1)
    z1 = height * (h - 1)
    inside_z = (z >= z0) & (z <= z1)
    wall_ring = (r <= r_out) & (r > r_out - wall)
    base = (r <= r_out) & (z < z0 + bottom)
    return inside_z & (wall_ring | base)


def _thin_plate(n):
    i, j, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    return (i == j)


def _chair_l(n, seat, back):
    x, y, z = _grid_coords(n)
    h = n / 2.0 - 1
    w = seat[0] * h
    seat_mask = (np.abs(x) <= w) & (np.abs(y) <= w) & (z >= -h) & (z <= -h + seat[1] * 2 * h)
    back_mask = (np.abs(x) <= w) & (y >= w - back[0] * 2 * h) & (y <= w) & (z >= -h) & (z <= -h + back[1] * 2 * h)
    return seat_mask | back_mask


def gen_shape(kind: str, n: int = 32, params=None, extent=DEFAULT_EXTENT) -> VoxelGrid:
    """Binary procedural shape centered in the grid with at least one empty border voxel.

    ``params`` per kind (ratios are relative to the half grid size):

    * ``box``: ``(rx, ry, rz)`` half-extent ratios, default ``(0.5, 0.5, 0.5)``
    * ``cup``: ``(radius, height, wall, bottom)``; wall and bottom are thicknesses in voxels
    * ``thin_plate``: no parameters; the one-voxel plate ``x == y``
    * ``chair_l``: ``(seat_half_width, seat_height, back_depth, back_height)``
    """
    if n < 8:
        raise ValueError(f"shape resolution must be at least 8, got {n}")
    if kind == "box":
        ratios = tuple(params) if params is not None else (0.5, 0.5, 0.5)
        if min(ratios) <= 0:
            raise ValueError(f"box ratios must be positive, got {ratios}")
        mask = _box(n, ratios)
    elif kind == "cup":
        radius, height, wall, bottom = params if params is not None else (0.8, 0.8, 1.0, 1.0)
        if min(radius, height) <= 0 or wall < 1 or bottom < 1:
            raise ValueError("cup needs positive radius/height and wall, bottom >= 1 voxel")
        mask = _cup(n, radius, height, wall, bottom)
    elif kind == "thin_plate":
        mask = _thin_plate(n)
    elif kind == "chair_l":
        sw, sh, bd, bh = params if params is not None else (0.7, 0.35, 0.25, 1.0)
        if min(sw, sh, bd, bh) <= 0:
            raise ValueError("chair dimensions must be positive")
        mask = _chair_l(n, (sw, sh), (bd, bh))
    else:
        raise ValueError(f"unknown shape kind {kind!r}; expected one of {SHAPE_KINDS}")
    mask = mask.copy()
    mask[[0, -1], :, :] = False
    mask[:, [0, -1], :] = False
    mask[:, :, [0, -1]] = False
    return VoxelGrid(mask.astype(np.float64), *extent)


def _random_params(kind, rng):
    if kind == "box":
        return tuple(np.round(rng.uniform(0.3, 0.85, size=3), 3))
    if kind == "cup":
        return (round(rng.uniform(0.55, 0.9), 3), round(rng.uniform(0.5, 0.85), 3),
                float(rng.integers(1, 3)), float(rng.integers(1, 3)))
    if kind == "thin_plate":
        return ()
    if kind == "chair_l":
        return tuple(np.round([rng.uniform(0.4, 0.8), rng.uniform(0.2, 0.45),
                               rng.uniform(0.15, 0.3), rng.uniform(0.7, 1.0)], 3))
    raise ValueError(f"unknown shape kind {kind!r}")


def shape_pool(seed, count, kinds=("cup",), n=16, extent=DEFAULT_EXTENT):
    """Deterministic pool of ``count`` random shapes cycling through ``kinds``.

    Parameter tuples are drawn without repetition; ``thin_plate`` has no
    parameters and may therefore appear at most once.
    """
    if count < 1:
        raise ValueError("shape pool needs count >= 1")
    rng = np.random.default_rng(seed)
    seen = set()
    pool = []
    attempts = 0
    while len(pool) < count:
        kind = kinds[len(pool) % len(kinds)]
        params = _random_params(kind, rng)
        attempts += 1
        if attempts > 1000 * count:
            raise ValueError("could not draw enough distinct shape parameters")
        if (kind, params) in seen:
            continue
        seen.add((kind, params))
        pool.append(gen_shape(kind, n, params or None, extent))
    return pool
