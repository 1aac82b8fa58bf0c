"""Silhouette rendering of occupancy grids.

Two projectors live here. Raytrace pooling walks every pixel ray through the
grid (slab test, then 3D-DDA stepping) and max-pools the occupancy of every
voxel the ray crosses. The grid-sampling projector instead takes a fixed
number of depth samples per ray and trilinearly interpolates; with few
samples it misses thin structures.

Both come with an analytic backward pass. The raytraced one depends only on
the camera and the grid geometry, so walks are cached as :class:`RayTable`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import Camera, Ray, pixel_rays
from .voxel import VoxelGrid


@dataclass(frozen=True, eq=False)
class MaskImage:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or 0 in v.shape:
            raise ValueError(f"mask must be a non-empty 2D array, got shape {v.shape}")
        if v.min() < 0.0 or v.max() > 1.0 or not np.isfinite(v).all():
            raise ValueError("mask values must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class TraversalRecord:
    voxels: tuple  # ((ix, iy, iz), ...)
    t_in: tuple
    t_out: tuple

    def __len__(self):
        return len(self.voxels)


def slab_interval(origin, direction, lo, hi):
    """Parametric interval ``(t0, t1)`` where the ray is inside the box ``[lo, hi]^3``.

    Works on single rays or ``(..., 3)`` stacks; a miss gives ``t0 > t1``.
    """
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        ta = (lo - o) * inv
        tb = (hi - o) * inv
    tmin = np.minimum(ta, tb)
    tmax = np.maximum(ta, tb)
    # a zero direction component: inside the slab means (-inf, inf), outside means empty
    par = d == 0
    inside = (o >= lo) & (o <= hi)
    tmin = np.where(par, np.where(inside, -np.inf, np.inf), tmin)
    tmax = np.where(par, np.where(inside, np.inf, -np.inf), tmax)
    return tmin.max(axis=-1), tmax.min(axis=-1)


def _start_index(p, d, lo, side, n):
    s = (p - lo) / side
    idx = math.floor(s)
    if d < 0 and s == idx:
        idx -= 1
    return min(max(idx, 0), n - 1)


def traverse(n: int, extent, ray: Ray) -> TraversalRecord:
    """Voxels pierced by the ray (``t > 0``) in visiting order, with entry/exit parameters.

    Zero-length touches (the ray crossing exactly through an edge or corner)
    are dropped, so consecutive records are face-adjacent except at such
    crossings.
    """
    lo, hi = float(extent[0]), float(extent[1])
    side = (hi - lo) / n
    o = [float(v) for v in ray.origin]
    d = [float(v) for v in ray.direction]
    t0, t1 = slab_interval(ray.origin, ray.direction, lo, hi)
    t0 = max(float(t0), 0.0)
    t1 = float(t1)
    if not t1 > t0:
        return TraversalRecord((), (), ())

    idx = [_start_index(o[a] + t0 * d[a], d[a], lo, side, n) for a in range(3)]
    step = [1 if d[a] > 0 else (-1 if d[a] < 0 else 0) for a in range(3)]

    def boundary_t(a):
        if step[a] == 0:
            return math.inf
        b = lo + (idx[a] + (1 if step[a] > 0 else 0)) * side
        return (b - o[a]) / d[a]

    voxels, t_in, t_out = [], [], []
    t = t0
    while True:
        tm = [boundary_t(a) for a in range(3)]
        a = min(range(3), key=lambda k: tm[k])
        t_next = min(tm[a], t1)
        if t_next > t:
            voxels.append(tuple(idx))
            t_in.append(t)
            t_out.append(t_next)
            t = t_next
        if tm[a] >= t1:
            break
        idx[a] += step[a]
        if not 0 <= idx[a] < n:
            break
    return TraversalRecord(tuple(voxels), tuple(t_in), tuple(t_out))


def traverse_rays(n, extent, origins, directions):
    """Vectorized :func:`traverse` over many rays.

    Returns ``(index, t_in, t_out, length)``: flat voxel indices padded with
    ``-1`` to shape ``(P, K)``, their entry/exit parameters, and per-ray counts.
    """
    lo, hi = float(extent[0]), float(extent[1])
    side = (hi - lo) / n
    o = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    d = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    P = o.shape[0]
    t0, t1 = slab_interval(o, d, lo, hi)
    t0 = np.maximum(t0, 0.0)
    active = t1 > t0

    p = o + np.where(active, t0, 0.0)[:, None] * d
    s = (p - lo) / side
    idx = np.floor(s)
    idx = np.where((d < 0) & (s == idx), idx - 1, idx)
    idx = np.clip(idx, 0, n - 1).astype(np.int64)
    step = np.sign(d).astype(np.int64)
    pos = (step > 0).astype(np.int64)

    max_steps = 3 * n + 3
    out_idx = np.full((P, max_steps), -1, dtype=np.int64)
    out_tin = np.zeros((P, max_steps))
    out_tout = np.zeros((P, max_steps))
    count = np.zeros(P, dtype=np.int64)
    t = np.where(active, t0, 0.0)
    rows = np.arange(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_d = np.where(step != 0, 1.0 / d, np.inf)
    for _ in range(max_steps):
        if not active.any():
            break
        b = lo + (idx + pos) * side
        tm = np.where(step != 0, (b - o) * inv_d, np.inf)
        a = np.argmin(tm, axis=1)
        tmin = tm[rows, a]
        t_next = np.minimum(tmin, t1)
        rec = active & (t_next > t)
        r = rows[rec]
        c = count[rec]
        out_idx[r, c] = (idx[rec, 0] * n + idx[rec, 1]) * n + idx[rec, 2]
        out_tin[r, c] = t[rec]
        out_tout[r, c] = t_next[rec]
        count[rec] += 1
        t = np.where(rec, t_next, t)
        active &= tmin < t1
        idx[rows, a] += np.where(active, step[rows, a], 0)
        active &= (idx[rows, a] >= 0) & (idx[rows, a] < n)
    K = max(int(count.max()) if P else 0, 1)
    return out_idx[:, :K], out_tin[:, :K], out_tout[:, :K], count


@dataclass(frozen=True, eq=False)
class RayTable:
    """Cached walk of every pixel ray of one camera through one grid geometry."""

    index: np.ndarray    # (P, K) flat voxel indices, -1 padded
    t_in: np.ndarray
    t_out: np.ndarray
    length: np.ndarray   # (P,)
    height: int
    width: int
    n: int


def build_ray_table(cam: Camera, n: int, extent) -> RayTable:
    o, d = pixel_rays(cam)
    index, t_in, t_out, length = traverse_rays(n, extent, o, d)
    for arr in (index, t_in, t_out, length):
        arr.setflags(write=False)
    return RayTable(index, t_in, t_out, length, cam.height, cam.width, n)


@lru_cache(maxsize=128)
def _cached_table(cam: Camera, n: int, extent: tuple) -> RayTable:
    return build_ray_table(cam, n, extent)


def ray_table(cam: Camera, n: int, extent) -> RayTable:
    return _cached_table(cam, int(n), (float(extent[0]), float(extent[1])))


def _gather(table: RayTable, values):
    flat = np.append(np.asarray(values, dtype=np.float64).ravel(), -1.0)
    return flat[table.index]  # -1 padding picks the sentinel


def rp_forward(grid: VoxelGrid, cam: Camera, table: RayTable | None = None) -> MaskImage:
    """Max-pool occupancy along every pixel ray; pixels whose ray misses the grid read 0."""
    table = table or ray_table(cam, grid.n, grid.extent)
    vals = _gather(table, grid.values)
    m = np.maximum(vals.max(axis=1), 0.0)
    return MaskImage(m.reshape(table.height, table.width))


def rp_backward(grid: VoxelGrid, cam: Camera, upstream, table: RayTable | None = None):
    """Subgradient of :func:`rp_forward`.

    Each pixel's upstream gradient goes to the nearest voxel attaining the
    ray maximum; contributions accumulate over pixels.
    """
    table = table or ray_table(cam, grid.n, grid.extent)
    up = np.asarray(upstream, dtype=np.float64).ravel()
    if up.size != table.height * table.width:
        raise ValueError("upstream gradient does not match the image size")
    vals = _gather(table, grid.values)
    hit = table.length > 0
    first = np.argmax(vals, axis=1)
    winners = table.index[np.arange(len(first)), first]
    grad = np.bincount(winners[hit], weights=up[hit], minlength=grid.n ** 3)
    return grad.reshape(grid.values.shape)


def default_depth_range(cam: Camera, extent):
    lo, hi = extent
    half = (hi - lo) / 2.0
    center = np.full(3, (lo + hi) / 2.0)
    dist = float(np.linalg.norm(cam.center - center))
    r = math.sqrt(3.0) * half
    return max(dist - r, 1e-6), dist + r


def _sample_points(grid: VoxelGrid, cam: Camera, depth_samples, depth_range):
    if depth_samples < 2:
        raise ValueError("grid sampling needs at least 2 depth samples")
    d_min, d_max = depth_range if depth_range is not None else default_depth_range(cam, grid.extent)
    if not 0 < d_min < d_max:
        raise ValueError(f"invalid depth range ({d_min}, {d_max})")
    o, d = pixel_rays(cam)
    u = np.linspace(d_min, d_max, depth_samples)
    return o[:, None, :] + u[None, :, None] * d[:, None, :]


def _trilinear(grid: VoxelGrid, pts):
    """Corner flat indices ``(..., 8)`` and weights ``(..., 8)``; weights are zero outside the extent."""
    n = grid.n
    inside = np.all((pts >= grid.lo) & (pts <= grid.hi), axis=-1)
    s = np.clip((pts - grid.lo) / grid.side - 0.5, 0.0, n - 1.0)
    i0 = np.minimum(np.floor(s), n - 2).astype(np.int64)
    f = s - i0
    idx, w = [], []
    for cx in (0, 1):
        wx = f[..., 0] if cx else 1.0 - f[..., 0]
        for cy in (0, 1):
            wy = f[..., 1] if cy else 1.0 - f[..., 1]
            for cz in (0, 1):
                wz = f[..., 2] if cz else 1.0 - f[..., 2]
                idx.append(((i0[..., 0] + cx) * n + i0[..., 1] + cy) * n + i0[..., 2] + cz)
                w.append(wx * wy * wz)
    w = np.stack(w, axis=-1) * inside[..., None]
    return np.stack(idx, axis=-1), w


def gs_forward(grid: VoxelGrid, cam: Camera, depth_samples: int = 16, depth_range=None) -> MaskImage:
    """Max over ``depth_samples`` trilinear samples spaced uniformly in ray distance."""
    pts = _sample_points(grid, cam, depth_samples, depth_range)
    idx, w = _trilinear(grid, pts)
    samples = (grid.values.ravel()[idx] * w).sum(axis=-1)
    return MaskImage(np.clip(samples.max(axis=1), 0.0, 1.0).reshape(cam.height, cam.width))


def gs_backward(grid: VoxelGrid, cam: Camera, upstream, depth_samples: int = 16, depth_range=None):
    """Route each pixel's gradient to the 8 corners of its first maximal sample."""
    up = np.asarray(upstream, dtype=np.float64).ravel()
    if up.size != cam.height * cam.width:
        raise ValueError("upstream gradient does not match the image size")
    pts = _sample_points(grid, cam, depth_samples, depth_range)
    idx, w = _trilinear(grid, pts)
    samples = (grid.values.ravel()[idx] * w).sum(axis=-1)
    best = np.argmax(samples, axis=1)
    rows = np.arange(len(best))
    bi, bw = idx[rows, best], w[rows, best]
    grad = np.bincount(bi.ravel(), weights=(bw * up[:, None]).ravel(), minlength=grid.n ** 3)
    return grad.reshape(grid.values.shape)
