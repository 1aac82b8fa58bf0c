"""Shape checks and random carving configurations shared by several test modules."""
import itertools

import numpy as np

from voxrecon.geometry import orbit_camera, project_points
from voxrecon.losses import render_views
from voxrecon.voxel import shape_pool


def cup_interior_empty(grid):
    """Center columns: a solid base run, then nothing above it."""
    v = grid.values > 0.5
    n = grid.n
    c = slice(n // 2 - 1, n // 2 + 1)
    column = v[c, c, :].any(axis=(0, 1))
    occ = np.flatnonzero(column)
    if occ.size == 0:
        return False
    base_top = occ[0]
    while base_top + 1 < n and column[base_top + 1]:
        base_top += 1
    return not column[base_top + 1:].any() and base_top + 1 < n - 1


def cup_wall_occupied(grid):
    v = grid.values > 0.5
    return bool(v[:, :, grid.n // 2].any())


def interior_column(grid):
    """Boolean mask of the voxels strictly inside a cup's wall and above its base."""
    v = grid.values > 0.5
    n = grid.n
    c = slice(n // 2 - 1, n // 2 + 1)
    column = v[c, c, :].any(axis=(0, 1))
    occ = np.flatnonzero(column)
    top = occ[0]
    while column[top + 1]:
        top += 1
    # highest wall voxel bounds the cavity
    wall_top = np.flatnonzero(v.any(axis=(0, 1)))[-1]
    m = np.zeros_like(v)
    m[c, c, top + 1:wall_top + 1] = True
    return m


CORNERS = np.array(list(itertools.product((-0.5, 0.5), repeat=3)))


def frames_grid(cam):
    u, v, _ = project_points(cam, CORNERS)
    return bool(np.all((u >= 0) & (u < cam.width) & (v >= 0) & (v < cam.height)))


def random_framing_camera(rng):
    # silhouettes must be complete: the whole grid projects inside the image
    while True:
        cam = orbit_camera(rng.uniform(0, 360), rng.uniform(-20, 70), rng.uniform(1.7, 3.0),
                           target=rng.uniform(-0.1, 0.1, 3), width=int(rng.integers(12, 40)),
                           height=int(rng.integers(12, 40)), fov_deg=rng.uniform(50, 90))
        if frames_grid(cam):
            return cam


def carve_config(seed, views=4):
    rng = np.random.default_rng(seed)
    kind = ("box", "cup", "chair_l", "thin_plate")[seed % 4]
    shape = shape_pool(seed, 1, (kind,), n=16)[0]
    return shape, render_views(shape, [random_framing_camera(rng) for _ in range(views)])
