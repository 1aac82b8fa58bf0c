import numpy as np
import pytest

from voxrecon.baselines import carve, nn_retrieve
from voxrecon.datasets import ring_cameras
from voxrecon.geometry import orbit_camera
from voxrecon.losses import ViewSet, render_views
from voxrecon.metrics import iou
from voxrecon.projection import MaskImage
from voxrecon.voxel import VoxelGrid, binarize, gen_shape, shape_pool

from helpers import carve_config, interior_column


@pytest.mark.parametrize("seed", range(10))
def test_superset_and_antitone(seed):
    shape, views = carve_config(seed)
    inside = shape.values > 0.5
    prev = None
    for m in range(1, len(views) + 1):
        hull = carve(16, ViewSet(views.views[:m])).values > 0.5
        assert not (inside & ~hull).any()
        if prev is not None:
            assert not (hull & ~prev).any()
        prev = hull


def test_all_foreground_keeps_visible_voxels():
    cam = orbit_camera(30, 20, 2.2, target=(0, 0, 0), width=16, height=16)
    hull = carve(8, ViewSet(((cam, MaskImage(np.ones((16, 16)))),)))
    assert hull.count() == 512


def test_all_background_removes_observed_voxels():
    cam = orbit_camera(30, 20, 2.2, target=(0, 0, 0), width=48, height=48)
    hull = carve(8, ViewSet(((cam, MaskImage(np.zeros((48, 48)))),)))
    assert hull.count() == 0


def test_unobserved_subpixel_voxels_survive():
    # at 16x16 the 8^3 voxels are under a pixel wide; ones no pixel ray crosses are kept
    from voxrecon.projection import ray_table
    cam = orbit_camera(30, 20, 2.2, target=(0, 0, 0), width=16, height=16)
    hull = carve(8, ViewSet(((cam, MaskImage(np.zeros((16, 16)))),)))
    t = ray_table(cam, 8, (-0.5, 0.5))
    observed = np.zeros(512, dtype=bool)
    observed[t.index[t.index >= 0]] = True
    np.testing.assert_array_equal(hull.values.ravel() > 0.5, ~observed)


def test_cup_hull_keeps_concavity():
    cup = gen_shape("cup", 16)
    views = render_views(cup, ring_cameras(24))
    hull = carve(16, views)
    assert (hull.values[interior_column(cup)] == 1).all()
    inter = np.logical_and(hull.values > 0.5, cup.values > 0.5).sum()
    union = np.logical_or(hull.values > 0.5, cup.values > 0.5).sum()
    assert iou(hull, cup) == inter / union < 1


def test_carve_idempotent_and_empty():
    shape, views = carve_config(3)
    assert carve(16, views) == carve(16, views)
    with pytest.raises(ValueError):
        carve(16, ViewSet(()))


def test_nn_exact_member():
    pool = shape_pool(2, 10, ("box", "cup"))
    idx, grid = nn_retrieve(pool[6], pool)
    assert idx == 6 and grid == pool[6] and iou(grid, pool[6]) == 1.0


def test_nn_all_zero_pred_returns_first():
    pool = shape_pool(2, 10, ("box", "cup"))
    assert nn_retrieve(VoxelGrid(np.zeros((16, 16, 16))), pool)[0] == 0


def test_nn_matches_scan(rng):
    pool = shape_pool(9, 20, ("box", "cup", "chair_l"))
    for _ in range(10):
        pred = VoxelGrid(rng.uniform(size=(16, 16, 16)) * (pool[rng.integers(20)].values * 0.6 + 0.3))
        scores = [iou(pred, g) for g in pool]
        best = max(range(20), key=lambda k: (scores[k], -k))
        assert nn_retrieve(pred, pool)[0] == best


def test_nn_permutation_covariant(rng):
    pool = shape_pool(4, 12, ("box", "chair_l"))
    pred = VoxelGrid(rng.uniform(size=(16, 16, 16)) * pool[5].values)
    idx, grid = nn_retrieve(pred, pool)
    perm = rng.permutation(12)
    idx2, grid2 = nn_retrieve(pred, [pool[k] for k in perm])
    assert iou(pred, grid2) == iou(pred, grid)


def test_nn_errors():
    with pytest.raises(ValueError):
        nn_retrieve(VoxelGrid(np.zeros((8, 8, 8))), [])
    with pytest.raises(ValueError):
        nn_retrieve(VoxelGrid(np.zeros((8, 8, 8))), [VoxelGrid(np.zeros((4, 4, 4)))])
