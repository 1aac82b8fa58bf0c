import math

import numpy as np
import pytest

from voxrecon.barrier import BarrierConfig, Discriminator, penalty_grad
from voxrecon.datasets import ring_cameras
from voxrecon.geometry import orbit_camera
from voxrecon.losses import ViewSet, render_views, reproj_grad, reproj_loss
from voxrecon.metrics import iou
from voxrecon.optim import AdamState, adam_step
from voxrecon.projection import MaskImage, rp_forward
from voxrecon.solver import (LogRow, SolverConfig, ViewpointSearch, estimate_viewpoint, reconstruct,
                             reconstruct_unconstrained, viewpoint_scores)
from voxrecon.voxel import LogitGrid, VoxelGrid, gen_shape, occupancy, shape_pool

from helpers import interior_column


@pytest.fixture(scope="module")
def cup_one_view():
    cup = gen_shape("cup", 16)
    return cup, render_views(cup, ring_cameras(1))


def test_zero_iterations_is_half(cup_one_view):
    _, views = cup_one_view
    r = reconstruct_unconstrained(views, SolverConfig(iterations=0, n=16))
    assert np.all(r.grid.values == 0.5) and r.log == []


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(iterations=-1)
    with pytest.raises(ValueError):
        SolverConfig(lr_f=0.0)


def test_lr_schedule_exact():
    cfg = SolverConfig()
    assert cfg.lr(9999) == 1e-2 and cfg.lr(10000) == 1e-3 and cfg.lr(30000) == 1e-4


def test_empty_pool_and_views(cup_one_view):
    _, views = cup_one_view
    with pytest.raises(ValueError):
        reconstruct(views, [], SolverConfig(iterations=1, n=16))
    with pytest.raises(ValueError):
        reconstruct_unconstrained(ViewSet(()), SolverConfig(iterations=1, n=16))


def test_pool_resolution_mismatch(cup_one_view):
    _, views = cup_one_view
    with pytest.raises(ValueError):
        reconstruct(views, [gen_shape("cup", 8)], SolverConfig(iterations=1, n=16))


def test_box_from_two_rings():
    # one +30 degree ring cannot carve below the box, so half the views look up
    box = gen_shape("box", 16, (0.6, 0.5, 0.4))
    cams = (ring_cameras(12, width=48, height=48)
            + ring_cameras(12, elevation=-30.0, azimuth_offset=15.0, width=48, height=48))
    r = reconstruct_unconstrained(render_views(box, cams), SolverConfig(iterations=300, n=16))
    assert iou(r.grid, box) > 0.8


def test_single_view_keeps_cup_cavity(cup_one_view):
    cup, views = cup_one_view
    r = reconstruct_unconstrained(views, SolverConfig(iterations=300, n=16))
    assert (r.grid.values[interior_column(cup)] >= 0.4).all()


def test_barrier_pulls_toward_pool(cup_one_view):
    cup, views = cup_one_view
    cfg = SolverConfig(iterations=300, n=16, seed=0)
    barrier = reconstruct(views, [cup], cfg, BarrierConfig(t=1.0)).grid
    plain = reconstruct_unconstrained(views, cfg).grid
    assert iou(barrier, cup) > iou(plain, cup)


def test_huge_t_matches_unconstrained(cup_one_view):
    _, views = cup_one_view
    cfg = SolverConfig(iterations=150, n=16)
    a = reconstruct(views, shape_pool(0, 4, n=16), cfg, BarrierConfig(t=1e12))
    b = reconstruct_unconstrained(views, cfg)
    assert abs(a.log[-1].reproj_loss - b.log[-1].reproj_loss) < 1e-3


def test_deterministic_and_finite_logs(cup_one_view):
    _, views = cup_one_view
    cfg = SolverConfig(iterations=60, n=16, seed=4)
    pool = shape_pool(1, 5, n=16)
    a = reconstruct(views, pool, cfg, BarrierConfig(gate_threshold=None))
    b = reconstruct(views, pool, cfg, BarrierConfig(gate_threshold=None))
    assert a.grid == b.grid and [r.csv() for r in a.log] == [r.csv() for r in b.log]
    assert len(a.log) == 60 and [r.iteration for r in a.log] == list(range(60))
    assert all(math.isfinite(r.reproj_loss + r.penalty) for r in a.log)


def test_frozen_discriminator_regression(cup_one_view):
    # the solver with a frozen discriminator equals a hand-written loop against it
    _, views = cup_one_view
    cfg = SolverConfig(iterations=40, n=16, seed=2)
    bcfg = BarrierConfig(t=10.0)
    d = Discriminator(16, seed=9)
    d.weights[-1] = d.weights[-1] * 30
    frozen = [p.copy() for p in d.params()]
    r = reconstruct(views, shape_pool(0, 3, n=16), cfg, bcfg, discriminator=d, freeze_discriminator=True)
    assert all(np.array_equal(a, b) for a, b in zip(frozen, d.params()))
    assert all(row.gated for row in r.log)
    lg = LogitGrid.zeros(16)
    state = AdamState.like(lg.logits)
    for it in range(40):
        g = reproj_grad(lg, views) + penalty_grad(d, lg, bcfg.t)
        new, state = adam_step(state, lg.logits, g, cfg.lr(it))
        lg = LogitGrid(new)
    assert r.grid == occupancy(lg)


def test_log_row_csv():
    row = LogRow(3, 0.5, 0.25, 0.125, True, 0.01)
    assert row.csv() == "3,0.5,0.25,0.125,1,0.01"


# viewpoint estimation

@pytest.fixture(scope="module")
def cup16():
    return gen_shape("cup", 16)


def test_on_grid_pose_recovered(cup16):
    search = ViewpointSearch.grid(10)
    mask = rp_forward(cup16, search.camera(3, 4, 5))
    cam, bins, score = estimate_viewpoint(mask, cup16, 10)
    assert score == 0.0
    assert np.array_equal(rp_forward(cup16, cam).values, mask.values)


def test_between_bins_pose_within_one_bin():
    ref = gen_shape("chair_l", 16)
    # halfway between bins in every coordinate
    cam = orbit_camera(3.5 * 36 + 5, 4.5 * 60 / 9, 1.8 + 5.5 * 1.2 / 9, target=(0, 0, 0), width=32, height=32)
    _, (a, e, k), _ = estimate_viewpoint(rp_forward(ref, cam), ref, 10)
    assert abs(a - 3.64) <= 1 and abs(e - 4.5) <= 1 and abs(k - 5.5) <= 1


def test_empty_mask_prefers_farthest(cup16):
    mask = MaskImage(np.zeros((32, 32)))
    search = ViewpointSearch.grid(10)
    scores = viewpoint_scores(mask, cup16, search)
    _, bins, score = estimate_viewpoint(mask, cup16, 10)
    assert bins == np.unravel_index(int(np.argmin(scores)), scores.shape)
    assert bins[2] == 9 and score == scores.min()
    # per orientation, moving away never grows the silhouette
    assert (np.diff(scores, axis=2) <= 0).all()


def test_bins_validation(cup16):
    with pytest.raises(ValueError):
        estimate_viewpoint(MaskImage(np.zeros((32, 32))), cup16, 1)
