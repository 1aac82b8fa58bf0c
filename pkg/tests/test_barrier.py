import math

import numpy as np
import pytest

from voxrecon.barrier import (G_EPS, BarrierConfig, Discriminator, PenaltyUpdate, TabularDiscriminator,
                              g_eval, penalty, penalty_and_grad, penalty_grad, update_penalty)
from voxrecon.voxel import LogitGrid, VoxelGrid, occupancy, shape_pool

import gradcheck
from tabular import tabular_fit


def random_grids(rng, count, n=16):
    return [VoxelGrid(rng.uniform(size=(n, n, n)) * (rng.uniform() < 0.5)) for _ in range(count)]


def test_init_scores_near_half(rng):
    d = Discriminator(16, seed=3)
    s = [g_eval(d, g) for g in random_grids(rng, 100)]
    assert 0.3 < min(s) and max(s) < 0.7


def test_deterministic_and_lipschitz(rng):
    d = Discriminator(16, seed=1)
    g = random_grids(rng, 1)[0]
    assert g_eval(d, g) == g_eval(d, VoxelGrid(g.values.copy()))
    bumped = VoxelGrid(np.clip(g.values + 1e-12, 0, 1))
    assert abs(g_eval(d, g) - g_eval(d, bumped)) < 1e-8


def test_shape_mismatch():
    d = Discriminator(16)
    with pytest.raises(ValueError):
        g_eval(d, VoxelGrid(np.zeros((8, 8, 8))))
    with pytest.raises(ValueError):
        Discriminator(15)


def _biased(bias):
    d = Discriminator(8, hidden=(4,), seed=0)
    d.biases[-1] = np.array([bias])
    return d


def test_penalty_extremes():
    grid = VoxelGrid(np.zeros((8, 8, 8)))
    assert g_eval(_biased(60.0), grid) == 1 - G_EPS
    assert penalty(_biased(60.0), grid, 100) == pytest.approx(-math.log(1 - 1e-7) / 100, rel=1e-6)
    assert penalty(_biased(60.0), grid, 100) < 2e-9
    assert penalty(_biased(-60.0), grid, 100) == pytest.approx(0.16118, abs=1e-5)


def test_penalty_scaling_and_monotone(rng):
    grids = random_grids(rng, 10, n=8)
    d = Discriminator(8, seed=2)
    for g in grids:
        assert penalty(d, g, 200.0) == pytest.approx(penalty(d, g, 100.0) / 2, rel=1e-15)
    pairs = sorted((g_eval(d, g), penalty(d, g, 100)) for g in grids)
    assert all(b[1] <= a[1] for a, b in zip(pairs, pairs[1:]))
    with pytest.raises(ValueError):
        penalty(d, grids[0], 0.0)


def test_zero_output_layer_zero_gradient(rng):
    d = Discriminator(8, seed=0)
    d.weights[-1] = np.zeros_like(d.weights[-1])
    assert not penalty_grad(d, LogitGrid(rng.normal(size=(8, 8, 8))), 100).any()


def test_clamped_score_gives_zero_gradient(rng):
    assert not penalty_grad(_biased(60.0), LogitGrid(rng.normal(size=(8, 8, 8))), 100).any()


@pytest.mark.parametrize("seed", range(10))
def test_penalty_grad_fd(seed):
    err, checked = gradcheck.penalty_instance(np.random.default_rng(seed), coords=30)
    assert checked == 30 and err < 1e-4


def test_descent_direction():
    rng = np.random.default_rng(7)
    for _ in range(20):
        d = Discriminator(8, hidden=(32, 16), seed=int(rng.integers(1 << 30)))
        d.weights[-1] *= 50
        lg = LogitGrid(rng.normal(size=(8, 8, 8)))
        p0, g = penalty_and_grad(d, lg, 100)
        step = 1e-4 / max(np.abs(g).max(), 1e-30)
        assert penalty(d, occupancy(LogitGrid(lg.logits - step * g)), 100) < p0


def test_gated_update_is_bit_identical(rng):
    d = Discriminator(16, seed=0)
    ones, zeros = [VoxelGrid(np.ones((16,) * 3))], [VoxelGrid(np.zeros((16,) * 3))]
    train = BarrierConfig(gate_threshold=None)
    for _ in range(200):
        update_penalty(d, zeros, ones, train, rng)
    before = [p.copy() for p in d.params()]
    _, upd = update_penalty(d, zeros, ones, BarrierConfig(), rng)
    assert upd.gated and upd.error == 0.0
    assert all(np.array_equal(a, b) for a, b in zip(before, d.params()))


def test_separability_run(rng):
    d = Discriminator(16, seed=0)
    ones, zeros = [VoxelGrid(np.ones((16,) * 3))], [VoxelGrid(np.zeros((16,) * 3))]
    cfg = BarrierConfig(gate_threshold=None)
    for _ in range(200):
        update_penalty(d, zeros, ones, cfg, rng)
    assert g_eval(d, ones[0]) > 0.9 and g_eval(d, zeros[0]) < 0.1


def test_identical_batches_ascend_on_average():
    pool = shape_pool(5, 8, ("cup", "box"), n=16)
    cfg = BarrierConfig(gate_threshold=None, sigma_noise=0.1)
    gains, errors = [], []
    for seed in range(20):
        d = Discriminator(16, seed=seed)
        rng = np.random.default_rng(seed)
        state = rng.bit_generator.state
        _, before = update_penalty(d.copy(), pool, pool, BarrierConfig(gate_threshold=0.0, lr_g=0.0), rng)
        rng.bit_generator.state = state
        _, upd = update_penalty(d, pool, pool, cfg, rng)
        assert not upd.gated
        rng.bit_generator.state = state
        _, after = update_penalty(d.copy(), pool, pool, BarrierConfig(gate_threshold=0.0, lr_g=0.0), rng)
        gains.append(after.objective - before.objective)
        errors.append(upd.error)
    assert np.mean(gains) > 0
    assert abs(np.mean(errors) - 0.5) < 0.1


def test_update_errors(rng):
    d = Discriminator(8)
    with pytest.raises(ValueError):
        update_penalty(d, [], [VoxelGrid(np.zeros((8,) * 3))], BarrierConfig(), rng)
    with pytest.raises(ValueError):
        update_penalty(d, [VoxelGrid(np.zeros((8,) * 3))], [VoxelGrid(np.zeros((4,) * 3))], BarrierConfig(), rng)


@pytest.mark.parametrize("kwargs", [dict(t=0.0), dict(gate_threshold=0.5), dict(sigma_noise=-1.0)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        BarrierConfig(**kwargs)


def test_noise_schedule():
    cfg = BarrierConfig(sigma_noise=0.2)
    assert cfg.noise_at(0, 100) == 0.2 and cfg.noise_at(50, 100) == pytest.approx(0.1)
    assert BarrierConfig(sigma_noise=0.2, anneal_noise=False).noise_at(99, 100) == 0.2


def test_tabular_optimum():
    fitted, target = tabular_fit(seed=1, steps=1500)
    assert np.abs(fitted - target).max() < 1e-3


def test_tabular_unseen_is_half():
    assert TabularDiscriminator().probability(np.zeros((4, 4, 4))) == 0.5
