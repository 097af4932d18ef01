import math

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.stats import ks_2samp

from kac_lab.common.seeding import path_seed
from kac_lab.exceptions import GeometryError
from kac_lab.geometry import make_box, make_halfspace, minus_segment, whole_space
from kac_lab.paths import (
    accumulate_functionals,
    exit_time,
    n_steps,
    penetration_time,
    sample_path,
    simulate_block,
    simulate_ensemble,
    stopping_times,
)
from kac_lab.potentials import constant, gauge_exact_linear, matrix_constant

half_line = make_halfspace([1.0], 0.0)
slit_plane = minus_segment((-1, 0), (1, 0))
unit_square = make_box((0, 0), (1, 1))


def test_n_steps():
    assert n_steps(0.25, 1e-3) == 250
    assert n_steps(1.0, 0.3) == 4
    with pytest.raises(ValueError):
        n_steps(1e-4, 1e-3)
    with pytest.raises(ValueError):
        n_steps(1.0, 0.0)


def test_single_step_path():
    path = sample_path([0.0, 0.0], 0.01, 0.01, seed=1)
    assert path.positions.shape == (2, 2)
    assert (path.start == 0.0).all()


def test_same_seed_same_path():
    a = sample_path([0.0], 1.0, 1e-3, seed=7)
    b = sample_path([0.0], 1.0, 1e-3, seed=7)
    c = sample_path([0.0], 1.0, 1e-3, seed=8)
    assert (a.positions == b.positions).all()
    assert not (a.positions == c.positions).all()


def test_increment_variance():
    h = 1e-3
    path = sample_path([0.0, 0.0], 100.0, h, seed=3)
    ratio = np.var(np.diff(path.positions, axis=0), axis=0) / (2 * h)
    assert np.all(np.abs(ratio - 1.0) < 0.02)


def test_whole_space_never_exits():
    path = sample_path([0.0, 0.0], 1.0, 1e-3, seed=4)
    assert stopping_times(path, whole_space(2)) == (math.inf, math.inf)


def test_start_outside():
    path = sample_path([-1.0], 0.1, 1e-3, seed=5)
    with pytest.raises(GeometryError):
        exit_time(path, half_line)
    path = sample_path([0.0, 0.0], 0.1, 1e-3, seed=5)
    with pytest.raises(GeometryError):
        penetration_time(path, slit_plane)


slit_times = [
    stopping_times(sample_path([0.0, 0.5], 1.0, 1e-3, seed), slit_plane)
    for seed in (path_seed(11, j) for j in range(200))
]


def test_segment_never_penetrated():
    assert all(beta == math.inf for _, beta in slit_times)


def test_segment_is_hit():
    hits = sum(alpha < math.inf for alpha, _ in slit_times)
    assert hits > 50


def test_half_line_penetration_follows_exit():
    for j in range(200):
        seed = path_seed(12, j)
        path = sample_path([0.3], 0.5, 1e-3, seed)
        alpha, beta = stopping_times(path, half_line)
        assert alpha <= beta
        if alpha < math.inf:
            assert beta < math.inf


def test_square_exit_and_penetration_distributions():
    horizon = 0.5
    times = np.array(
        [
            stopping_times(sample_path([0.5, 0.5], horizon, 1e-3, path_seed(13, j)), unit_square)
            for j in range(1000)
        ]
    )
    times[np.isinf(times)] = horizon + 1.0
    assert ks_2samp(times[:, 0], times[:, 1]).statistic < 0.02


def test_functionals_trivial():
    path = sample_path([0.0, 0.0], 0.5, 1e-3, seed=14)
    state = accumulate_functionals(path, None)
    assert state.v_integral == 0.0
    assert (state.ordered_exp == np.eye(1)).all()
    assert state.phase == 1.0


def test_functionals_constant_scalar():
    path = sample_path([0.0], 0.5, 1e-3, seed=15)
    state = accumulate_functionals(path, constant(2.0))
    assert abs(state.v_integral - 1.0) < 1e-12
    assert abs(state.ordered_exp[0, 0] - math.exp(-1.0)) < 1e-12


def test_functionals_constant_matrix():
    M = np.array([[1.0, 0.5 - 0.25j], [0.5 + 0.25j, -0.5]])
    path = sample_path([0.0], 0.7, 1e-3, seed=16)
    state = accumulate_functionals(path, matrix_constant(M))
    assert np.abs(state.ordered_exp - expm(-0.7 * M)).max() < 1e-8


def test_exact_gauge_phase():
    a = np.array([0.3, -1.2])
    path = sample_path([0.1, 0.2], 1.0, 1e-3, seed=17)
    state = accumulate_functionals(path, None, gauge_exact_linear(a))
    expected = np.exp(-1j * a @ (path.positions[-1] - path.positions[0]))
    assert abs(state.phase - expected) < 1e-10


def test_functionals_partial_horizon():
    path = sample_path([0.0], 1.0, 1e-2, seed=18)
    state = accumulate_functionals(path, constant(1.0), t=0.5)
    assert abs(state.v_integral - 0.5) < 1e-12
    with pytest.raises(ValueError):
        accumulate_functionals(path, constant(1.0), t=2.0)


def test_block_determinism():
    a = simulate_block([0.5], 0.1, 1e-3, 21, 3, 64, region=half_line)
    b = simulate_block([0.5], 0.1, 1e-3, 21, 3, 64, region=half_line)
    c = simulate_block([0.5], 0.1, 1e-3, 21, 4, 64, region=half_line)
    assert (a.final_positions == b.final_positions).all()
    assert np.array_equal(a.alpha, b.alpha)
    assert not (a.final_positions == c.final_positions).all()


def test_block_without_region():
    block = simulate_block([0.0, 0.0], 0.1, 1e-3, 22, 0, 32)
    assert block.survived_exit.all() and block.survived_penetration.all()
    assert (block.occupation == 0.0).all()
    assert (block.phase == 1.0).all()


def test_antithetic_block():
    block = simulate_block([0.0], 0.1, 1e-3, 23, 0, 64, antithetic=True)
    assert np.allclose(block.final_positions[:32], -block.final_positions[32:])


def test_block_stopping_order():
    block = simulate_block([0.0, 0.5], 1.0, 1e-3, 24, 0, 256, region=slit_plane)
    assert (block.alpha <= block.beta).all()
    assert block.survived_penetration.all()
    assert not block.survived_exit.all()


def test_ensemble_blocks():
    blocks = list(simulate_ensemble([0.0], 0.01, 1e-3, 5000, 25, 2048))
    assert [block.index for block in blocks] == [0, 1, 2]
    assert [block.size for block in blocks] == [2048, 2048, 904]
