import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from kac_lab.exceptions import GeometryError, NotLocallyIntegrableError
from kac_lab.geometry import make_ball, minus_segment
from kac_lab.potentials import (
    constant,
    coulomb,
    decompose,
    gauge_exact_linear,
    gauge_linear,
    indicator_penalty,
    inverse_power,
    kato_modulus,
    kato_norm,
    matrix_constant,
    matrix_piecewise,
)

origin = np.zeros(3)


def test_coulomb_values():
    assert coulomb(1, origin)(np.array([1.0, 0.0, 0.0])) == -1.0
    assert coulomb(2, origin)(np.array([0.0, 0.0, 2.0])) == -1.0
    V = coulomb(1, origin, cap=1e6)
    assert V(origin) == -1e6
    assert V.clamped(origin[None, :])[0]
    with pytest.raises(ValueError):
        coulomb(0, origin)


def test_decompose():
    pos, neg = decompose(constant(-3.0, 3))
    assert pos(origin[None, :])[0] == 0.0 and neg(origin[None, :])[0] == 3.0
    pos, neg = decompose(constant(4.0, 3))
    assert pos(origin[None, :])[0] == 4.0 and neg(origin[None, :])[0] == 0.0
    pos, neg = decompose(coulomb(1, origin))
    x = np.array([[2.0, 0.0, 0.0]])
    assert pos(x)[0] == 0.0 and neg(x)[0] == 0.5


def test_indicator_penalty():
    disk = make_ball((0, 0), 1)
    x = np.array([[0.0, 0.0], [2.0, 0.0]])
    assert indicator_penalty(disk, 0.0).is_zero
    assert indicator_penalty(disk, 5.0)(x).tolist() == [0.0, 5.0]
    with pytest.raises(ValueError):
        indicator_penalty(disk, -1.0)


def test_matrix_potentials():
    with pytest.raises(GeometryError):
        matrix_constant([[1.0, 2.0], [0.0, 1.0]])
    M = matrix_constant([[1.0, 0.5j], [-0.5j, 2.0]])
    assert M.rank == 2
    assert M(np.zeros((4, 1))).shape == (4, 2, 2)
    piecewise = matrix_piecewise(make_ball((0,), 1), np.eye(2), 3 * np.eye(2))
    values = piecewise(np.array([[0.0], [2.0]]))
    assert np.allclose(values[0], np.eye(2)) and np.allclose(values[1], 3 * np.eye(2))


def test_gauges():
    eta = gauge_linear(2.0)
    assert np.allclose(eta(np.array([[1.0, 3.0]])), [[-3.0, 1.0]])
    exact = gauge_exact_linear([1.0, -2.0])
    assert np.allclose(exact(np.zeros((3, 2))), [[1.0, -2.0]] * 3)
    assert exact.phi(np.array([2.0, 1.0])) == 0.0


def test_kato_norm_constant():
    for t in [1e-5, 1e-2, 1.0]:
        assert abs(kato_norm(constant(2.5, 3), t, [origin]) - 2.5) < 1e-6


def test_kato_norm_coulomb():
    # E |sqrt(2t) Z|^-1 = 1 / sqrt(pi t) for a 3-D standard normal Z
    t = 0.1
    value = kato_norm(coulomb(1, origin), t, [origin], quadrature_n=16384)
    assert abs(value - 1.0 / math.sqrt(math.pi * t)) < 0.05 / math.sqrt(math.pi * t)


def test_kato_norm_rejects_non_integrable():
    with pytest.raises(NotLocallyIntegrableError):
        kato_norm(inverse_power(2.0, (0.0, 0.0)), 0.1, [(0.0, 0.0)])
    with pytest.raises(NotLocallyIntegrableError):
        kato_modulus(inverse_power(3.0, origin), 0.1, [origin])


kato_times = [1e-1, 1e-3, 1e-5]
coulomb_modulus = [kato_modulus(coulomb(1, origin), t, [origin]) for t in kato_times]
# unclamped, so the probe sees the exact scaling of |x|^-2
inverse_square = inverse_power(2.0, origin, cap=1e300)
inverse_square_modulus = [kato_modulus(inverse_square, t, [origin]) for t in kato_times]


def test_kato_modulus_coulomb_decreases():
    values = [estimate.value for estimate in coulomb_modulus]
    assert values[0] > values[1] > values[2] > 0
    assert all(estimate.converged for estimate in coulomb_modulus)


def test_kato_modulus_coulomb_closed_form():
    for t, estimate in zip(kato_times, coulomb_modulus):
        exact = 2.0 * math.sqrt(t / math.pi)
        assert abs(estimate.value - exact) < 0.05 * exact


def test_kato_modulus_inverse_square_floor():
    values = [estimate.value for estimate in inverse_square_modulus]
    assert min(values) > 0.5
    # exact scaling invariance with common samples
    assert np.allclose(values, values[0], rtol=1e-9)
    assert not any(estimate.converged for estimate in inverse_square_modulus)


def test_coulomb_rotation_invariance():
    V = coulomb(1, origin)
    x = np.random.default_rng(0).normal(size=(50, 3))
    rotations = Rotation.random(1000, 0).as_matrix()
    rotated = np.einsum("rij,pj->rpi", rotations, x)
    assert rotated.shape == (1000, 50, 3)
    assert np.allclose(V(rotated), V(x)[None, :], rtol=1e-12, atol=0.0)


def test_decompose_recombines():
    x = np.random.default_rng(1).normal(size=(200, 3))
    potentials = [
        constant(-3.0, 3),
        constant(4.0, 3),
        coulomb(1, origin),
        inverse_power(1.5, origin, -2.0),
        inverse_power(0.5, origin),
        indicator_penalty(make_ball(origin, 1), 7.0),
    ]
    for V in potentials:
        pos, neg = decompose(V)
        values = V(x)
        assert np.abs(pos(x) - neg(x) - values).max() <= 1e-12 * max(1.0, np.abs(values).max())
        assert (pos(x) >= 0).all() and (neg(x) >= 0).all()


def test_kato_norm_bounded_by_sup():
    penalty = indicator_penalty(make_ball(origin, 1), 5.0)
    capped = coulomb(1, origin, cap=10.0)
    for t in (1e-3, 0.1, 1.0):
        assert kato_norm(penalty, t, [origin, (2.0, 0.0, 0.0)]) <= 5.0
        assert kato_norm(capped, t, [origin]) <= 10.0


def test_penalty_skips_barriers():
    slit_plane = minus_segment((-1, 0), (1, 0))
    on_segment = np.array([[0.0, 0.0], [0.5, 0.0], [-1.0, 0.0]])
    assert (indicator_penalty(slit_plane, 3.0)(on_segment) == 0.0).all()
