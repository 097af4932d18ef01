"""Kato-decomposable potentials, magnetic 1-forms and heat-kernel Kato probes."""

import logging
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from kac_lab.common.cleaners import as_point, as_points, point_label
from kac_lab.common.seeding import AUXILIARY_STREAM, block_generator
from kac_lab.exceptions import GeometryError, NotLocallyIntegrableError
from kac_lab.geometry import Region
from kac_lab.settings.base import (
    COULOMB_CAP,
    HERMITIAN_TOL,
    KATO_QUADRATURE_N,
    KATO_REFINE_RTOL,
    KATO_TIME_NODES,
)

logger = logging.getLogger(__name__)


class Singularity(NamedTuple):
    point: np.ndarray
    exponent: float


class ScalarPotential:
    """V = V_+ - V_- evaluated pointwise on arrays of shape (..., m).

    Subclasses override ``eval`` and, where the split is not the default
    max(V, 0) / max(-V, 0), the two parts.
    """

    dimension: int
    cap: float = COULOMB_CAP
    singularities: Tuple[Singularity, ...] = ()
    label: str = "V"

    def eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=float))

    def positive_part(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(self.eval(x), 0.0)

    def negative_part(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(-self.eval(x), 0.0)

    def clamped(self, x: np.ndarray) -> np.ndarray:
        """True where evaluation hit the singularity cap."""
        return np.zeros(np.shape(x)[:-1], dtype=bool)

    @property
    def singularity_points(self) -> List[np.ndarray]:
        return [s.point for s in self.singularities]

    @property
    def lower_bound(self) -> Optional[float]:
        """Largest C with V >= -C everywhere, when known."""
        return None

    @property
    def is_zero(self) -> bool:
        return False


@dataclass(frozen=True, eq=False)
class ConstantPotential(ScalarPotential):
    value: float
    dimension: int = 1

    @property
    def label(self) -> str:
        return "constant({:g})".format(self.value)

    def eval(self, x):
        return np.full(np.shape(x)[:-1], float(self.value))

    @property
    def lower_bound(self):
        return max(-self.value, 0.0)

    @property
    def is_zero(self):
        return self.value == 0.0


@dataclass(frozen=True, eq=False)
class InversePowerPotential(ScalarPotential):
    """coefficient * |x - x0|^(-exponent), clamped at ``cap`` in modulus."""

    coefficient: float
    exponent: float
    x0: np.ndarray
    cap: float = COULOMB_CAP

    @property
    def dimension(self) -> int:
        return self.x0.shape[0]

    @property
    def singularities(self):
        return (Singularity(self.x0, self.exponent),)

    @property
    def label(self) -> str:
        return "{:g}*|x-{}|^-{:g}".format(self.coefficient, point_label(self.x0), self.exponent)

    def magnitude(self, x):
        r = np.linalg.norm(x - self.x0, axis=-1)
        with np.errstate(divide="ignore"):
            raw = np.abs(self.coefficient) * r ** (-self.exponent)
        return np.minimum(raw, self.cap)

    def clamped(self, x):
        r = np.linalg.norm(x - self.x0, axis=-1)
        with np.errstate(divide="ignore"):
            return np.abs(self.coefficient) * r ** (-self.exponent) >= self.cap

    def eval(self, x):
        return np.sign(self.coefficient) * self.magnitude(x)

    def positive_part(self, x):
        return self.magnitude(x) if self.coefficient > 0 else np.zeros(np.shape(x)[:-1])

    def negative_part(self, x):
        return self.magnitude(x) if self.coefficient < 0 else np.zeros(np.shape(x)[:-1])

    @property
    def lower_bound(self):
        return 0.0 if self.coefficient >= 0 else None


class CoulombPotential(InversePowerPotential):
    """V(x) = -Z / |x - x0|, clamped at -cap."""

    def __init__(self, Z: float, x0, cap: float = COULOMB_CAP):
        super().__init__(coefficient=-float(Z), exponent=1.0, x0=as_point(x0), cap=float(cap))

    @property
    def Z(self) -> float:
        return -self.coefficient

    @property
    def label(self) -> str:
        return "coulomb(Z={:g},x0={})".format(self.Z, point_label(self.x0))

    def __reduce__(self):
        return (CoulombPotential, (self.Z, self.x0, self.cap))


@dataclass(frozen=True, eq=False)
class IndicatorPenalty(ScalarPotential):
    """n times the indicator of the open complement of a region; barriers carry no penalty."""

    region: Region
    n: float

    @property
    def dimension(self) -> int:
        return self.region.dimension

    @property
    def label(self) -> str:
        return "penalty(n={:g})".format(self.n)

    def eval(self, x):
        return self.n * self.region.complement_interior(x).astype(float)

    def positive_part(self, x):
        return self.eval(x)

    def negative_part(self, x):
        return np.zeros(np.shape(x)[:-1])

    @property
    def lower_bound(self):
        return 0.0

    @property
    def is_zero(self):
        return self.n == 0.0


class MatrixPotential:
    """A Hermitian-matrix-valued potential on the trivial bundle R^m x C^k."""

    rank: int
    dimension: int
    label: str = "matrix"

    def eval(self, x: np.ndarray) -> np.ndarray:
        """Matrices of shape (..., rank, rank)."""
        raise NotImplementedError

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=float))

    @property
    def lower_bound(self) -> Optional[float]:
        return None

    def clamped(self, x: np.ndarray) -> np.ndarray:
        return np.zeros(np.shape(x)[:-1], dtype=bool)


def _hermitian(matrix, tol: float = HERMITIAN_TOL) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise GeometryError("A matrix potential needs a square matrix, got shape {}".format(matrix.shape))
    if np.max(np.abs(matrix - matrix.conj().T)) > tol:
        raise GeometryError("Matrix potential is not Hermitian to within {:g}".format(tol))
    return 0.5 * (matrix + matrix.conj().T)


@dataclass(frozen=True, eq=False)
class ConstantMatrixPotential(MatrixPotential):
    matrix: np.ndarray
    dimension: int = 1

    @property
    def rank(self) -> int:
        return self.matrix.shape[0]

    @property
    def label(self) -> str:
        return "matrix_constant(k={})".format(self.rank)

    def eval(self, x):
        return np.broadcast_to(self.matrix, np.shape(x)[:-1] + self.matrix.shape)

    @property
    def lower_bound(self):
        return max(-float(np.linalg.eigvalsh(self.matrix).min()), 0.0)


@dataclass(frozen=True, eq=False)
class PiecewiseMatrixPotential(MatrixPotential):
    """``inside`` on a region, ``outside`` off it."""

    region: Region
    inside: np.ndarray
    outside: np.ndarray

    @property
    def dimension(self) -> int:
        return self.region.dimension

    @property
    def rank(self) -> int:
        return self.inside.shape[0]

    @property
    def label(self) -> str:
        return "matrix_piecewise(k={})".format(self.rank)

    def eval(self, x):
        mask = self.region.membership(x)[..., None, None]
        return np.where(mask, self.inside, self.outside)

    @property
    def lower_bound(self):
        low = min(np.linalg.eigvalsh(self.inside).min(), np.linalg.eigvalsh(self.outside).min())
        return max(-float(low), 0.0)


class GaugeForm:
    """A real 1-form eta = sum eta_j dx^j, evaluated as (..., m) component arrays."""

    dimension: int
    label: str = "eta"

    def components(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        return self.components(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class LinearGauge(GaugeForm):
    """eta = B/2 (-y dx + x dy): constant magnetic field B in the (x, y) plane."""

    B: float
    dimension: int = 2

    @property
    def label(self) -> str:
        return "gauge_linear(B={:g})".format(self.B)

    def components(self, x):
        eta = np.zeros_like(x)
        eta[..., 0] = -0.5 * self.B * x[..., 1]
        eta[..., 1] = 0.5 * self.B * x[..., 0]
        return eta


@dataclass(frozen=True, eq=False)
class ExactLinearGauge(GaugeForm):
    """eta = d(a . x), a pure gauge."""

    a: np.ndarray

    @property
    def dimension(self) -> int:
        return self.a.shape[0]

    @property
    def label(self) -> str:
        return "gauge_exact(a={})".format(point_label(self.a))

    def components(self, x):
        return np.broadcast_to(self.a, np.shape(x)).copy()

    def phi(self, x):
        return np.asarray(x, dtype=float) @ self.a


def constant(c: float, dimension: int = 1) -> ConstantPotential:
    return ConstantPotential(float(c), dimension)


def coulomb(Z: float, x0, cap: float = COULOMB_CAP) -> CoulombPotential:
    if Z <= 0:
        raise ValueError("Coulomb charge Z must be positive, got {}".format(Z))
    return CoulombPotential(Z, x0, cap)


def inverse_power(exponent: float, x0, coefficient: float = 1.0, cap: float = COULOMB_CAP):
    return InversePowerPotential(float(coefficient), float(exponent), as_point(x0), float(cap))


def indicator_penalty(region: Region, n: float) -> IndicatorPenalty:
    if n < 0:
        raise ValueError("Penalty strength must be nonnegative, got {}".format(n))
    return IndicatorPenalty(region, float(n))


def matrix_constant(matrix, dimension: int = 1) -> ConstantMatrixPotential:
    return ConstantMatrixPotential(_hermitian(matrix), dimension)


def matrix_piecewise(region: Region, inside, outside) -> PiecewiseMatrixPotential:
    inside, outside = _hermitian(inside), _hermitian(outside)
    if inside.shape != outside.shape:
        raise GeometryError("Both pieces of a matrix potential need the same rank")
    return PiecewiseMatrixPotential(region, inside, outside)


def gauge_linear(B: float) -> LinearGauge:
    return LinearGauge(float(B))


def gauge_exact_linear(a) -> ExactLinearGauge:
    return ExactLinearGauge(as_point(a))


def decompose(V: ScalarPotential) -> Tuple[Callable, Callable]:
    """The stored parts (V_+, V_-) of a Kato decomposition V = V_+ - V_-."""
    return V.positive_part, V.negative_part


def _check_integrable(w: ScalarPotential, dimension: int):
    for singularity in w.singularities:
        if singularity.exponent >= dimension:
            raise NotLocallyIntegrableError(
                "{} is not locally integrable in R^{}: exponent {:g} at {}".format(
                    w.label, dimension, singularity.exponent, point_label(singularity.point)
                )
            )


def _probe_setup(w, t, probe_points, quadrature_n):
    if t <= 0:
        raise ValueError("Kato probes need t > 0, got {}".format(t))
    if quadrature_n < 1000:
        raise ValueError("quadrature_n must be at least 1000, got {}".format(quadrature_n))
    probes = as_points(probe_points, w.dimension)
    _check_integrable(w, w.dimension)
    return probes


def kato_norm(
    w: ScalarPotential,
    t: float,
    probe_points: Sequence,
    quadrature_n: int = KATO_QUADRATURE_N,
    seed: int = 0,
) -> float:
    """max over probes x of  int p(t, x, y) |w(y)| dy  with the Gaussian kernel of generator Delta.

    The kernel is sampled directly (y = x + sqrt(2t) Z), so the estimate is an
    importance-sampled average of |w|; it is deterministic given the seed.
    """
    probes = _probe_setup(w, t, probe_points, quadrature_n)
    z = block_generator(seed, 0, AUXILIARY_STREAM).standard_normal((quadrature_n, w.dimension))
    values = [np.mean(np.abs(w(x + np.sqrt(2.0 * t) * z))) for x in probes]
    return float(max(values))


class KatoEstimate(NamedTuple):
    value: float
    coarse_value: float
    converged: bool


def _kato_time_integral(w, t, probes, z, nodes):
    # s = t * sigma^2 removes the s^(-1/2) singularity of Coulomb-type terms
    sigma, weights = np.polynomial.legendre.leggauss(nodes)
    sigma = 0.5 * (sigma + 1.0)
    weights = 0.5 * weights
    best = 0.0
    for x in probes:
        total = 0.0
        for s_k, w_k in zip(sigma, weights):
            y = x + np.sqrt(2.0 * t) * s_k * z
            total += w_k * 2.0 * t * s_k * np.mean(np.abs(w(y)))
        best = max(best, total)
    return best


def kato_modulus(
    w: ScalarPotential,
    t: float,
    probe_points: Sequence,
    quadrature_n: int = KATO_QUADRATURE_N,
    time_nodes: int = KATO_TIME_NODES,
    seed: int = 0,
    rtol: float = KATO_REFINE_RTOL,
) -> KatoEstimate:
    """max over probes of  int_0^t int p(s, x, y) |w(y)| dy ds.

    Its vanishing as t -> 0 characterizes the Kato class. Common Gaussian
    samples are shared across time nodes, and the node count is doubled once;
    an estimate that moves by more than ``rtol`` is reported as not converged.
    """
    probes = _probe_setup(w, t, probe_points, quadrature_n)
    z = block_generator(seed, 0, AUXILIARY_STREAM).standard_normal((quadrature_n, w.dimension))
    coarse = _kato_time_integral(w, t, probes, z, time_nodes)
    fine = _kato_time_integral(w, t, probes, z, 2 * time_nodes)
    converged = abs(fine - coarse) <= rtol * max(abs(fine), 1e-300)
    if not converged:
        logger.warning(
            "Kato modulus of %s at t=%g did not settle under refinement (%g -> %g)",
            w.label,
            t,
            coarse,
            fine,
        )
    return KatoEstimate(float(fine), float(coarse), bool(converged))
