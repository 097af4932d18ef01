"""Named, picklable test functions f for the semigroup estimators."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from kac_lab.common.cleaners import as_point, point_label


class Observable:
    label = "f"
    rank = 1

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class One(Observable):
    label = "one"

    def __call__(self, x):
        return np.ones(np.shape(x)[:-1])


@dataclass(frozen=True, eq=False)
class SinProduct(Observable):
    """prod_i sin(pi (x_i - lo_i) / (hi_i - lo_i)), the first Dirichlet mode of a box."""

    lo: np.ndarray
    hi: np.ndarray

    @property
    def label(self):
        return "sin_mode({},{})".format(point_label(self.lo), point_label(self.hi))

    def __call__(self, x):
        return np.prod(np.sin(np.pi * (x - self.lo) / (self.hi - self.lo)), axis=-1)


@dataclass(frozen=True, eq=False)
class ExpRadial(Observable):
    """exp(-rate |x - x0|)."""

    rate: float
    x0: np.ndarray

    @property
    def label(self):
        return "exp_radial({:g},{})".format(self.rate, point_label(self.x0))

    def __call__(self, x):
        return np.exp(-self.rate * np.linalg.norm(x - self.x0, axis=-1))


@dataclass(frozen=True, eq=False)
class PlaneWave(Observable):
    """exp(i a . x) times another observable."""

    a: np.ndarray
    base: Observable = One()

    @property
    def label(self):
        return "exp(i{}.x)*{}".format(point_label(self.a), self.base.label)

    def __call__(self, x):
        return np.exp(1j * (x @ self.a)) * self.base(x)


@dataclass(frozen=True, eq=False)
class ConstantVector(Observable):
    """A constant section of the trivial bundle, for matrix potentials."""

    vector: np.ndarray

    @property
    def rank(self):
        return self.vector.shape[0]

    @property
    def label(self):
        return "vector({})".format(point_label(np.abs(self.vector)))

    def __call__(self, x):
        return np.broadcast_to(self.vector, np.shape(x)[:-1] + self.vector.shape).astype(complex)


def sin_mode(lo, hi) -> SinProduct:
    return SinProduct(as_point(lo), as_point(hi))


def exp_radial(rate: float, x0) -> ExpRadial:
    return ExpRadial(float(rate), as_point(x0))


def plane_wave(a, base: Optional[Observable] = None) -> PlaneWave:
    return PlaneWave(as_point(a), base or One())


def constant_vector(v) -> ConstantVector:
    return ConstantVector(np.asarray(v, dtype=complex))
