"""Feynman-Kac semigroups on a region, three ways, and the checks built on them.

``dirichlet_semigroup`` kills paths at the exit time, ``penetration_semigroup``
at the penetration time, and ``penalized_semigroup`` weights unstopped paths by
exp(-n * time spent in the complement). The region is Kac regular exactly
when the first two agree for every x and t.
"""

import logging
import math
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import erf

from kac_lab.common.cleaners import as_point, point_label
from kac_lab.common.seeding import AUXILIARY_STREAM, block_generator, path_seed
from kac_lab.common.stats import RunningMoments
from kac_lab.estimators import (
    DirichletEstimator,
    FreeEstimator,
    KacGapEstimator,
    PenalizedEstimator,
    PenetrationEstimator,
    SemigroupEstimate,
)
from kac_lab.exceptions import GeometryError
from kac_lab.geometry import Region, ball_contained, make_ball, make_halfspace, uniform_sphere
from kac_lab.observables import Observable
from kac_lab.paths import Potential, simulate_block, simulate_ensemble
from kac_lab.potentials import GaugeForm
from kac_lab.settings.base import BLOCK_SIZE

logger = logging.getLogger(__name__)


def dirichlet_semigroup(
    region: Region,
    V: Optional[Potential],
    eta: Optional[GaugeForm],
    f: Optional[Observable],
    x,
    t: float,
    N: int,
    h: float,
    seed: int,
    workers: int = 1,
    antithetic: bool = False,
    block_size: int = BLOCK_SIZE,
) -> SemigroupEstimate:
    estimator = DirichletEstimator(region, V, eta, f, block_size=block_size, antithetic=antithetic)
    return estimator.estimate(x, t, N, h, seed, workers)


def penetration_semigroup(
    region: Region,
    V: Optional[Potential],
    eta: Optional[GaugeForm],
    f: Optional[Observable],
    x,
    t: float,
    N: int,
    h: float,
    seed: int,
    workers: int = 1,
    antithetic: bool = False,
    block_size: int = BLOCK_SIZE,
) -> SemigroupEstimate:
    estimator = PenetrationEstimator(region, V, eta, f, block_size=block_size, antithetic=antithetic)
    return estimator.estimate(x, t, N, h, seed, workers)


def penalized_semigroup(
    region: Region,
    V: Optional[Potential],
    eta: Optional[GaugeForm],
    f: Optional[Observable],
    x,
    t: float,
    n: float,
    N: int,
    h: float,
    seed: int,
    workers: int = 1,
    antithetic: bool = False,
    block_size: int = BLOCK_SIZE,
) -> SemigroupEstimate:
    estimator = PenalizedEstimator(
        region, n, potential=V, eta=eta, f=f, block_size=block_size, antithetic=antithetic
    )
    return estimator.estimate(x, t, N, h, seed, workers)


def free_semigroup(
    V: Optional[Potential],
    eta: Optional[GaugeForm],
    f: Optional[Observable],
    x,
    t: float,
    N: int,
    h: float,
    seed: int,
    workers: int = 1,
    antithetic: bool = False,
    block_size: int = BLOCK_SIZE,
) -> SemigroupEstimate:
    estimator = FreeEstimator(None, V, eta, f, block_size=block_size, antithetic=antithetic)
    return estimator.estimate(x, t, N, h, seed, workers)


def kac_gap(
    region: Region,
    x,
    t: float,
    N: int,
    h: float,
    seed: int,
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
) -> Tuple[float, float]:
    """Paired estimate of P{alpha <= t < beta} and its standard error."""
    estimate = KacGapEstimator(region, block_size=block_size).estimate(x, t, N, h, seed, workers)
    return estimate.real, estimate.stderr


class MeanValueResult(NamedTuple):
    residual: float
    stderr: float
    h_center: float
    h_sphere: float


def _hit_before_penetration(region, x, horizon, n_paths, h, seed, block_size):
    """Samples of 1{alpha < beta, alpha <= horizon} from x."""
    moments = RunningMoments()
    for block in simulate_ensemble(x, horizon, h, n_paths, seed, block_size, region=region):
        moments.push((np.isfinite(block.alpha) & (block.alpha < block.beta)).astype(float))
    return moments


def mean_value_check(
    region: Region,
    x,
    probe_radius: float,
    t_horizon: float,
    N: int,
    seed: int,
    h: float = 1e-3,
    n_outer: int = 200,
    margin: Optional[float] = None,
    block_size: int = BLOCK_SIZE,
) -> MeanValueResult:
    """Mean-value test of h(x) = P^x{alpha < beta} on a ball D around x.

    The exit time tau of D and the exit direction are independent for a ball
    centred at the start, so exit points are drawn uniformly on the sphere and
    each is evaluated with the remaining horizon t_horizon - tau. By the strong
    Markov property the two sides agree exactly for the truncated h, so the
    residual measures nothing but harmonicity and Monte-Carlo noise.
    """
    x = as_point(x, region.dimension)
    margin = 0.05 * probe_radius if margin is None else margin
    if not ball_contained(region, x, probe_radius, margin):
        raise GeometryError(
            "Ball of radius {:g} around {} is not inside {}".format(probe_radius, point_label(x), region.region_id)
        )
    center = _hit_before_penetration(region, x, t_horizon, N, h, seed, block_size)

    ball = make_ball(x, probe_radius)
    exits = simulate_block(x, t_horizon, h, path_seed(seed, 0), 0, n_outer, region=ball)
    directions = uniform_sphere(region.dimension, n_outer, block_generator(seed, 0, AUXILIARY_STREAM))
    n_inner = max(N // n_outer, 1)
    outer = np.zeros(n_outer)
    for j in range(n_outer):
        remaining = t_horizon - exits.alpha[j]
        if not np.isfinite(exits.alpha[j]) or remaining < h:
            continue
        y = x + probe_radius * directions[j]
        inner = _hit_before_penetration(region, y, remaining, n_inner, h, path_seed(seed, j + 1), block_size)
        outer[j] = float(inner.mean.real)
    sphere = RunningMoments.from_samples(outer)
    h_center = float(center.mean.real)
    h_sphere = float(sphere.mean.real)
    stderr = math.sqrt(float(center.stderr) ** 2 + float(sphere.stderr) ** 2)
    logger.info(
        "Mean-value check at %s: h=%.4f, sphere mean=%.4f, stderr=%.2g", point_label(x), h_center, h_sphere, stderr
    )
    return MeanValueResult(abs(h_center - h_sphere), stderr, h_center, h_sphere)


class CompositionResult(NamedTuple):
    direct: float
    composed: float
    difference: float
    stderr: float


def semigroup_composition_check(
    region: Region,
    f: Observable,
    x,
    t1: float,
    t2: float,
    N: int,
    h: float,
    seed: int,
    n_outer: int = 200,
    block_size: int = BLOCK_SIZE,
) -> CompositionResult:
    """Chapman-Kolmogorov at Monte-Carlo resolution for the Dirichlet semigroup.

    Compares P_{t1+t2} f (x) with E[1{t1 < alpha} P_{t2} f (X_{t1})], the inner
    values estimated afresh at the resampled surviving endpoints.
    """
    estimator = DirichletEstimator(region, f=f, block_size=block_size)
    direct = estimator.estimate(x, t1 + t2, N, h, seed)
    first = simulate_block(x, t1, h, path_seed(seed, 0), 0, n_outer, region=region)
    n_inner = max(N // n_outer, 1)
    outer = np.zeros(n_outer)
    for j in np.flatnonzero(first.survived_exit):
        inner = estimator.estimate(first.final_positions[j], t2, n_inner, h, path_seed(seed, j + 1))
        outer[j] = inner.real
    composed = RunningMoments.from_samples(outer)
    stderr = math.sqrt(direct.stderr ** 2 + float(composed.stderr) ** 2)
    composed_value = float(composed.mean.real)
    return CompositionResult(direct.real, composed_value, direct.real - composed_value, stderr)


def half_line_survival(x: float, t: float) -> float:
    """P^x{t < alpha} for (0, inf) under generator Delta, by the method of images."""
    return float(erf(x / (2.0 * math.sqrt(t))))


def calibrate_budget(h: float, N: int, seed: int, workers: int = 1, block_size: int = BLOCK_SIZE) -> float:
    """The constant c of the c * sqrt(h) discretization budget, from the half-line at (1, 0.25)."""
    half_line = make_halfspace([1.0], 0.0)
    estimate = dirichlet_semigroup(half_line, None, None, None, [1.0], 0.25, N, h, seed, workers, block_size=block_size)
    exact = half_line_survival(1.0, 0.25)
    c = (abs(estimate.real - exact) + 3.0 * estimate.stderr) / math.sqrt(h)
    logger.info("Calibrated budget constant c=%.3g at h=%g (MC %.5f vs %.5f)", c, h, estimate.real, exact)
    return c
