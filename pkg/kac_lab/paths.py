"""Brownian paths with generator Delta and their pathwise functionals.

Increments over a step h are Gaussian with covariance 2h Id, so that the
transition density is the heat kernel of -Delta. Two interfaces share the same
per-step kernels:

* the stored-path API (``sample_path``, ``exit_time``, ``penetration_time``,
  ``accumulate_functionals``) for pathwise property checks, and
* ``simulate_block``, which streams a whole block of paths step by step for
  the Monte-Carlo estimators without keeping their positions.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional, Union

import numpy as np

from kac_lab.common.cleaners import as_point
from kac_lab.common.seeding import CROSSING_STREAM, INCREMENT_STREAM, block_generator, partition_blocks
from kac_lab.exceptions import GeometryError
from kac_lab.geometry import Region
from kac_lab.potentials import GaugeForm, MatrixPotential, ScalarPotential

logger = logging.getLogger(__name__)

Potential = Union[ScalarPotential, MatrixPotential]


def n_steps(t_max: float, h: float) -> int:
    """ceil(t_max / h), forgiving the last bits of floating-point division."""
    if h <= 0:
        raise ValueError("Step size must be positive, got {}".format(h))
    if t_max < h * (1 - 1e-9):
        raise ValueError("Horizon t_max={} is shorter than one step h={}".format(t_max, h))
    return max(1, int(math.ceil(t_max / h - 1e-9)))


def hermitian_expm(H: np.ndarray) -> np.ndarray:
    """exp(H) for a batch of Hermitian matrices (..., k, k) by eigendecomposition."""
    w, Q = np.linalg.eigh(H)
    return (Q * np.exp(w)[..., None, :]) @ np.conj(np.swapaxes(Q, -1, -2))


@dataclass(frozen=True, eq=False)
class PathSample:
    step: float
    positions: np.ndarray
    rng_stream_id: int

    @property
    def n_steps(self) -> int:
        return self.positions.shape[0] - 1

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    @property
    def start(self) -> np.ndarray:
        return self.positions[0]

    @property
    def t_max(self) -> float:
        return self.n_steps * self.step

    @property
    def times(self) -> np.ndarray:
        return self.step * np.arange(self.n_steps + 1)


class StoppingTimes(NamedTuple):
    alpha_hat: float
    beta_hat: float


@dataclass
class FunctionalState:
    v_integral: float
    ordered_exp: np.ndarray
    phase: complex


def sample_path(x0, t_max: float, h: float, seed: int) -> PathSample:
    x0 = as_point(x0)
    steps = n_steps(t_max, h)
    rng = block_generator(seed, 0, INCREMENT_STREAM)
    increments = rng.standard_normal((steps, x0.shape[0])) * np.sqrt(2.0 * h)
    # sequential partial sums, the same additions the streaming engine does
    positions = np.cumsum(np.vstack([x0[None, :], increments]), axis=0)
    return PathSample(step=float(h), positions=positions, rng_stream_id=int(seed))


def crossing_uniforms(seed: int, count: int) -> np.ndarray:
    return block_generator(seed, 0, CROSSING_STREAM).random(count)


def _first_event(bridge: np.ndarray, point: np.ndarray, h: float) -> float:
    events = np.flatnonzero(bridge | point)
    if events.size == 0:
        return math.inf
    k = int(events[0])
    # a bridge crossing inside step k is dated at its midpoint
    return (k + 0.5) * h if bridge[k] else (k + 1) * h


def _check_start(path: PathSample, region: Region):
    if path.start not in region:
        raise GeometryError(
            "Path starts at {} which is outside {}".format(path.start, region.region_id)
        )


def exit_time(path: PathSample, region: Region, seed: Optional[int] = None) -> float:
    """First exit time from the region, barriers included (alpha_hat)."""
    _check_start(path, region)
    prev, nxt = path.positions[:-1], path.positions[1:]
    u = crossing_uniforms(path.rng_stream_id if seed is None else seed, path.n_steps)
    bridge = u < region.crossing_probability(prev, nxt, path.step, include_barriers=True)
    point = ~region.membership(nxt)
    return _first_event(bridge, point, path.step)


def penetration_time(path: PathSample, region: Region, seed: Optional[int] = None) -> float:
    """First time the path spends positive time in the complement (beta_hat).

    Barriers are null sets and never trigger it. With the same seed as
    ``exit_time`` the bridge uniforms are shared, so alpha_hat <= beta_hat.
    """
    _check_start(path, region)
    prev, nxt = path.positions[:-1], path.positions[1:]
    u = crossing_uniforms(path.rng_stream_id if seed is None else seed, path.n_steps)
    bridge = u < region.crossing_probability(prev, nxt, path.step, include_barriers=False)
    point = region.complement_interior(nxt)
    return _first_event(bridge, point, path.step)


def stopping_times(path: PathSample, region: Region, seed: Optional[int] = None) -> StoppingTimes:
    return StoppingTimes(exit_time(path, region, seed), penetration_time(path, region, seed))


def accumulate_functionals(
    path: PathSample,
    V: Optional[Potential],
    eta: Optional[GaugeForm] = None,
    t: Optional[float] = None,
) -> FunctionalState:
    t = path.t_max if t is None else t
    if t > path.t_max * (1 + 1e-12):
        raise ValueError("t={} exceeds the path horizon {}".format(t, path.t_max))
    steps = int(round(t / path.step))
    x = path.positions[: steps + 1]
    h = path.step

    rank = V.rank if isinstance(V, MatrixPotential) else 1
    ordered_exp = np.eye(rank, dtype=complex)
    v_integral = 0.0
    if isinstance(V, MatrixPotential):
        values = V(x)
        # the U(1) transport commutes with V, so only the step products remain
        for k in range(steps):
            ordered_exp = ordered_exp @ hermitian_expm(-0.5 * h * (values[k] + values[k + 1]))
    elif V is not None:
        values = V(x)
        v_integral = float(np.sum(0.5 * h * (values[:-1] + values[1:])))
        ordered_exp = ordered_exp * np.exp(-v_integral)

    theta = 0.0
    if eta is not None:
        mid = 0.5 * (x[:-1] + x[1:])
        theta = float(np.sum(np.sum(eta(mid) * np.diff(x, axis=0), axis=-1)))
    return FunctionalState(v_integral=v_integral, ordered_exp=ordered_exp, phase=complex(np.exp(-1j * theta)))


@dataclass
class EnsembleBlock:
    """Per-path results of one seed block, simulated up to the horizon t."""

    index: int
    final_positions: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    occupation: np.ndarray
    v_integral: np.ndarray
    ordered_exp: Optional[np.ndarray]
    theta: np.ndarray
    clamp_hits: int = 0

    @property
    def size(self) -> int:
        return self.final_positions.shape[0]

    @property
    def phase(self) -> np.ndarray:
        """Parallel transport exp(-i int eta o dX) along each path."""
        return np.exp(-1j * self.theta)

    @property
    def survived_exit(self) -> np.ndarray:
        return np.isinf(self.alpha)

    @property
    def survived_penetration(self) -> np.ndarray:
        return np.isinf(self.beta)


def _draw_increments(rng: np.random.Generator, size: int, dimension: int, scale: float, antithetic: bool):
    if not antithetic:
        return rng.standard_normal((size, dimension)) * scale
    half = rng.standard_normal(((size + 1) // 2, dimension)) * scale
    return np.concatenate([half, -half])[:size]


def simulate_block(
    x0,
    t: float,
    h: float,
    master_seed: int,
    block_index: int,
    size: int,
    region: Optional[Region] = None,
    potential: Optional[Potential] = None,
    eta: Optional[GaugeForm] = None,
    antithetic: bool = False,
) -> EnsembleBlock:
    """Stream ``size`` paths from x0 over [0, t] and record their functionals.

    The step is t / ceil(t / h), so the last sample sits exactly at time t.
    Stopping times are +inf when no stop happens within the horizon.
    """
    x0 = as_point(x0)
    steps = n_steps(t, h)
    dt = t / steps
    scale = math.sqrt(2.0 * dt)
    increments = block_generator(master_seed, block_index, INCREMENT_STREAM)
    crossings = block_generator(master_seed, block_index, CROSSING_STREAM)

    x = np.broadcast_to(x0, (size, x0.shape[0])).copy()
    alpha = np.full(size, math.inf)
    beta = np.full(size, math.inf)
    occupation = np.zeros(size)
    v_integral = np.zeros(size)
    theta = np.zeros(size)
    clamp_hits = 0

    is_matrix = isinstance(potential, MatrixPotential)
    ordered_exp = None
    if is_matrix:
        rank = potential.rank
        ordered_exp = np.broadcast_to(np.eye(rank, dtype=complex), (size, rank, rank)).copy()
    v_prev = potential(x) if potential is not None else None
    ci_prev = region.complement_interior(x) if region is not None else None

    for k in range(steps):
        dx = _draw_increments(increments, size, x.shape[1], scale, antithetic)
        u = crossings.random(size)
        nxt = x + dx

        if region is not None:
            p_alpha = region.crossing_probability(x, nxt, dt, include_barriers=True)
            p_beta = region.crossing_probability(x, nxt, dt, include_barriers=False) if region.barriers else p_alpha
            bridge_alpha = u < p_alpha
            bridge_beta = u < p_beta
            stop_alpha = np.isinf(alpha) & (bridge_alpha | ~region.membership(nxt))
            alpha[stop_alpha] = np.where(bridge_alpha, (k + 0.5) * dt, (k + 1) * dt)[stop_alpha]
            ci_next = region.complement_interior(nxt)
            stop_beta = np.isinf(beta) & (bridge_beta | ci_next)
            beta[stop_beta] = np.where(bridge_beta, (k + 0.5) * dt, (k + 1) * dt)[stop_beta]
            occupation += 0.5 * dt * (ci_prev.astype(float) + ci_next)
            ci_prev = ci_next

        if potential is not None:
            v_next = potential(nxt)
            if is_matrix:
                ordered_exp = ordered_exp @ hermitian_expm(-0.5 * dt * (v_prev + v_next))
            else:
                v_integral += 0.5 * dt * (v_prev + v_next)
            clamp_hits += int(np.count_nonzero(potential.clamped(nxt)))
            v_prev = v_next

        if eta is not None:
            theta += np.sum(eta(0.5 * (x + nxt)) * dx, axis=-1)
        x = nxt

    if clamp_hits:
        logger.warning("Block %d: %d steps landed on the clamped core of %s", block_index, clamp_hits, potential.label)
    logger.debug("Block %d: %d paths, %d steps of %g", block_index, size, steps, dt)
    return EnsembleBlock(
        index=block_index,
        final_positions=x,
        alpha=alpha,
        beta=beta,
        occupation=occupation,
        v_integral=v_integral,
        ordered_exp=ordered_exp,
        theta=theta,
        clamp_hits=clamp_hits,
    )


def simulate_ensemble(
    x0,
    t: float,
    h: float,
    n_paths: int,
    master_seed: int,
    block_size: int,
    **kwargs,
) -> Iterator[EnsembleBlock]:
    """Yield the seed blocks of an n_paths ensemble in block-index order."""
    for index, size in partition_blocks(n_paths, block_size):
        yield simulate_block(x0, t, h, master_seed, index, size, **kwargs)
