import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Union

import numpy as np

from kac_lab.common.cleaners import as_point, point_label
from kac_lab.common.seeding import partition_blocks
from kac_lab.common.stats import RunningMoments
from kac_lab.exceptions import GeometryError
from kac_lab.geometry import Region
from kac_lab.observables import Observable, One
from kac_lab.paths import EnsembleBlock, Potential, simulate_block
from kac_lab.potentials import GaugeForm
from kac_lab.settings.base import BLOCK_SIZE

CSV_COLUMNS = [
    "estimator_kind",
    "region_id",
    "potential_id",
    "x",
    "t",
    "h",
    "n_penalty",
    "N",
    "value_re",
    "value_im",
    "stderr",
    "master_seed",
]


@dataclass
class SemigroupEstimate:
    """One Monte-Carlo evaluation of a semigroup at (x, t)."""

    value: Union[complex, np.ndarray]
    stderr: float
    n_paths: int
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def real(self) -> float:
        return float(np.real(self.value))

    def to_row(self) -> Dict[str, Any]:
        value = np.atleast_1d(self.value)
        return {
            "estimator_kind": self.params.get("estimator"),
            "region_id": self.params.get("region_id"),
            "potential_id": self.params.get("potential_id"),
            "x": point_label(self.params.get("x")),
            "t": self.params.get("t"),
            "h": self.params.get("h"),
            "n_penalty": self.params.get("n_penalty", 0.0),
            "N": self.n_paths,
            "value_re": float(np.real(value[0])) if value.size == 1 else ";".join(
                "{:.17g}".format(v) for v in np.real(value)
            ),
            "value_im": float(np.imag(value[0])) if value.size == 1 else ";".join(
                "{:.17g}".format(v) for v in np.imag(value)
            ),
            "stderr": self.stderr,
            "master_seed": self.params.get("seed"),
        }


def _block_task(args):
    estimator, x, t, h, seed, index, size = args
    return estimator.block_moments(x, t, h, seed, index, size)


class FeynmanKacEstimator:
    """Base class for the path-space estimators of exp(-t H) f (x).

    Subclasses set ``name`` and override ``stopping_weight``; everything else
    (path streaming, functionals, the transport, block merging) is shared, so
    estimators of different kinds run on identical path ensembles when given
    the same master seed.
    """

    name = "free"
    requires_start_inside = False

    def __init__(
        self,
        region: Optional[Region] = None,
        potential: Optional[Potential] = None,
        eta: Optional[GaugeForm] = None,
        f: Optional[Observable] = None,
        block_size: int = BLOCK_SIZE,
        antithetic: bool = False,
    ):
        self.region = region
        self.potential = potential
        self.eta = eta
        self.f = f if f is not None else One()
        self.block_size = block_size
        self.antithetic = antithetic

    @property
    def logger(self):
        return logging.getLogger("kac_lab.estimators.{}".format(self.name))

    @property
    def simulation_region(self) -> Optional[Region]:
        return self.region

    @property
    def n_penalty(self) -> float:
        return 0.0

    def stopping_weight(self, block: EnsembleBlock) -> np.ndarray:
        return np.ones(block.size)

    def samples(self, block: EnsembleBlock) -> np.ndarray:
        """Per-path values weight * A * transport^-1 * f(X_t)."""
        fx = np.asarray(self.f(block.final_positions))
        if block.ordered_exp is not None:
            if fx.ndim == 1:
                raise GeometryError("A matrix potential needs a vector-valued f")
            fx = np.einsum("bij,bj->bi", block.ordered_exp, fx)
        elif self.potential is not None:
            fx = fx * np.exp(-block.v_integral).reshape((-1,) + (1,) * (fx.ndim - 1))
        if self.eta is not None:
            # inverse of the U(1) transport
            fx = fx * np.conj(block.phase).reshape((-1,) + (1,) * (fx.ndim - 1))
        weight = self.stopping_weight(block)
        return weight.reshape((-1,) + (1,) * (fx.ndim - 1)) * fx

    def simulate(self, x, t, h, seed, index, size) -> EnsembleBlock:
        return simulate_block(
            x,
            t,
            h,
            seed,
            index,
            size,
            region=self.simulation_region,
            potential=self.potential,
            eta=self.eta,
            antithetic=self.antithetic,
        )

    def block_moments(self, x, t, h, seed, index, size) -> RunningMoments:
        block = self.simulate(x, t, h, seed, index, size)
        return RunningMoments.from_samples(self.samples(block))

    def check_start(self, x: np.ndarray):
        if self.requires_start_inside:
            if self.region is None or x not in self.region:
                raise GeometryError(
                    "Start point {} is not inside {}".format(
                        point_label(x), self.region.region_id if self.region else "the region"
                    )
                )

    def run(self, x, t: float, n_paths: int, h: float, seed: int, workers: int = 1) -> RunningMoments:
        x = as_point(x)
        if n_paths < 1:
            raise ValueError("Need at least one path, got {}".format(n_paths))
        if t <= 0:
            raise ValueError("Semigroup time must be positive, got {}".format(t))
        self.check_start(x)
        tasks = [(self, x, t, h, seed, index, size) for index, size in partition_blocks(n_paths, self.block_size)]
        if workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_block_task, tasks))
        else:
            results = [_block_task(task) for task in tasks]
        moments = RunningMoments(results[0].mean.shape)
        # block-index order keeps the merged bits independent of the worker count
        for result in results:
            moments.merge(result)
        return moments

    def params(self, x, t, h, seed) -> Dict[str, Any]:
        return {
            "estimator": self.name,
            "region_id": self.region.region_id if self.region is not None else "R{}".format(np.size(x)),
            "potential_id": self.potential.label if self.potential is not None else "0",
            "gauge_id": self.eta.label if self.eta is not None else "0",
            "f": self.f.label,
            "x": as_point(x),
            "t": t,
            "h": h,
            "seed": seed,
            "n_penalty": self.n_penalty,
            "antithetic": self.antithetic,
            "block_size": self.block_size,
        }

    def estimate(self, x, t: float, n_paths: int, h: float, seed: int, workers: int = 1) -> SemigroupEstimate:
        self.logger.info("Estimating at x=%s, t=%g with %d paths, h=%g, seed=%d", point_label(x), t, n_paths, h, seed)
        moments = self.run(x, t, n_paths, h, seed, workers)
        value = moments.mean
        stderr = moments.stderr
        result = SemigroupEstimate(
            value=complex(value) if np.ndim(value) == 0 else value,
            stderr=float(np.max(stderr)),
            n_paths=moments.count,
            params=self.params(x, t, h, seed),
        )
        self.logger.info("%s: value=%s stderr=%.3g", self.name, result.value, result.stderr)
        return result
