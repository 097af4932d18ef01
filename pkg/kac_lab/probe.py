"""Kac-regularity verdicts from paired gap estimates.

A probe is one (x, t) pair. Each probe is run at three step sizes h, h/2 and
h/4 with the paired gap estimator; the refinement trend decides between a
genuine gap and a discretization artifact.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from kac_lab.common.cleaners import as_point, point_label
from kac_lab.common.seeding import path_seed as derive_path_seed
from kac_lab.estimators import KacGapEstimator
from kac_lab.exceptions import GeometryError, KacLabError
from kac_lab.geometry import Exhaustion, Region
from kac_lab.paths import exit_time, penetration_time, sample_path
from kac_lab.settings.base import BLOCK_SIZE, BUDGET_CONSTANT, IRREGULAR_SIGMAS, REGULAR_SIGMAS

logger = logging.getLogger(__name__)

CONSISTENT = "consistent-with-regular"
IRREGULAR = "irregular"
INCONCLUSIVE = "inconclusive"

REFINEMENTS = (1, 2, 4)

REPORT_COLUMNS = ["region_id", "probe", "x", "t", "level", "h", "N", "gap", "stderr", "error"]


@dataclass
class RegularityReport:
    region_id: str
    probes: List[Dict[str, Any]] = field(default_factory=list)
    budget_constant: float = BUDGET_CONSTANT

    def _by_probe(self) -> Dict[int, List[Dict[str, Any]]]:
        grouped: Dict[int, List[Dict[str, Any]]] = {}
        for row in self.probes:
            grouped.setdefault(row["probe"], []).append(row)
        for rows in grouped.values():
            rows.sort(key=lambda row: row["level"])
        return grouped

    @property
    def refinement_trend(self) -> Dict[int, List[float]]:
        """Gap values at h, h/2, h/4 for each probe."""
        return {probe: [row["gap"] for row in rows] for probe, rows in self._by_probe().items()}

    @property
    def errors(self) -> List[Dict[str, Any]]:
        return [row for row in self.probes if row["error"]]

    @staticmethod
    def _persistent(rows) -> bool:
        return len(rows) == len(REFINEMENTS) and all(
            row["gap"] > IRREGULAR_SIGMAS * row["stderr"] and row["gap"] > 0 for row in rows
        )

    def _shrinking(self, rows) -> bool:
        finest = rows[-1]
        if finest["gap"] > REGULAR_SIGMAS * finest["stderr"] + self.budget_constant * math.sqrt(finest["h"]):
            return False
        for coarse, fine in zip(rows, rows[1:]):
            slack = REGULAR_SIGMAS * math.hypot(coarse["stderr"], fine["stderr"])
            if fine["gap"] > coarse["gap"] + slack:
                return False
        return True

    @property
    def verdict(self) -> str:
        if not self.probes or self.errors:
            return INCONCLUSIVE
        grouped = self._by_probe()
        if any(self._persistent(rows) for rows in grouped.values()):
            return IRREGULAR
        if all(self._shrinking(rows) for rows in grouped.values()):
            return CONSISTENT
        return INCONCLUSIVE

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.probes, columns=REPORT_COLUMNS)

    def summary(self) -> str:
        finest = [rows[-1] for rows in self._by_probe().values() if not rows[-1]["error"]]
        if finest:
            worst = max(finest, key=lambda row: row["gap"])
            detail = "max gap {:.4g} +/- {:.2g} at x={}, t={:g}, h={:g}".format(
                worst["gap"], worst["stderr"], worst["x"], worst["t"], worst["h"]
            )
        else:
            detail = "no successful probe"
        return "{}: {} ({} probes, {} errors; {})".format(
            self.region_id, self.verdict, len(self._by_probe()), len(self.errors), detail
        )


def regularity_battery(
    region: Region,
    points: Sequence,
    times: Sequence[float],
    N: int,
    h: float,
    seed: int,
    workers: int = 1,
    budget_constant: float = BUDGET_CONSTANT,
    block_size: int = BLOCK_SIZE,
) -> RegularityReport:
    """Run the paired gap estimator over points x times at h, h/2 and h/4.

    Probe i draws its paths from a seed derived from (seed, i); errors are
    recorded on the probe rows instead of aborting the battery.
    """
    report = RegularityReport(region.region_id, budget_constant=budget_constant)
    estimator = KacGapEstimator(region, block_size=block_size)
    probe = 0
    for x in points:
        for t in times:
            probe_seed = derive_path_seed(seed, probe)
            for level, factor in enumerate(REFINEMENTS):
                row = {
                    "region_id": region.region_id,
                    "probe": probe,
                    "x": point_label(x),
                    "t": float(t),
                    "level": level,
                    "h": h / factor,
                    "N": int(N),
                    "gap": float("nan"),
                    "stderr": float("nan"),
                    "error": "",
                }
                try:
                    estimate = estimator.estimate(as_point(x, region.dimension), t, N, h / factor, probe_seed, workers)
                    row["gap"], row["stderr"] = estimate.real, estimate.stderr
                except KacLabError as e:
                    logger.warning("Probe %d at x=%s, t=%g failed: %s", probe, point_label(x), t, e)
                    row["error"] = "{}: {}".format(e.kind, e)
                report.probes.append(row)
            probe += 1
    verdict = report.verdict
    if verdict == INCONCLUSIVE:
        logger.warning("Battery on %s is inconclusive", region.region_id)
    logger.info(report.summary())
    return report


@dataclass
class ExhaustionCheck:
    n_paths: int
    n_levels: int
    violations: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _covered(window: Region, positions: np.ndarray, h: float) -> bool:
    # bridge probabilities exp(-d1 d2 / h) below 1e-17 leave 1 - p == 1.0 exactly
    return bool(np.min(window.bulk_distance(positions)) ** 2 > 40.0 * h)


def exhaustion_consistency(
    region: Region,
    path_seed: int,
    n_levels: int,
    start,
    n_paths: int = 1000,
    t_max: float = 1.0,
    h: float = 1e-3,
    scheme: str = "boxes",
    scale: float = 1.0,
    center: Optional[Sequence[float]] = None,
) -> ExhaustionCheck:
    """Replay stored paths through the levels of an exhaustion of ``region``.

    Along the levels alpha_hat and beta_hat must be nondecreasing, and once a
    level's window covers the path they must equal the parent's values.
    Violations carry the offending per-path seed.
    """
    exhaustion = Exhaustion(region, scheme, scale, None if center is None else as_point(center))
    levels = [exhaustion.level(n) for n in range(1, n_levels + 1)]
    start = as_point(start, region.dimension)
    if not levels[0].membership(start[None, :])[0]:
        raise GeometryError("Start point {} is not inside the first exhaustion level".format(point_label(start)))

    check = ExhaustionCheck(n_paths, n_levels)
    for j in range(n_paths):
        seed_j = derive_path_seed(path_seed, j)
        path = sample_path(start, t_max, h, seed_j)
        alpha = [exit_time(path, level, seed_j) for level in levels]
        beta = [penetration_time(path, level, seed_j) for level in levels]
        parent = (exit_time(path, region, seed_j), penetration_time(path, region, seed_j))

        for n in range(n_levels):
            if alpha[n] > beta[n]:
                check.violations.append({"path_seed": seed_j, "level": n + 1, "kind": "alpha-after-beta"})
            if n > 0 and alpha[n] < alpha[n - 1]:
                check.violations.append({"path_seed": seed_j, "level": n + 1, "kind": "alpha-decreased"})
            if n > 0 and beta[n] < beta[n - 1]:
                check.violations.append({"path_seed": seed_j, "level": n + 1, "kind": "beta-decreased"})
            if _covered(exhaustion.window(n + 1), path.positions, h) and (alpha[n], beta[n]) != parent:
                check.violations.append({"path_seed": seed_j, "level": n + 1, "kind": "plateau-mismatch"})

    if check.violations:
        logger.warning(
            "Exhaustion of %s: %d violations, first at path seed %d",
            region.region_id,
            len(check.violations),
            check.violations[0]["path_seed"],
        )
    else:
        logger.info("Exhaustion of %s: %d paths over %d levels consistent", region.region_id, n_paths, n_levels)
    return check
