"""Monotone convergence checks

With a ``grid`` section: the grid semigroup limit of an increasing
(penalized) or decreasing (exhaustion) form sequence. With an ``exhaustion``
section: pathwise monotonicity of the stopping times along box exhaustions.
"""

from typing import List

import numpy as np

from commands.base import BaseCommand, CommandOptions
from kac_lab.geometry import Exhaustion, whole_space
from kac_lab.grid import build_grid, build_laplacian, monotone_form_limit_check
from kac_lab.observables import One
from kac_lab.probe import exhaustion_consistency
from pipelines import DefectCsvPipeline, ExhaustionCsvPipeline


class Command(BaseCommand):
    """Monotone form limits on a grid and exhaustion consistency of stopping times"""

    name = "monotone"

    def run(self, config, opts: CommandOptions) -> List[str]:
        region = config.build_region()
        artifacts = []
        if config.grid is not None:
            artifacts.append(self.grid_limit(config, region, opts))
        if config.exhaustion is not None:
            section = config.exhaustion
            check = exhaustion_consistency(
                region,
                config.seed,
                section["levels"],
                section["start"],
                n_paths=section.get("n_paths", 1000),
                t_max=section.get("t_max", 1.0),
                h=config.h,
                scale=section.get("scale", 1.0),
            )
            self.logger.info("Exhaustion check passed: %s (%d violations)", check.passed, len(check.violations))
            artifacts.append(ExhaustionCsvPipeline(opts.out).process_item(check))
        return artifacts

    def grid_limit(self, config, region, opts) -> str:
        section = config.grid
        grid = build_grid(section["lo"], section["hi"], section["spacing"], region)
        L = build_laplacian(grid)
        fx = np.asarray((config.build_observable() or One())(grid.nodes), dtype=float)
        direction = section.get("direction", "increasing")
        t = config.times[0] if config.times else 0.1
        tol = config.tolerance("semigroup", self.settings["SEMIGROUP_TOL"])
        threshold = config.tolerance("defect_threshold", 1e-3)
        method = section.get("method", "lanczos")

        masks = None
        if direction == "decreasing":
            parent = region or whole_space(grid.dimension)
            exhaustion = Exhaustion(parent, "boxes", section.get("exhaustion_scale", 1.0))

            def masks(n):
                return ~exhaustion.level(int(n)).complement_interior(grid.nodes)

        table = monotone_form_limit_check(
            L, grid.penalty_mask, t, fx, direction, config.n_penalty, masks, tol, threshold, method
        )
        self.logger.info("%s limit: monotone=%s, final defect %.3e", direction, table.monotone, table.defects[-1])
        return DefectCsvPipeline(opts.out).process_item(table)
