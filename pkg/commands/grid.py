"""Grid counterpart of the Dirichlet semigroup

Evaluates exp(-t H_Omega) f on the grid nodes nearest to the configured
points. With ``n_penalty`` set, also writes the penalization defect table for
the first time in ``times``; with ``trotter_steps`` set, logs the Trotter
defect at the largest penalty.
"""

import os
from typing import List

import numpy as np
from scipy import sparse

from commands.base import BaseCommand, CommandOptions
from kac_lab.estimators import SemigroupEstimate
from kac_lab.grid import (
    SparseSymmetricOperator,
    apply_semigroup,
    build_grid,
    build_laplacian,
    dirichlet_restriction,
    export_coordinates,
    penalization_limit_check,
    trotter_defect,
)
from kac_lab.observables import One
from kac_lab.potentials import ScalarPotential
from pipelines import DefectCsvPipeline, EstimateCsvPipeline


class Command(BaseCommand):
    """Grid semigroups, penalization defects and operator export"""

    name = "grid"

    def run(self, config, opts: CommandOptions) -> List[str]:
        section = config.grid
        region = config.build_region()
        grid = build_grid(section["lo"], section["hi"], section["spacing"], region)
        f = config.build_observable() or One()
        fx = np.asarray(f(grid.nodes), dtype=float)
        method = section.get("method", "lanczos")
        tol = config.tolerance("semigroup", self.settings["SEMIGROUP_TOL"])

        L = build_laplacian(grid)
        A = dirichlet_restriction(L, grid)
        potential = config.build_potential()
        if isinstance(potential, ScalarPotential):
            values = potential(grid.nodes[A.nodes])
            matrix = sparse.csr_matrix(A.matrix + sparse.diags(values))
            A = SparseSymmetricOperator(matrix, grid, A.nodes, "schrodinger")

        estimates = []
        position = {node: i for i, node in enumerate(A.nodes)}
        for t in config.times:
            u = apply_semigroup(A, fx[A.nodes], t, tol, method)
            for x in config.points:
                node = grid.nearest_node(x)
                value = u[position[node]] if node in position else 0.0
                params = {
                    "estimator": "grid",
                    "region_id": region.region_id if region is not None else "box",
                    "potential_id": potential.label if potential is not None else "0",
                    "x": grid.nodes[node],
                    "t": t,
                    "h": grid.spacing,
                    "seed": config.seed,
                }
                estimates.append(SemigroupEstimate(complex(value), 0.0, 0, params))
        artifacts = [EstimateCsvPipeline(opts.out).process_item(estimates)]

        if config.n_penalty:
            table = penalization_limit_check(
                grid, config.times[0], fx, config.n_penalty, tol, config.tolerance("defect_threshold", 1e-3), method
            )
            artifacts.append(DefectCsvPipeline(opts.out).process_item(table))
            steps = section.get("trotter_steps")
            if steps:
                n = max(config.n_penalty)
                defect = trotter_defect(L, grid.penalty_mask, n, config.times[0], fx, steps, tol)
                self.logger.info("Trotter defect with K=%d at n=%g: %.3e", steps, n, defect)

        if section.get("export"):
            path = os.path.join(opts.out, "operator.coo")
            export_coordinates(A, path)
            artifacts.append(path)
        return artifacts
