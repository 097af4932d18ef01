from typing import List

from commands.base import BaseCommand, CommandOptions
from kac_lab.exceptions import ConfigError
from kac_lab.potentials import ScalarPotential, kato_modulus, kato_norm
from pipelines import KatoCsvPipeline


class Command(BaseCommand):
    """Heat-kernel Kato probes of a scalar potential over the configured times"""

    name = "kato"

    def run(self, config, opts: CommandOptions) -> List[str]:
        potential = config.build_potential()
        if not isinstance(potential, ScalarPotential):
            raise ConfigError("Kato probes need a scalar potential")
        functional = config.kato.get("functional", "norm")
        quadrature_n = config.kato.get("quadrature_n", self.settings["KATO_QUADRATURE_N"])
        rows = []
        for t in config.times:
            if functional == "norm":
                value = kato_norm(potential, t, config.points, quadrature_n, seed=config.seed)
                coarse, converged = value, True
            else:
                estimate = kato_modulus(
                    potential,
                    t,
                    config.points,
                    quadrature_n,
                    config.kato.get("time_nodes", self.settings["KATO_TIME_NODES"]),
                    seed=config.seed,
                    rtol=config.tolerance("kato_refine", self.settings["KATO_REFINE_RTOL"]),
                )
                value, coarse, converged = estimate
            rows.append(
                {
                    "potential_id": potential.label,
                    "functional": functional,
                    "t": t,
                    "value": value,
                    "coarse_value": coarse,
                    "converged": converged,
                }
            )
            self.logger.info("Kato %s of %s at t=%g: %.6g", functional, potential.label, t, value)
        return [KatoCsvPipeline(opts.out).process_item(rows)]
