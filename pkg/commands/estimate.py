from typing import List

from commands.base import BaseCommand, CommandOptions
from kac_lab.estimators import ESTIMATORS
from pipelines import EstimateCsvPipeline


class Command(BaseCommand):
    """Monte-Carlo estimates of a Feynman-Kac semigroup at every (x, t)"""

    name = "estimate"

    def run(self, config, opts: CommandOptions) -> List[str]:
        cls = ESTIMATORS[config.estimator]
        kwargs = {
            "potential": config.build_potential(),
            "eta": config.build_gauge(),
            "f": config.build_observable(),
            "block_size": self.settings["BLOCK_SIZE"],
            "antithetic": config.antithetic,
        }
        region = config.build_region()
        if config.estimator == "penalized":
            estimators = [cls(region, n, **kwargs) for n in config.n_penalty]
        else:
            estimators = [cls(region, **kwargs)]

        estimates = []
        for estimator in estimators:
            for x in config.points:
                for t in config.times:
                    estimates.append(estimator.estimate(x, t, config.N, config.h, config.seed, opts.workers))
        return [EstimateCsvPipeline(opts.out).process_item(estimates)]
