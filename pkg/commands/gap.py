from typing import List

from commands.base import BaseCommand, CommandOptions
from kac_lab.estimators import KacGapEstimator
from pipelines import EstimateCsvPipeline


class Command(BaseCommand):
    """Paired Kac gap P{alpha <= t < beta} at every (x, t)"""

    name = "gap"

    def run(self, config, opts: CommandOptions) -> List[str]:
        estimator = KacGapEstimator(config.build_region(), block_size=self.settings["BLOCK_SIZE"])
        estimates = [
            estimator.estimate(x, t, config.N, config.h, config.seed, opts.workers)
            for x in config.points
            for t in config.times
        ]
        for estimate in estimates:
            params = estimate.params
            self.logger.info(
                "gap at x=%s, t=%g: %.4g +/- %.2g", params["x"], params["t"], estimate.real, estimate.stderr
            )
        return [EstimateCsvPipeline(opts.out).process_item(estimates)]
