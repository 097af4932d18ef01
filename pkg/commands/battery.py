from typing import List

import click

from commands.base import BaseCommand, CommandOptions
from kac_lab.probe import exhaustion_consistency, regularity_battery
from pipelines import ExhaustionCsvPipeline, ReportCsvPipeline


class Command(BaseCommand):
    """Kac-regularity battery over points x times with h, h/2, h/4 refinement"""

    name = "battery"

    def run(self, config, opts: CommandOptions) -> List[str]:
        region = config.build_region()
        report = regularity_battery(
            region,
            config.points,
            config.times,
            config.N,
            config.h,
            config.seed,
            workers=opts.workers,
            budget_constant=config.tolerance("budget_constant", self.settings["BUDGET_CONSTANT"]),
            block_size=self.settings["BLOCK_SIZE"],
        )
        artifacts = [ReportCsvPipeline(opts.out).process_item(report)]
        click.echo(report.summary())

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
            artifacts.append(ExhaustionCsvPipeline(opts.out).process_item(check))
        return artifacts
