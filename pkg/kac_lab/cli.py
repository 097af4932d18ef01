"""Command-line front end: one config file in, CSV artifacts and a manifest out.

Exit codes: 0 success, 1 unexpected error, 2 invalid config, 3 geometry
error, 4 solver non-convergence. Failures also leave a JSON error record on
stderr and in ``error.json`` under the output directory.
"""

import importlib
import json
import logging
import sys

import click

from kac_lab.config import load_config
from kac_lab.exceptions import KacLabError
from kac_lab.settings import get_settings

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(name)s] %(levelname)s: %(message)s"


def load_command(commands_module: str, name: str, settings):
    module = importlib.import_module("{}.{}".format(commands_module, name))
    return module.Command(settings)


def _fail(out_dir: str, error: Exception, exit_code: int, kind: str):
    from pipelines import write_error_record

    record = write_error_record(out_dir, error, exit_code, kind)
    click.echo(json.dumps(record), err=True)
    sys.exit(exit_code)


@click.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False), help="JSON run config")
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None, help="Master seed (overrides config)")
@click.option("--workers", type=click.IntRange(1), default=None, help="Worker processes (overrides KAC_LAB_WORKERS)")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory")
@click.option("--h", "step", type=float, default=None, help="Time step")
@click.option("--paths", type=click.IntRange(1), default=None, help="Number of paths N")
@click.option("--quiet", is_flag=True, help="Only log warnings and errors")
@click.option("--settings", "settings_module", default=None, help="Settings module, e.g. kac_lab.settings.prod")
def main(config_path, seed, workers, out, step, paths, quiet, settings_module):
    """Run one lab command described by a JSON config."""
    logging.basicConfig(level=logging.WARNING if quiet else logging.INFO, format=LOG_FORMAT)
    from commands.base import CommandOptions
    from pipelines import ManifestPipeline

    out_dir = out or "output"
    try:
        settings = get_settings(settings_module)
        overrides = {"seed": seed, "workers": workers, "out": out, "h": step, "N": paths}
        config = load_config(config_path, overrides, settings)
        out_dir = config.out
        manifest = ManifestPipeline(out_dir)
        command = load_command(settings["COMMANDS_MODULE"], config.command, settings)
        logger.info("Running %s: %s", config.command, command.short_desc())
        opts = CommandOptions(out=out_dir, workers=config.workers, quiet=quiet, settings=settings)
        artifacts = command.run(config, opts)
        manifest.process_item(config.to_dict(), settings, artifacts)
    except KacLabError as e:
        logger.error("%s", e)
        _fail(out_dir, e, e.exit_code, e.kind)
    except Exception as e:
        logger.exception("Unexpected failure")
        _fail(out_dir, e, 1, "error")
