"""Pipelines writing run artifacts to the output directory

Each command hands its result to a list of pipelines. CSV pipelines turn the
result into a pandas DataFrame and write one file each; the ManifestPipeline
closes the run with the config echo, the settings in force, the version and
the wall time, which together reproduce every number in the CSVs.
"""

import logging
import os
import time
from typing import Any, Dict, List, Mapping, Optional

import pandas as pd

import utils
from kac_lab.estimators import CSV_COLUMNS

logger = logging.getLogger(__name__)


class CsvPipeline:
    filename = "results.csv"
    columns: Optional[List[str]] = None

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)

    @property
    def path(self) -> str:
        return os.path.join(self.out_dir, self.filename)

    def frame(self, item: Any) -> pd.DataFrame:
        return pd.DataFrame(item, columns=self.columns)

    def process_item(self, item: Any) -> str:
        self.frame(item).to_csv(self.path, index=False)
        logger.info("Wrote %s", self.path)
        return self.path


class EstimateCsvPipeline(CsvPipeline):
    """One row per semigroup estimate."""

    filename = "estimates.csv"
    columns = CSV_COLUMNS

    def frame(self, item):
        return pd.DataFrame([estimate.to_row() for estimate in item], columns=self.columns)


class ReportCsvPipeline(CsvPipeline):
    """One row per probe and refinement level of a regularity report."""

    filename = "report.csv"

    def frame(self, item):
        return item.to_frame()


class DefectCsvPipeline(CsvPipeline):
    filename = "defects.csv"

    def process_item(self, item) -> str:
        item.to_csv(self.path)
        logger.info("Wrote %s", self.path)
        return self.path


class KatoCsvPipeline(CsvPipeline):
    filename = "kato.csv"
    columns = ["potential_id", "functional", "t", "value", "coarse_value", "converged"]


class ExhaustionCsvPipeline(CsvPipeline):
    filename = "exhaustion.csv"
    columns = ["path_seed", "level", "kind"]

    def frame(self, item):
        return pd.DataFrame(item.violations, columns=self.columns)


class ManifestPipeline:
    filename = "manifest.json"

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.started = time.time()

    @property
    def path(self) -> str:
        return os.path.join(self.out_dir, self.filename)

    def process_item(self, config: Mapping, settings: Mapping, artifacts: List[str], extra: Dict = None) -> str:
        record = {
            "config": dict(config),
            "settings": {key: value for key, value in settings.items() if _plain(value)},
            "version": utils.git_describe(),
            "wall_time": time.time() - self.started,
            "workers": config.get("workers"),
            "master_seed": config.get("seed"),
            "artifacts": [os.path.basename(path) for path in artifacts],
        }
        record.update(extra or {})
        utils.write_json(self.path, record)
        logger.info("Wrote %s", self.path)
        return self.path


def _plain(value: Any) -> bool:
    return isinstance(value, (bool, int, float, str, type(None)))


def write_error_record(out_dir: str, error: Exception, exit_code: int, kind: str) -> Dict[str, Any]:
    record = {"error": kind, "message": str(error), "exit_code": exit_code}
    try:
        os.makedirs(out_dir, exist_ok=True)
        utils.write_json(os.path.join(out_dir, "error.json"), record)
    except OSError:
        logger.exception("Could not write the error record to %s", out_dir)
    return record
