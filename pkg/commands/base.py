"""Shared plumbing for the lab commands

A command module defines ``Command``, a ``BaseCommand`` subclass whose
``run(config, opts)`` computes its results, hands them to pipelines and
returns the list of artifact paths it wrote.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List

from kac_lab.config import RunConfig


@dataclass
class CommandOptions:
    out: str
    workers: int = 1
    quiet: bool = False
    settings: Dict[str, Any] = field(default_factory=dict)


class BaseCommand:
    name = ""

    def __init__(self, settings: Dict[str, Any]):
        self.settings = settings

    @property
    def logger(self):
        return logging.getLogger("commands.{}".format(self.name))

    def short_desc(self) -> str:
        return (self.__doc__ or "").strip().splitlines()[0] if self.__doc__ else self.name

    def run(self, config: RunConfig, opts: CommandOptions) -> List[str]:
        raise NotImplementedError
