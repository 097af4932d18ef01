import json
import os
import subprocess
from typing import Any, Mapping

import numpy as np

import kac_lab


def git_describe() -> str:
    """``git describe`` of the working tree, or the package version outside a checkout."""
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=os.path.dirname(os.path.abspath(__file__)),
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            check=True,
        )
        described = out.stdout.decode().strip()
        if described:
            return described
    except (OSError, subprocess.CalledProcessError):
        pass
    return "v{}".format(kac_lab.__version__)


def json_default(value: Any):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError("Cannot serialize {!r}".format(type(value)))


def write_json(path: str, record: Mapping) -> None:
    with open(path, "w") as f:
        json.dump(record, f, indent=2, sort_keys=True, default=json_default)
        f.write("\n")
