"""Run configuration: a JSON document validated against SCHEMA and parsed into lab objects.

Regions, potentials, gauges and observables are written as one-key objects,
e.g. ``{"ball": {"center": [0, 0], "radius": 1}}``; regions nest through
``intersect`` and the ``minus_*`` entries.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from jsonschema import Draft7Validator

from kac_lab import geometry, observables, potentials
from kac_lab.exceptions import ConfigError
from kac_lab.settings import get_settings

logger = logging.getLogger(__name__)

COMMANDS = ["estimate", "gap", "battery", "grid", "kato", "monotone"]

_vector = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_matrix = {"type": "array", "items": _vector, "minItems": 1}


def _entry(key: str, body: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "type": "object",
        "properties": {key: body, "name": {"type": "string"}},
        "required": [key],
        "additionalProperties": False,
    }


def _object(properties: Dict[str, Any], required: List[str]) -> Dict[str, Any]:
    return {"type": "object", "properties": properties, "required": required, "additionalProperties": False}


_region_ref = {"$ref": "#/definitions/region"}
_linear_gauge = _object({"B": {"type": "number"}}, ["B"])
_exact_gauge = _object({"a": _vector}, ["a"])

SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "definitions": {
        "region": {
            "oneOf": [
                _entry("whole_space", {"type": "integer", "minimum": 1}),
                _entry("ball", _object({"center": _vector, "radius": {"type": "number"}}, ["center", "radius"])),
                _entry("box", _object({"lo": _vector, "hi": _vector}, ["lo", "hi"])),
                _entry("halfspace", _object({"normal": _vector, "offset": {"type": "number"}}, ["normal", "offset"])),
                _entry("intersect", {"type": "array", "items": _region_ref, "minItems": 1}),
                _entry(
                    "minus_segment",
                    _object({"a": _vector, "b": _vector, "region": _region_ref}, ["a", "b"]),
                ),
                _entry(
                    "minus_hyperplane",
                    _object(
                        {"normal": _vector, "offset": {"type": "number"}, "region": _region_ref},
                        ["normal", "offset"],
                    ),
                ),
                _entry(
                    "minus_disk_slit",
                    _object(
                        {"center": _vector, "normal": _vector, "radius": {"type": "number"}, "region": _region_ref},
                        ["center", "normal", "radius"],
                    ),
                ),
                _entry(
                    "comb",
                    _object(
                        {
                            "lo": _vector,
                            "hi": _vector,
                            "teeth": {"type": "integer", "minimum": 1},
                            "depth": {"type": "number"},
                        },
                        ["lo", "hi", "teeth", "depth"],
                    ),
                ),
            ]
        },
        "potential": {
            "oneOf": [
                _entry(
                    "constant",
                    {
                        "oneOf": [
                            {"type": "number"},
                            _object({"value": {"type": "number"}, "dimension": {"type": "integer"}}, ["value"]),
                        ]
                    },
                ),
                _entry(
                    "penalty",
                    _object({"n": {"type": "number", "minimum": 0}, "region": _region_ref}, ["n"]),
                ),
                _entry(
                    "coulomb",
                    _object({"Z": {"type": "number"}, "x0": _vector, "cap": {"type": "number"}}, ["Z", "x0"]),
                ),
                _entry(
                    "inverse_power",
                    _object(
                        {
                            "exponent": {"type": "number"},
                            "x0": _vector,
                            "coefficient": {"type": "number"},
                            "cap": {"type": "number"},
                        },
                        ["exponent", "x0"],
                    ),
                ),
                _entry(
                    "matrix_constant",
                    {
                        "oneOf": [
                            _matrix,
                            _object({"real": _matrix, "imag": _matrix, "dimension": {"type": "integer"}}, ["real"]),
                        ]
                    },
                ),
                _entry(
                    "matrix_piecewise",
                    _object(
                        {"region": _region_ref, "inside": _matrix, "outside": _matrix},
                        ["region", "inside", "outside"],
                    ),
                ),
            ]
        },
        "gauge": {
            "oneOf": [
                _entry("linear", _linear_gauge),
                _entry("gauge_linear", _linear_gauge),
                _entry("exact_linear", _exact_gauge),
                _entry("gauge_exact_linear", _exact_gauge),
            ]
        },
        "observable": {
            "oneOf": [
                _entry("one", {"type": "boolean"}),
                _entry("sin_mode", _object({"lo": _vector, "hi": _vector}, ["lo", "hi"])),
                _entry("exp_radial", _object({"rate": {"type": "number"}, "x0": _vector}, ["rate", "x0"])),
                _entry(
                    "plane_wave",
                    _object({"a": _vector, "base": {"$ref": "#/definitions/observable"}}, ["a"]),
                ),
                _entry("constant_vector", _vector),
            ]
        },
    },
    "type": "object",
    "properties": {
        "command": {"enum": COMMANDS},
        "estimator": {"enum": ["dirichlet", "penetration", "penalized", "free"]},
        "region": _region_ref,
        "potential": {"oneOf": [{"type": "null"}, {"$ref": "#/definitions/potential"}]},
        "gauge": {"oneOf": [{"type": "null"}, {"$ref": "#/definitions/gauge"}]},
        "gauge_linear": _linear_gauge,
        "f": {"oneOf": [{"type": "null"}, {"$ref": "#/definitions/observable"}]},
        "points": {"type": "array", "items": _vector, "minItems": 1},
        "times": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "h": {"type": "number", "exclusiveMinimum": 0},
        "N": {"type": "integer", "minimum": 1},
        "n_penalty": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "seed": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "antithetic": {"type": "boolean"},
        "out": {"type": "string"},
        "grid": _object(
            {
                "lo": _vector,
                "hi": _vector,
                "spacing": {"type": "number", "exclusiveMinimum": 0},
                "method": {"enum": ["lanczos", "expm_multiply", "dense"]},
                "direction": {"enum": ["increasing", "decreasing"]},
                "exhaustion_scale": {"type": "number", "exclusiveMinimum": 0},
                "trotter_steps": {"type": "integer", "minimum": 1},
                "export": {"type": "boolean"},
            },
            ["lo", "hi", "spacing"],
        ),
        "kato": _object(
            {
                "functional": {"enum": ["norm", "modulus"]},
                "quadrature_n": {"type": "integer", "minimum": 1000},
                "time_nodes": {"type": "integer", "minimum": 2},
            },
            [],
        ),
        "exhaustion": _object(
            {
                "levels": {"type": "integer", "minimum": 1},
                "start": _vector,
                "n_paths": {"type": "integer", "minimum": 1},
                "t_max": {"type": "number", "exclusiveMinimum": 0},
                "scale": {"type": "number", "exclusiveMinimum": 0},
            },
            ["levels", "start"],
        ),
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
    },
    "required": ["command"],
    "additionalProperties": False,
}

VALIDATOR = Draft7Validator(SCHEMA)


def validate(data: Any) -> None:
    errors = sorted(VALIDATOR.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.absolute_path) or "<root>"
        raise ConfigError("Invalid config at {}: {}".format(where, first.message))


def parse_region(entry: Dict[str, Any]) -> geometry.Region:
    name = entry.get("name")
    region = _parse_region(entry)
    if name:
        region = geometry.Region(
            region.dimension, region.shapes, region.barriers, region.bounding_box, name, region.delta_geom
        )
    return region


def _base_region(body: Dict[str, Any], dimension: int) -> geometry.Region:
    if "region" in body:
        return parse_region(body["region"])
    return geometry.whole_space(dimension)


def _parse_region(entry: Dict[str, Any]) -> geometry.Region:
    if "whole_space" in entry:
        return geometry.whole_space(entry["whole_space"])
    if "ball" in entry:
        return geometry.make_ball(entry["ball"]["center"], entry["ball"]["radius"])
    if "box" in entry:
        return geometry.make_box(entry["box"]["lo"], entry["box"]["hi"])
    if "halfspace" in entry:
        return geometry.make_halfspace(entry["halfspace"]["normal"], entry["halfspace"]["offset"])
    if "intersect" in entry:
        return geometry.intersect(*[parse_region(part) for part in entry["intersect"]])
    if "minus_segment" in entry:
        body = entry["minus_segment"]
        return geometry.minus_segment(body["a"], body["b"], _base_region(body, 2))
    if "minus_hyperplane" in entry:
        body = entry["minus_hyperplane"]
        barrier = geometry.hyperplane_barrier(body["normal"], body["offset"])
        return geometry.remove_barrier(_base_region(body, len(body["normal"])), barrier)
    if "minus_disk_slit" in entry:
        body = entry["minus_disk_slit"]
        barrier = geometry.disk_slit(body["center"], body["normal"], body["radius"])
        return geometry.remove_barrier(_base_region(body, 3), barrier)
    if "comb" in entry:
        body = entry["comb"]
        return geometry.make_comb(body["lo"], body["hi"], body["teeth"], body["depth"])
    raise ConfigError("Unknown region entry {}".format(sorted(entry)))


def _matrix_value(body) -> np.ndarray:
    if isinstance(body, list):
        return np.asarray(body, dtype=complex)
    matrix = np.asarray(body["real"], dtype=complex)
    if "imag" in body:
        matrix = matrix + 1j * np.asarray(body["imag"], dtype=float)
    return matrix


def parse_potential(entry: Optional[Dict[str, Any]], dimension: int, region: Optional[geometry.Region] = None):
    """Build a potential; ``penalty`` entries default to the run's region."""
    if entry is None:
        return None
    if "constant" in entry:
        body = entry["constant"]
        if not isinstance(body, dict):
            return potentials.constant(body, dimension)
        return potentials.constant(body["value"], body.get("dimension", dimension))
    if "penalty" in entry:
        body = entry["penalty"]
        if "region" in body:
            region = parse_region(body["region"])
        if region is None:
            raise ConfigError("A penalty potential needs a region")
        return potentials.indicator_penalty(region, body["n"])
    if "coulomb" in entry:
        body = entry["coulomb"]
        return potentials.coulomb(body["Z"], body["x0"], body.get("cap", potentials.COULOMB_CAP))
    if "inverse_power" in entry:
        body = entry["inverse_power"]
        return potentials.inverse_power(
            body["exponent"], body["x0"], body.get("coefficient", 1.0), body.get("cap", potentials.COULOMB_CAP)
        )
    if "matrix_constant" in entry:
        body = entry["matrix_constant"]
        if isinstance(body, list):
            return potentials.matrix_constant(_matrix_value(body), dimension)
        return potentials.matrix_constant(_matrix_value(body), body.get("dimension", dimension))
    if "matrix_piecewise" in entry:
        body = entry["matrix_piecewise"]
        return potentials.matrix_piecewise(parse_region(body["region"]), body["inside"], body["outside"])
    raise ConfigError("Unknown potential entry {}".format(sorted(entry)))


def parse_gauge(entry: Optional[Dict[str, Any]]):
    if entry is None:
        return None
    for key in ("linear", "gauge_linear"):
        if key in entry:
            return potentials.gauge_linear(entry[key]["B"])
    for key in ("exact_linear", "gauge_exact_linear"):
        if key in entry:
            return potentials.gauge_exact_linear(entry[key]["a"])
    raise ConfigError("Unknown gauge entry {}".format(sorted(entry)))


def parse_observable(entry: Optional[Dict[str, Any]]) -> Optional[observables.Observable]:
    if entry is None or "one" in entry:
        return None
    if "sin_mode" in entry:
        return observables.sin_mode(entry["sin_mode"]["lo"], entry["sin_mode"]["hi"])
    if "exp_radial" in entry:
        return observables.exp_radial(entry["exp_radial"]["rate"], entry["exp_radial"]["x0"])
    if "plane_wave" in entry:
        body = entry["plane_wave"]
        return observables.plane_wave(body["a"], parse_observable(body.get("base")))
    if "constant_vector" in entry:
        return observables.constant_vector(entry["constant_vector"])
    raise ConfigError("Unknown observable entry {}".format(sorted(entry)))


@dataclass
class RunConfig:
    command: str
    region: Optional[Dict[str, Any]] = None
    estimator: str = "dirichlet"
    potential: Optional[Dict[str, Any]] = None
    gauge: Optional[Dict[str, Any]] = None
    f: Optional[Dict[str, Any]] = None
    points: List[List[float]] = field(default_factory=list)
    times: List[float] = field(default_factory=list)
    h: float = 1e-3
    N: int = 10_000
    n_penalty: List[float] = field(default_factory=list)
    seed: int = 0
    workers: int = 1
    antithetic: bool = False
    out: str = "output"
    grid: Optional[Dict[str, Any]] = None
    kato: Dict[str, Any] = field(default_factory=dict)
    exhaustion: Optional[Dict[str, Any]] = None
    tolerances: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Any, settings: Optional[Dict[str, Any]] = None) -> "RunConfig":
        validate(data)
        settings = settings or get_settings()
        defaults = {
            "h": settings["DEFAULT_STEP"],
            "N": settings["DEFAULT_PATHS"],
            "workers": settings["WORKERS"],
            "antithetic": settings["ANTITHETIC"],
        }
        if "gauge_linear" in data:
            if data.get("gauge") is not None:
                raise ConfigError("Give the gauge either as 'gauge' or as 'gauge_linear', not both")
            data = dict(data)
            data["gauge"] = {"gauge_linear": data.pop("gauge_linear")}
        config = cls(**{**defaults, **data})
        config.check()
        return config

    def check(self):
        needs_region = self.command in ("gap", "battery", "monotone") or (
            self.command == "estimate" and self.estimator != "free"
        )
        if needs_region and self.region is None:
            raise ConfigError("Command {!r} needs a region".format(self.command))
        if self.command in ("estimate", "gap", "battery") and (not self.points or not self.times):
            raise ConfigError("Command {!r} needs points and times".format(self.command))
        if self.command == "estimate" and self.estimator == "penalized" and not self.n_penalty:
            raise ConfigError("The penalized estimator needs an n_penalty list")
        penalty = (self.potential or {}).get("penalty")
        if penalty is not None and "region" not in penalty and self.region is None:
            raise ConfigError("A penalty potential needs a region")
        if self.command == "grid" and self.grid is None:
            raise ConfigError("Command 'grid' needs a grid section")
        if self.command == "kato" and (self.potential is None or not self.points or not self.times):
            raise ConfigError("Command 'kato' needs a potential, probe points and times")
        if self.command == "monotone" and self.exhaustion is None and self.grid is None:
            raise ConfigError("Command 'monotone' needs an exhaustion or a grid section")

    @property
    def dimension(self) -> int:
        if self.region is not None:
            return self.build_region().dimension
        if self.points:
            return len(self.points[0])
        return len(self.grid["lo"])

    def build_region(self) -> Optional[geometry.Region]:
        return parse_region(self.region) if self.region is not None else None

    def build_potential(self):
        return parse_potential(self.potential, self.dimension, self.build_region())

    def build_gauge(self):
        return parse_gauge(self.gauge)

    def build_observable(self) -> Optional[observables.Observable]:
        return parse_observable(self.f)

    def tolerance(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))

    def to_dict(self) -> Dict[str, Any]:
        return {key: value for key, value in asdict(self).items() if value is not None}


def load_config(path, overrides: Optional[Dict[str, Any]] = None, settings=None) -> RunConfig:
    """Read a JSON config file, apply command-line overrides and validate."""
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError("{} is not valid JSON: {}".format(path, e))
    except OSError as e:
        raise ConfigError("Cannot read config {}: {}".format(path, e))
    if isinstance(data, dict) and overrides:
        data.update({key: value for key, value in overrides.items() if value is not None})
    config = RunConfig.from_dict(data, settings)
    logger.debug("Loaded %s config from %s", config.command, path)
    return config
