from os.path import dirname, join

import numpy as np
import pytest

from kac_lab.config import (
    RunConfig,
    load_config,
    parse_gauge,
    parse_observable,
    parse_potential,
    parse_region,
    validate,
)
from kac_lab.exceptions import ConfigError
from kac_lab.potentials import CoulombPotential
from kac_lab.settings import get_settings


def config_file(name):
    return join(dirname(__file__), "files", name)


dev_settings = get_settings("kac_lab.settings.dev")
prod_settings = get_settings("kac_lab.settings.prod")


def test_load_half_line():
    config = load_config(config_file("half_line.json"), settings=dev_settings)
    assert config.command == "estimate"
    assert config.N == 4000
    assert config.seed == 42
    assert config.dimension == 1
    assert config.build_region().region_id == "half-line"
    assert config.build_potential() is None
    assert config.build_observable() is None


def test_overrides():
    overrides = {"seed": 9, "N": 100, "h": None, "out": "elsewhere"}
    config = load_config(config_file("half_line.json"), overrides, settings=dev_settings)
    assert (config.seed, config.N, config.h, config.out) == (9, 100, 1e-3, "elsewhere")


def test_settings_fill_defaults():
    data = {
        "command": "kato",
        "potential": {"coulomb": {"Z": 1, "x0": [0, 0, 0]}},
        "points": [[0, 0, 0]],
        "times": [0.1],
    }
    assert RunConfig.from_dict(data, dev_settings).h == 1e-3
    prod = RunConfig.from_dict(data, prod_settings)
    assert prod.h == 1e-4
    assert prod.N == 100_000


def test_settings_module_from_env(monkeypatch):
    monkeypatch.setenv("KAC_LAB_SETTINGS", "kac_lab.settings.prod")
    assert get_settings()["BLOCK_SIZE"] == 4096
    assert get_settings("kac_lab.settings.dev")["BLOCK_SIZE"] == 2048


def test_bad_files():
    with pytest.raises(ConfigError):
        load_config(config_file("empty.json"))
    with pytest.raises(ConfigError):
        load_config(config_file("broken.json"))
    with pytest.raises(ConfigError):
        load_config(config_file("missing.json"))


def test_schema_errors():
    with pytest.raises(ConfigError, match="command"):
        validate({"command": "simulate"})
    with pytest.raises(ConfigError):
        validate({"command": "estimate", "walkers": 3})
    with pytest.raises(ConfigError):
        validate({"command": "estimate", "h": -1e-3})
    with pytest.raises(ConfigError):
        validate({"command": "estimate", "region": {"torus": {"radius": 1}}})
    assert ConfigError("x").exit_code == 2


def test_command_requirements():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"command": "battery", "points": [[0, 0]], "times": [1.0]}, dev_settings)
    with pytest.raises(ConfigError):
        penalized = {"command": "estimate", "estimator": "penalized", "region": {"whole_space": 1}}
        RunConfig.from_dict({**penalized, "points": [[0]], "times": [1]}, dev_settings)
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"command": "grid"}, dev_settings)
    free_data = {"command": "estimate", "estimator": "free", "points": [[0, 0]], "times": [1]}
    free = RunConfig.from_dict(free_data, dev_settings)
    assert free.dimension == 2


def test_region_grammar():
    comb = parse_region({"comb": {"lo": [0, 0], "hi": [1, 1], "teeth": 3, "depth": 0.5}})
    assert len(comb.barriers) == 3
    disk = {"ball": {"center": [0, 0], "radius": 2}}
    slit_disk = parse_region({"minus_segment": {"a": [0, 0], "b": [1, 0], "region": disk}})
    assert not slit_disk.membership(np.array([[0.5, 0.0]]))[0]
    lens = parse_region(
        {"intersect": [{"ball": {"center": [0, 0], "radius": 1}}, {"halfspace": {"normal": [0, 1], "offset": 0}}]}
    )
    assert (0.0, 0.5) in lens and (0.0, -0.5) not in lens
    slit_space = parse_region({"minus_disk_slit": {"center": [0, 0, 0], "normal": [0, 0, 1], "radius": 1}})
    assert slit_space.dimension == 3
    punctured = parse_region({"minus_hyperplane": {"normal": [1], "offset": 0}})
    assert (0.0,) not in punctured


def test_potential_grammar():
    V = parse_potential({"coulomb": {"Z": 2, "x0": [0, 0, 0], "cap": 1e4}}, 3)
    assert isinstance(V, CoulombPotential)
    assert V(np.array([[0.0, 0.0, 0.0]]))[0] == -1e4
    M = parse_potential({"matrix_constant": {"real": [[1, 0], [0, 2]], "imag": [[0, 1], [-1, 0]]}}, 2)
    assert M.rank == 2
    assert parse_potential(None, 2) is None


def test_gauge_and_observable_grammar():
    assert parse_gauge({"linear": {"B": 2.0}}) is not None
    assert parse_gauge(None) is None
    assert parse_observable({"one": True}) is None
    wave = parse_observable({"plane_wave": {"a": [1.0, 0.0], "base": {"exp_radial": {"rate": 1.0, "x0": [0, 0]}}}})
    value = wave(np.array([[0.0, 0.0]]))
    assert np.isclose(value[0], 1.0)
    mode = parse_observable({"sin_mode": {"lo": [0], "hi": [1]}})
    assert np.isclose(mode(np.array([[0.5]]))[0], 1.0)


def test_round_trip_to_dict():
    config = load_config(config_file("segment_battery.json"), settings=dev_settings)
    data = config.to_dict()
    assert data["exhaustion"]["levels"] == 3
    assert RunConfig.from_dict(data, dev_settings) == config


def test_short_potential_forms():
    assert parse_potential({"constant": 2.0}, 2)(np.zeros((3, 2))).tolist() == [2.0, 2.0, 2.0]
    disk = {"ball": {"center": [0, 0], "radius": 1}}
    x = np.array([[0.0, 0.0], [2.0, 0.0]])
    assert parse_potential({"penalty": {"n": 5}}, 2, parse_region(disk))(x).tolist() == [0.0, 5.0]
    assert parse_potential({"penalty": {"n": 5, "region": disk}}, 2)(x).tolist() == [0.0, 5.0]
    with pytest.raises(ConfigError):
        parse_potential({"penalty": {"n": 5}}, 2)
    M = parse_potential({"matrix_constant": [[1, 0], [0, 2]]}, 1)
    assert M.rank == 2
    eta = parse_gauge({"gauge_linear": {"B": 2.0}})
    assert np.allclose(eta(np.array([[1.0, 3.0]])), [[-3.0, 1.0]])
    exact = parse_gauge({"gauge_exact_linear": {"a": [1.0, -2.0]}})
    assert np.allclose(exact(np.zeros((2, 2))), [[1.0, -2.0]] * 2)


def test_penalty_config():
    data = {
        "command": "estimate",
        "estimator": "free",
        "region": {"ball": {"center": [0, 0], "radius": 1}},
        "potential": {"penalty": {"n": 5}},
        "points": [[0, 0]],
        "times": [0.1],
    }
    config = RunConfig.from_dict(data, dev_settings)
    assert config.build_potential().n == 5.0
    with pytest.raises(ConfigError, match="penalty"):
        RunConfig.from_dict({key: value for key, value in data.items() if key != "region"}, dev_settings)
    with pytest.raises(ConfigError):
        validate({**data, "potential": {"penalty": {"n": -1}}})


def test_bare_constant_config():
    data = {"command": "kato", "potential": {"constant": 2.0}, "points": [[0, 0, 0]], "times": [0.1]}
    V = RunConfig.from_dict(data, dev_settings).build_potential()
    assert V.dimension == 3
    assert V(np.zeros((1, 3)))[0] == 2.0


def test_top_level_gauge_linear():
    data = {"command": "estimate", "estimator": "free", "points": [[0, 0]], "times": [1.0], "gauge_linear": {"B": 1.5}}
    config = RunConfig.from_dict(data, dev_settings)
    assert config.gauge == {"gauge_linear": {"B": 1.5}}
    assert config.build_gauge().B == 1.5
    assert RunConfig.from_dict(config.to_dict(), dev_settings) == config
    with pytest.raises(ConfigError):
        RunConfig.from_dict({**data, "gauge": {"linear": {"B": 1.0}}}, dev_settings)
