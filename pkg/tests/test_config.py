# tests/test_config.py
import math

import pytest

from src.config import (
    build_grid,
    build_potential_settings,
    build_quadrature,
    build_thermo,
    load_config,
    parse_config,
    serialize_config,
)
from src.errors import ConfigError
from src.potential.thermo import LinearCoupling, SqrtCoupling

SAMPLE = """
[grid]
dim = 3
n = 16

[scheme]
dt = 5e-4
steps = 20
m = 100
delta = 1e-3
r = 3.2
xi = 0.4

[thermo]
u_model = linear
u_alpha = 0.5
g_cutoff = 0.7
mu_variation = 0.2

[init]
presets = uniaxial-seed, taylor-green-velocity
amplitude = 0.3

[output]
directory = runs/sample
snapshot_every = 10
"""


def test_defaults_from_empty_config():
    config = parse_config("")
    assert config.scheme.dt == 1e-3
    assert config.grid.n == 32 and config.grid.dim == 2
    assert math.isinf(config.scheme.m)
    assert config.init.presets == ["equilibrium"]


def test_sample_config():
    config = parse_config(SAMPLE)
    assert config.grid.dim == 3
    assert config.scheme.params().m == 100.0
    assert config.init.presets == ["uniaxial-seed", "taylor-green-velocity"]
    assert config.thermo.g_cutoff == 0.7
    assert "steps" not in config.scheme.params().model_dump()


def test_exact_keyword():
    assert math.isinf(parse_config("[scheme]\nm = exact\n").scheme.m)


def test_r_outside_range_with_delta():
    text = "[scheme]\ndelta = 0.1\nr = 2.5\n"
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key_path == "scheme.r"
    assert exc.value.line == 3
    assert "(3, 10/3)" in str(exc.value)


def test_serialize_round_trip():
    config = parse_config(SAMPLE)
    text = serialize_config(config)
    assert parse_config(text) == config
    assert serialize_config(parse_config(text)) == text
    assert "m = 100.0" in text


def test_serialize_writes_exact_for_infinite_m():
    text = serialize_config(parse_config(""))
    assert "m = exact" in text
    assert "g_cutoff = none" in text
    assert parse_config(text) == parse_config("")


@pytest.mark.parametrize("text, key_path", [
    ("[grid]\nn = 12\n", "grid.n"),
    ("[grid]\ncolour = blue\n", "grid.colour"),
    ("[init]\npresets = vortex-street\n", "init.presets"),
    ("[thermo]\nu_a = 0.5\nu_b = 1.0\n", "thermo.u_b"),
    ("[scheme]\ndt = -1\n", "scheme.dt"),
    ("[tolerance]\ncfl_warn = 10\ncfl_abort = 5\n", "tolerance"),
    ("[physics]\nx = 1\n", "physics"),
])
def test_invalid_values_name_their_key(text, key_path):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key_path == key_path


def test_key_outside_section_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("dt = 1e-3\n")
    assert exc.value.line == 1


def test_duplicate_key_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("[grid]\nn = 16\nn = 32\n")
    assert exc.value.line == 3


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")


def test_load_config_from_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(SAMPLE)
    assert load_config(path) == parse_config(SAMPLE)


def test_builders():
    config = parse_config(SAMPLE)
    grid = build_grid(config)
    assert (grid.n, grid.dim) == (16, 3)
    thermo = build_thermo(config.thermo)
    assert isinstance(thermo.coupling, LinearCoupling)
    assert thermo.order.cutoff == 0.7
    assert thermo.mu.upper == pytest.approx(1.2)
    assert isinstance(build_thermo(parse_config("").thermo).coupling, SqrtCoupling)
    assert build_potential_settings(config.thermo).margin == 1e-8
    assert build_quadrature(config.thermo).size == 32 * 64
