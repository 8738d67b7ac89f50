import json

import pytest

from config import Config
from services.config_parser import GridSpec, RunConfigParser
from utils.errors import ConfigError

INI_TEXT = """[run]
command = energy
output_dir = {out}

[medium]
omega0 = 1.0
omega_p = 0.5
gamma = {gamma}

[oscillator]
include_shift = false

[grid]
energy_omega_max = 20
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding='utf-8')
    return str(path)


def test_defaults_without_file():
    config = RunConfigParser().load()
    assert config.command == 'verify-all'
    assert config.medium.omega_p == 0.5
    assert config.quadrature.rel_tol == Config.REL_TOL
    assert config.grid.points == Config.GRID_POINTS
    assert config.sweep is None


def test_ini_file(tmp_path):
    path = write(tmp_path, 'run.ini', INI_TEXT.format(out=tmp_path / 'o', gamma=0.2))
    config = RunConfigParser().load(path)
    assert config.command == 'energy'
    assert config.medium.gamma == 0.2
    assert config.oscillator.include_shift is False
    assert config.grid.energy_omega_max == 20.0
    assert config.source == path


def test_zero_gamma_names_field_and_line(tmp_path):
    path = write(tmp_path, 'bad.ini', INI_TEXT.format(out=tmp_path / 'o', gamma=0))
    with pytest.raises(ConfigError) as info:
        RunConfigParser().load(path)
    assert info.value.field == 'medium.gamma'
    assert info.value.line == 8
    assert 'medium.gamma' in str(info.value)


def test_overrides_take_precedence(tmp_path):
    path = write(tmp_path, 'run.ini', INI_TEXT.format(out=tmp_path / 'o', gamma=0.2))
    config = RunConfigParser().load(path, overrides={'medium': {'gamma': 0.3, 'omega_p': None}},
                                    command='dielectric')
    assert config.medium.gamma == 0.3
    assert config.medium.omega_p == 0.5
    assert config.command == 'dielectric'


def test_yaml_file(tmp_path):
    text = "run:\n  command: oscillator\noscillator:\n  gamma: 0.02\n  include_shift: true\n"
    config = RunConfigParser().load(write(tmp_path, 'run.yaml', text))
    assert config.command == 'oscillator'
    assert config.oscillator.gamma == 0.02


def test_json_file_with_sweep(tmp_path):
    data = {'run': {'command': 'permittivity'}, 'sweep': {'parameter': 'medium.gamma', 'values': [0.05, 0.1]}}
    config = RunConfigParser().load(write(tmp_path, 'run.json', json.dumps(data, indent=2)))
    assert config.sweep.parameter == 'medium.gamma'
    assert config.sweep.values == (0.05, 0.1)
    assert config.with_parameter('medium.gamma', 0.05).medium.gamma == 0.05


def test_ini_sweep_values_as_comma_list(tmp_path):
    text = "[sweep]\nparameter = grid.points\nvalues = 10, 20\n"
    config = RunConfigParser().load(write(tmp_path, 'sweep.ini', text))
    assert config.sweep.values == (10.0, 20.0)
    assert config.with_parameter('grid.points', 20.0).grid.points == 20


def test_invalid_sweep_value_rejected(tmp_path):
    text = "[sweep]\nparameter = medium.gamma\nvalues = 0.1, -1\n"
    with pytest.raises(ConfigError) as info:
        RunConfigParser().load(write(tmp_path, 'sweep.ini', text))
    assert info.value.field == 'sweep.values'
    assert info.value.line == 3


@pytest.mark.parametrize("text,field", [
    ("[medium]\ncolour = red\n", 'medium.colour'),
    ("[plasma]\ndensity = 1\n", 'plasma'),
    ("[medium]\ngamma = fast\n", 'medium.gamma'),
    ("[run]\ncommand = plot\n", 'run.command'),
    ("[sweep]\nparameter = gamma\nvalues = 1\n", 'sweep.parameter'),
    ("[grid]\npoints = 2.5\n", 'grid.points'),
])
def test_rejected_entries_name_their_field(tmp_path, text, field):
    with pytest.raises(ConfigError) as info:
        RunConfigParser().load(write(tmp_path, 'bad.ini', text))
    assert info.value.field == field


def test_malformed_json_reports_line(tmp_path):
    path = write(tmp_path, 'bad.json', '{\n  "medium": {\n    "gamma": 0.1,\n  }\n}\n')
    with pytest.raises(ConfigError) as info:
        RunConfigParser().load(path)
    assert info.value.line == 4


def test_unsupported_extension(tmp_path):
    with pytest.raises(ConfigError):
        RunConfigParser().load(write(tmp_path, 'run.toml', 'x = 1'))


def test_grid_spec_log_grid():
    grid = GridSpec(omega_min=0.01, omega_max=100.0, points=400).omega_grid()
    assert len(grid) == 400
    assert grid[0] == pytest.approx(0.01)
    assert grid[-1] == pytest.approx(100.0)
