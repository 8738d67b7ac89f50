import configparser
import json
import os
import re
from dataclasses import dataclass, asdict, replace
from typing import Dict, List, Any, Optional, Tuple

import numpy as np
import yaml

from config import Config
from services.medium_models import MediumParams
from services.oscillator_reservoir import OscillatorModel
from services.quadrature import QuadSpec
from utils.errors import ConfigError, DomainError
from utils.logger import get_logger

logger = get_logger(__name__)

COMMANDS = ('permittivity', 'oscillator', 'dielectric', 'energy', 'verify-all')

KNOWN_KEYS = {
    'run': ('command', 'output_dir', 'seed'),
    'medium': ('omega0', 'omega_p', 'gamma', 'temperature'),
    'oscillator': ('omega0', 'gamma', 'omega_cut', 'temperature', 'include_shift', 'rwa_band'),
    'quadrature': ('rel_tol', 'abs_tol', 'max_subdivisions', 'tail_cut'),
    'grid': ('omega_min', 'omega_max', 'points', 'n_modes', 'omega_max_bath', 'energy_omega_max', 'tau_points'),
    'sweep': ('parameter', 'values'),
}

# Sections whose fields a sweep may vary
SWEEPABLE = ('medium', 'oscillator', 'quadrature', 'grid')


@dataclass(frozen=True)
class GridSpec:
    """Frequency grids and discretization sizes shared by the commands"""
    omega_min: float = Config.OMEGA_MIN
    omega_max: float = Config.OMEGA_MAX
    points: int = Config.GRID_POINTS
    n_modes: int = Config.N_MODES
    omega_max_bath: float = Config.OMEGA_MAX_BATH
    energy_omega_max: float = Config.ENERGY_OMEGA_MAX
    tau_points: int = Config.TAU_POINTS

    def __post_init__(self):
        if not 0 < self.omega_min < self.omega_max:
            raise DomainError(f"need 0 < omega_min < omega_max, got [{self.omega_min}, {self.omega_max}]",
                              field='omega_min')
        for name in ('points', 'n_modes', 'tau_points'):
            value = getattr(self, name)
            if int(value) != value or value < 2:
                raise DomainError(f"{name} must be an integer >= 2, got {value}", field=name)
        for name in ('omega_max_bath', 'energy_omega_max'):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)}", field=name)

    @staticmethod
    def from_cfg(cfg: Dict[str, Any]) -> "GridSpec":
        defaults = GridSpec()
        return GridSpec(
            omega_min=float(cfg.get('omega_min', defaults.omega_min)),
            omega_max=float(cfg.get('omega_max', defaults.omega_max)),
            points=_as_int(cfg.get('points', defaults.points)),
            n_modes=_as_int(cfg.get('n_modes', defaults.n_modes)),
            omega_max_bath=float(cfg.get('omega_max_bath', defaults.omega_max_bath)),
            energy_omega_max=float(cfg.get('energy_omega_max', defaults.energy_omega_max)),
            tau_points=_as_int(cfg.get('tau_points', defaults.tau_points)),
        )

    def omega_grid(self) -> np.ndarray:
        """Log-spaced grid from omega_min to omega_max"""
        return np.geomspace(self.omega_min, self.omega_max, int(self.points))


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: Tuple[float, ...]

    @property
    def section(self) -> str:
        return self.parameter.split('.', 1)[0]

    @property
    def field(self) -> str:
        return self.parameter.split('.', 1)[1]


@dataclass(frozen=True)
class RunConfig:
    command: str
    medium: MediumParams
    oscillator: OscillatorModel
    quadrature: QuadSpec
    grid: GridSpec
    output_dir: str
    seed: int = 0
    sweep: Optional[SweepSpec] = None
    source: Optional[str] = None

    def sections(self) -> Dict[str, Dict[str, Any]]:
        return {
            'medium': self.medium.to_dict(),
            'oscillator': self.oscillator.to_dict(),
            'quadrature': asdict(self.quadrature),
            'grid': asdict(self.grid),
        }

    def with_parameter(self, parameter: str, value: float) -> "RunConfig":
        """Copy with one `section.field` replaced; used for sweep points"""
        section, name = parameter.split('.', 1)
        values = self.sections()[section]
        values[name] = value
        builders = {'medium': MediumParams.from_cfg, 'oscillator': OscillatorModel.from_cfg,
                    'quadrature': QuadSpec.from_cfg, 'grid': GridSpec.from_cfg}
        try:
            return replace(self, **{section: builders[section](values)})
        except DomainError as e:
            raise ConfigError(str(e), field=f"{section}.{e.field or name}") from e

    def to_dict(self) -> Dict[str, Any]:
        data = {'command': self.command, 'output_dir': self.output_dir, 'seed': self.seed,
                'source': self.source}
        data.update(self.sections())
        data['sweep'] = None if self.sweep is None else {'parameter': self.sweep.parameter,
                                                         'values': list(self.sweep.values)}
        return data


def _as_int(value) -> int:
    number = float(value)
    if not number.is_integer():
        raise ValueError(f"expected an integer, got {value}")
    return int(number)


class RunConfigParser:
    """Parser for run configuration files (INI, YAML or JSON)"""

    def __init__(self):
        self.supported_formats = Config.SUPPORTED_CONFIG_EXTENSIONS

    def parse_file(self, filepath: str) -> Tuple[Dict[str, Dict[str, Any]], List[str]]:
        """Read a config file into raw sections; also returns the text lines for diagnostics"""
        file_ext = os.path.splitext(filepath)[1].lower()
        if file_ext not in self.supported_formats:
            raise ConfigError(f"Unsupported config format: {file_ext}", source=filepath)

        try:
            with open(filepath, 'r', encoding='utf-8') as file:
                text = file.read()
        except OSError as e:
            raise ConfigError(f"Cannot read config file: {str(e)}", source=filepath) from e

        lines = text.splitlines()
        try:
            if file_ext in ('.ini', '.cfg'):
                parser = configparser.ConfigParser(interpolation=None)
                parser.read_string(text, source=filepath)
                data = {name: dict(parser.items(name)) for name in parser.sections()}
            elif file_ext == '.json':
                data = json.loads(text)
            else:
                data = yaml.safe_load(text) or {}
        except configparser.Error as e:
            raise ConfigError(str(e).splitlines()[0], line=getattr(e, 'lineno', None), source=filepath) from e
        except json.JSONDecodeError as e:
            raise ConfigError(e.msg, line=e.lineno, source=filepath) from e
        except yaml.YAMLError as e:
            mark = getattr(e, 'problem_mark', None)
            raise ConfigError(str(e).splitlines()[0], line=mark.line + 1 if mark else None, source=filepath) from e

        if not isinstance(data, dict) or not all(isinstance(v, dict) for v in data.values()):
            raise ConfigError("Top level must map section names to key/value tables", source=filepath)
        logger.debug(f"Parsed config {filepath}: sections {sorted(data)}")
        return data, lines

    def load(self, filepath: Optional[str] = None, overrides: Optional[Dict[str, Dict[str, Any]]] = None,
             command: Optional[str] = None) -> RunConfig:
        """Defaults < environment (Config) < file < overrides"""
        data: Dict[str, Dict[str, Any]] = {}
        lines: List[str] = []
        if filepath:
            data, lines = self.parse_file(filepath)
        for section, values in (overrides or {}).items():
            data.setdefault(section, {}).update({k: v for k, v in values.items() if v is not None})
        if command:
            data.setdefault('run', {})['command'] = command
        return self.build(data, lines, source=filepath)

    def build(self, data: Dict[str, Dict[str, Any]], lines: Optional[List[str]] = None,
              source: Optional[str] = None) -> RunConfig:
        lines = lines or []

        def fail(message, section, name=None, cause=None):
            field = f"{section}.{name}" if name else section
            error = ConfigError(message, field=field, line=_locate(lines, section, name), source=source)
            logger.error(f"Invalid configuration: {error}")
            if cause is not None:
                raise error from cause
            raise error

        for section, values in data.items():
            if section not in KNOWN_KEYS:
                fail(f"Unknown section '{section}'", section)
            for name in values:
                if name not in KNOWN_KEYS[section]:
                    fail(f"Unknown key '{name}'", section, name)

        run = data.get('run', {})
        command = str(run.get('command', 'verify-all')).strip()
        if command not in COMMANDS:
            fail(f"command must be one of {COMMANDS}, got '{command}'", 'run', 'command')

        builders = (('medium', MediumParams.from_cfg), ('oscillator', OscillatorModel.from_cfg),
                    ('quadrature', QuadSpec.from_cfg), ('grid', GridSpec.from_cfg))
        built = {}
        for section, builder in builders:
            values = data.get(section, {})
            try:
                built[section] = builder(values)
            except DomainError as e:
                fail(str(e), section, e.field, e)
            except (TypeError, ValueError) as e:
                fail(f"Non-numeric value: {str(e)}", section, _offending_key(values), e)

        try:
            seed = _as_int(run.get('seed', 0))
        except (TypeError, ValueError) as e:
            fail(f"seed must be an integer: {str(e)}", 'run', 'seed', e)

        sweep = None
        if 'sweep' in data:
            sweep = self._build_sweep(data['sweep'], fail)

        output_dir = str(run.get('output_dir', Config.OUTPUT_DIRECTORY))
        config = RunConfig(command=command, output_dir=output_dir, seed=seed, sweep=sweep, source=source, **built)
        if sweep is not None:
            # every sweep point must itself be a valid configuration
            for value in sweep.values:
                try:
                    config.with_parameter(sweep.parameter, value)
                except ConfigError as e:
                    fail(f"sweep value {value!r}: {e.args[0]}", 'sweep', 'values', e)
        return config

    def _build_sweep(self, values: Dict[str, Any], fail) -> SweepSpec:
        parameter = str(values.get('parameter', '')).strip()
        if '.' not in parameter:
            fail("parameter must be written as section.field", 'sweep', 'parameter')
        section, name = parameter.split('.', 1)
        if section not in SWEEPABLE or name not in KNOWN_KEYS[section] or name == 'include_shift':
            fail(f"'{parameter}' is not a sweepable numeric parameter", 'sweep', 'parameter')

        raw = values.get('values')
        if isinstance(raw, str):
            raw = [v for v in raw.split(',') if v.strip()]
        if not raw:
            fail("values must list at least one number", 'sweep', 'values')
        try:
            numbers = tuple(float(v) for v in raw)
        except (TypeError, ValueError) as e:
            fail(f"Non-numeric sweep value: {str(e)}", 'sweep', 'values', e)
        return SweepSpec(parameter=parameter, values=numbers)


INTEGER_KEYS = ('points', 'n_modes', 'tau_points', 'max_subdivisions')


def _offending_key(values: Dict[str, Any]) -> Optional[str]:
    for name, value in values.items():
        if isinstance(value, bool) or name == 'include_shift':
            continue
        try:
            number = float(value)
        except (TypeError, ValueError):
            return name
        if name in INTEGER_KEYS and not number.is_integer():
            return name
    return None


def _locate(lines: List[str], section: str, name: Optional[str]) -> Optional[int]:
    """1-based line of `name` inside `section`, or of the section header"""
    if not lines:
        return None
    header = re.compile(rf'^\s*(\[\s*{re.escape(section)}\s*\]|"?{re.escape(section)}"?\s*:)')
    key = re.compile(rf'^\s*"?{re.escape(name)}"?\s*[:=]') if name else None
    any_header = re.compile(r'^\s*\[[^\]]+\]\s*$|^[A-Za-z_][\w-]*:\s*$|^\s*"\w+"\s*:\s*\{')
    in_section = False
    for number, line in enumerate(lines, start=1):
        if header.match(line):
            if key is None:
                return number
            in_section = True
            continue
        if any_header.match(line):
            in_section = False
            continue
        if in_section and key.match(line):
            return number
    return None
