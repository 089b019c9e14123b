"""
Configuration module for abnorm
"""

import os
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import Dict, List, Optional

from dotenv import load_dotenv

from abnorm.core.burkholder import Exponent
from abnorm.core.errors import InvalidConfigError

load_dotenv()


def parse_exponent(text: str) -> float:
    """'1.5', '3' or '4/3' as a float"""
    try:
        return float(Fraction(text.strip()))
    except ZeroDivisionError:
        raise ValueError(f"zero denominator in {text!r}")


class Config:
    """Environment settings"""

    # Logging
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOG_DIR = os.getenv('LOG_DIR', 'logs')
    LOG_TO_FILE = os.getenv('LOG_TO_FILE', 'False').lower() == 'true'

    # Run history (empty disables it)
    DATABASE_URL = os.getenv('DATABASE_URL', '')

    # Defaults for every command
    DEFAULT_SEED = int(os.getenv('DEFAULT_SEED', 20090205))
    OUTPUT_PATH = os.getenv('OUTPUT_PATH', 'report.json')
    ARTIFACT_DIR = os.getenv('ARTIFACT_DIR', '')
    P_LIST = [parse_exponent(p) for p in os.getenv('P_LIST', '4/3,1.5,2,3,4').split(',') if p.strip()]

    # Half-line grid
    GRID_MIN = float(os.getenv('GRID_MIN', 1e-6))
    GRID_MAX = float(os.getenv('GRID_MAX', 1e6))
    GRID_N = int(os.getenv('GRID_N', 4000))

    # Plane field
    FIELD_N = int(os.getenv('FIELD_N', 256))
    FIELD_EXTENT = float(os.getenv('FIELD_EXTENT', 32.0))

    @classmethod
    def validate(cls):
        """Validate environment configuration"""
        if cls.GRID_MIN <= 0 or cls.GRID_MIN >= cls.GRID_MAX:
            raise ValueError("GRID_MIN must be positive and below GRID_MAX")
        if cls.GRID_N < 16:
            raise ValueError("GRID_N must be at least 16")
        if cls.FIELD_N < 16 or cls.FIELD_N & (cls.FIELD_N - 1):
            raise ValueError("FIELD_N must be a power of two, at least 16")
        if cls.FIELD_EXTENT <= 0:
            raise ValueError("FIELD_EXTENT must be positive")
        return True


# Commands of the command-line front end
COMMANDS = {
    'pointwise': {
        'description': 'Burkholder majorization, rank-one convexity, scaling integrals',
        'emoji': '📐',
    },
    'norms': {
        'description': 'Operator norms of H and H - I on the half-line',
        'emoji': '📏',
    },
    'stretch': {
        'description': 'Stretch inequality, sharpness search and mode functional',
        'emoji': '🌀',
    },
    'crosscheck2d': {
        'description': 'FFT transform of a radial bump against the mode reduction',
        'emoji': '🔁',
    },
    'heat': {
        'description': 'Heat semigroup and the heat-extension bilinear identity',
        'emoji': '🔥',
    },
    'structural': {
        'description': 'Mode-ansatz identities with surrogate Phi',
        'emoji': '🧱',
    },
    'all': {
        'description': 'Every suite above',
        'emoji': '🚀',
    },
}

# Check name -> default tolerance
DEFAULT_TOLERANCES = {
    'dictionary_roundtrip': 1e-14,
    'burkholder_majorization': 1e-12,
    'burkholder_equality': 1e-12,
    'rank_one_convexity': 1e-9,
    'scaling_integral': 1e-6,
    'lambda0_identity': 1e-14,
    'norm_lower': 0.95,
    'norm_upper': 1.02,
    'stretch_inequality': 1e-9,
    'stretch_sharpness': 0.95,
    'mode_functional': 1e-8,
    'crosscheck_concentration': 0.99,
    'crosscheck_mismatch': 0.02,
    'crosscheck_convergence': 0.6,
    'heat_identity': 1e-2,
    'heat_semigroup': 1e-12,
    'structural_pointwise': 1e-10,
    'structural_c': 1e-12,
    'structural_ibp': 1e-6,
}

# Workload sizes for the suites
WORKLOADS = {
    'pointwise_samples': 1_000_000,
    'convexity_probes': 100_000,
    'scaling_points': 20,
    'random_stretches': 50,
    'norm_restarts': 8,
    'norm_max_iter': 200,
}

# key -> unit accepted in the key-value config file
KEY_UNITS = {
    'command': None,
    'p_list': '-',
    'grid_min': 'length',
    'grid_max': 'length',
    'grid_n': 'count',
    'field_n': 'count',
    'extent': 'length',
    'seed': 'count',
    'output_path': 'path',
    'database_url': 'path',
    'artifact_dir': 'path',
}


def _format_float(value: float) -> str:
    return repr(float(value))


@dataclass
class CommandConfig:
    """
    Everything one run depends on.

    Precedence, lowest first: these defaults, the environment (Config), a
    key-value file (from_text), command-line flags (updated).
    """
    command: str = 'all'
    p_list: List[float] = field(default_factory=lambda: list(Config.P_LIST))
    grid_min: float = Config.GRID_MIN
    grid_max: float = Config.GRID_MAX
    grid_n: int = Config.GRID_N
    field_n: int = Config.FIELD_N
    extent: float = Config.FIELD_EXTENT
    seed: int = Config.DEFAULT_SEED
    tolerances: Dict[str, float] = field(default_factory=dict)
    output_path: str = Config.OUTPUT_PATH
    database_url: str = Config.DATABASE_URL
    artifact_dir: str = Config.ARTIFACT_DIR
    workloads: Dict[str, int] = field(default_factory=dict)

    @property
    def exponents(self) -> List[Exponent]:
        return [Exponent(p) for p in self.p_list]

    def tolerance(self, check: str) -> float:
        return self.tolerances.get(check, DEFAULT_TOLERANCES[check])

    def workload(self, name: str) -> int:
        return self.workloads.get(name, WORKLOADS[name])

    def grid_spec(self) -> dict:
        return {'uMin': self.grid_min, 'uMax': self.grid_max, 'n': self.grid_n}

    def field_spec(self) -> dict:
        return {'n': self.field_n, 'extent': self.extent}

    def validate(self) -> 'CommandConfig':
        """Raise InvalidConfigError on anything out of range"""
        if self.command not in COMMANDS:
            raise InvalidConfigError(f"Unknown command: {self.command}")
        if not self.p_list:
            raise InvalidConfigError("pList must name at least one exponent")
        if any(not p > 1.0 for p in self.p_list):
            raise InvalidConfigError(f"every p must exceed 1, got {self.p_list}")
        if not 0 < self.grid_min < self.grid_max:
            raise InvalidConfigError("grid needs 0 < grid_min < grid_max")
        if self.grid_n < 16:
            raise InvalidConfigError("grid_n must be at least 16")
        if self.field_n < 16 or self.field_n & (self.field_n - 1):
            raise InvalidConfigError("field_n must be a power of two, at least 16")
        if self.extent <= 0:
            raise InvalidConfigError("extent must be positive")
        for name, value in self.tolerances.items():
            if name not in DEFAULT_TOLERANCES:
                raise InvalidConfigError(f"Unknown tolerance: {name}")
            if not value > 0:
                raise InvalidConfigError(f"tolerance {name} must be positive")
        for name, value in self.workloads.items():
            if name not in WORKLOADS:
                raise InvalidConfigError(f"Unknown workload: {name}")
            if value < 1:
                raise InvalidConfigError(f"workload {name} must be positive")
        return self

    def updated(self, **overrides) -> 'CommandConfig':
        """Copy with the non-None overrides applied; dict fields are merged"""
        changes = {}
        for name, value in overrides.items():
            if value is None:
                continue
            if name in ('tolerances', 'workloads'):
                value = {**getattr(self, name), **value}
            changes[name] = value
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            'command': self.command,
            'pList': list(self.p_list),
            'gridSpec': self.grid_spec(),
            'fieldSpec': self.field_spec(),
            'seed': self.seed,
            'tolerances': dict(sorted(self.tolerances.items())),
            'workloads': dict(sorted(self.workloads.items())),
            'outputPath': self.output_path,
            'artifactDir': self.artifact_dir,
        }

    def to_text(self) -> str:
        """Flat `key = value [unit]` lines"""
        lines = [f"command = {self.command}"]
        for item in fields(self):
            name = item.name
            if name in ('command', 'tolerances', 'workloads'):
                continue
            value = getattr(self, name)
            if name == 'p_list':
                text = ', '.join(_format_float(p) for p in value)
            elif isinstance(value, float):
                text = _format_float(value)
            else:
                text = str(value)
            lines.append(f"{name} = {text} [{KEY_UNITS[name]}]")
        for name, value in sorted(self.tolerances.items()):
            lines.append(f"tol.{name} = {_format_float(value)} [-]")
        for name, value in sorted(self.workloads.items()):
            lines.append(f"work.{name} = {value} [count]")
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, text: str, base: Optional['CommandConfig'] = None) -> 'CommandConfig':
        """Parse to_text output (or a hand-written file) on top of base"""
        base = base or cls()
        values, tolerances, workloads = {}, {}, {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise InvalidConfigError(f"line {number}: expected key = value")
            key, value = (part.strip() for part in line.split('=', 1))
            unit = None
            if value.endswith(']') and '[' in value:
                value, unit = value[:-1].rsplit('[', 1)
                value, unit = value.strip(), unit.strip()
            try:
                if key.startswith('tol.'):
                    _check_unit(key, unit, '-', number)
                    tolerances[key[4:]] = float(value)
                elif key.startswith('work.'):
                    _check_unit(key, unit, 'count', number)
                    workloads[key[5:]] = int(value)
                elif key in KEY_UNITS:
                    _check_unit(key, unit, KEY_UNITS[key], number)
                    values[key] = _parse_value(key, value)
                else:
                    raise InvalidConfigError(f"line {number}: unknown key {key}")
            except ValueError as e:
                raise InvalidConfigError(f"line {number}: bad value for {key}: {e}")
        return base.updated(tolerances=tolerances, workloads=workloads, **values)


def _check_unit(key: str, unit: Optional[str], expected: Optional[str], number: int):
    if unit is not None and unit != expected:
        raise InvalidConfigError(f"line {number}: {key} is in [{expected}], not [{unit}]")


def _parse_value(key: str, value: str):
    if key == 'p_list':
        return [parse_exponent(p) for p in value.split(',') if p.strip()]
    if key in ('grid_n', 'field_n', 'seed'):
        return int(value)
    if key in ('grid_min', 'grid_max', 'extent'):
        return float(value)
    return value
