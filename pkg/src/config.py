"""
Configuration Module

Loads environment settings and flat key=value run configurations.
"""

import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Union

from dotenv import dotenv_values, load_dotenv

from .utils.errors import UsageError

logger = logging.getLogger(__name__)

# Load .env file if it exists
load_dotenv()


class Config:
    """Process-wide settings from the environment."""

    # Logging
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')

    # Run configuration read when no --config flag is given
    RUN_CONFIG = os.getenv('STF_CONFIG', '')

    @property
    def THREADS(self) -> int:
        """Worker threads for the filter bank, from STF_THREADS."""
        raw = os.getenv('STF_THREADS', '1')
        try:
            return int(raw)
        except ValueError:
            raise UsageError(f"STF_THREADS must be an integer, got {raw!r}")


config = Config()


@dataclass
class RunConfig:
    """Every subcommand parameter, as read from a config file and flags."""

    # synth
    dims: tuple = (64, 64)
    waves: list = field(default_factory=list)
    periodic: bool = True
    snap: bool = True
    noise: float = 0.0
    seed: int = 0

    # bank
    directions: str = ''
    kind: str = 'quadrature'
    rho0: float = 1.0471975511965976  # π/3
    bandwidth: float = 2.0
    exponent: int = 1
    response_mode: str = 'power'
    upsample: bool = False

    # tensor
    construction: str = 'gradient'
    coeff: Optional[tuple] = None
    inner_scale: float = 1.0
    outer_scale: float = 3.0
    boundary: str = 'periodic'
    derivative: Optional[str] = None  # spectral when upsampling, else gaussian

    # analyze
    threads: int = field(default_factory=lambda: config.THREADS)
    rel_tol: float = 1e-3
    margin: int = 0
    max_error: float = 0.5
    truth_angle: Optional[float] = None

    def validate(self) -> 'RunConfig':
        """Check every parameter; raise UsageError on the first problem."""
        from .core.filterbank import FilterKind, ResponseMode
        from .core.tensor import BOUNDARY_MODES, Construction, DERIVATIVES

        if len(self.dims) < 1 or min(self.dims) < 1:
            raise UsageError(f"dims must be positive, got {self.dims}")
        _require_choice('kind', self.kind, [k.value for k in FilterKind])
        _require_choice('response_mode', self.response_mode, [m.value for m in ResponseMode])
        _require_choice('construction', self.construction, [c.value for c in Construction])
        _require_choice('boundary', self.boundary, sorted(BOUNDARY_MODES))
        if self.derivative is not None:
            _require_choice('derivative', self.derivative, list(DERIVATIVES))
        if self.noise < 0:
            raise UsageError(f"noise must be non-negative, got {self.noise}")
        if self.threads < 1:
            raise UsageError(f"threads must be at least 1, got {self.threads}")
        if self.exponent < 1:
            raise UsageError(f"exponent must be at least 1, got {self.exponent}")
        if self.margin < 0:
            raise UsageError(f"margin must be non-negative, got {self.margin}")
        if not 0.0 < self.rel_tol < 1.0:
            raise UsageError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if self.coeff is not None and (self.coeff[0] <= 0 or self.coeff[1] < 0):
            raise UsageError(f"coeff needs alpha > 0 and beta >= 0, got {self.coeff}")
        if self.inner_scale <= 0:
            raise UsageError(f"inner_scale must be positive, got {self.inner_scale}")
        if self.outer_scale < 0:
            raise UsageError(f"outer_scale must be non-negative, got {self.outer_scale}")
        return self


def _require_choice(key: str, value: str, choices: list) -> None:
    if value not in choices:
        raise UsageError(f"{key} must be one of {choices}, got {value!r}")


# ---------------------------------------------------------------------------
# Value parsers (shared with the command-line flags)
# ---------------------------------------------------------------------------

def parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def parse_dims(text: str) -> tuple:
    """'64x64' or '8x8x8'."""
    try:
        dims = tuple(int(p) for p in text.lower().split('x'))
    except ValueError:
        raise UsageError(f"bad dims {text!r} (expected e.g. 64x64)")
    if not dims or min(dims) < 1:
        raise UsageError(f"dims must be positive, got {text!r}")
    return dims


def parse_coeff(text: str) -> tuple:
    """'alpha,beta'."""
    parts = text.split(',')
    if len(parts) != 2:
        raise UsageError(f"coeff must be 'alpha,beta', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"coeff must be two numbers, got {text!r}")


def parse_wave(text: str):
    """
    DIRECTION:FREQUENCY[:PROFILE[:AMPLITUDE[:PHASE]]]

    DIRECTION is an angle in degrees for 2-D waves or a comma-separated vector.
    """
    from .core.synth import WaveSpec, wave_from_angle
    from .utils.errors import ParameterError

    parts = text.strip().split(':')
    if not 2 <= len(parts) <= 5:
        raise UsageError(f"bad wave {text!r} (expected DIRECTION:FREQ[:PROFILE[:AMP[:PHASE]]])")
    try:
        frequency = float(parts[1])
        profile = parts[2] if len(parts) > 2 and parts[2] else 'cosine'
        amplitude = float(parts[3]) if len(parts) > 3 else 1.0
        phase = float(parts[4]) if len(parts) > 4 else 0.0
        if ',' in parts[0]:
            direction = tuple(float(x) for x in parts[0].split(','))
            return WaveSpec(direction, frequency, profile, amplitude, phase)
        return wave_from_angle(float(parts[0]), frequency, profile, amplitude, phase)
    except (ValueError, ParameterError) as e:
        raise UsageError(f"bad wave {text!r}: {e}")


def parse_waves(text: str) -> list:
    return [parse_wave(w) for w in text.split(';') if w.strip()]


_PARSERS = {
    bool: parse_bool,
    int: int,
    float: float,
    str: str,
}

_SPECIAL = {
    'dims': parse_dims,
    'waves': parse_waves,
    'coeff': parse_coeff,
    'truth_angle': float,
    'derivative': str,
    'threads': int,
}


def _parse_value(key: str, raw: str):
    if key in _SPECIAL:
        parser = _SPECIAL[key]
    else:
        default = getattr(RunConfig, key)
        parser = _PARSERS[type(default)]
    try:
        return parser(raw.strip())
    except ValueError:
        raise UsageError(f"bad value for {key}: {raw!r}")


def known_keys() -> list[str]:
    return [f.name for f in fields(RunConfig)]


def load_run_config(path: Optional[Union[str, Path]] = None, overrides: Optional[dict] = None) -> RunConfig:
    """
    Build a RunConfig from a key=value file, then apply flag overrides.

    Overrides with value None are ignored so unset flags keep file values.
    Unknown keys in either source raise UsageError.
    """
    run = RunConfig()
    keys = set(known_keys())

    path = path or config.RUN_CONFIG or None
    if path:
        if not Path(path).is_file():
            raise UsageError(f"config file not found: {path}")
        values = dotenv_values(path)
        unknown = sorted(set(values) - keys)
        if unknown:
            raise UsageError(f"unknown config keys in {path}: {', '.join(unknown)}")
        parsed = {}
        for key, raw in values.items():
            if raw is None:
                raise UsageError(f"config key {key} in {path} has no value")
            parsed[key] = _parse_value(key, raw)
        run = replace(run, **parsed)
        logger.debug(f"Loaded {len(parsed)} settings from {path}")

    if overrides:
        unknown = sorted(set(overrides) - keys)
        if unknown:
            raise UsageError(f"unknown settings: {', '.join(unknown)}")
        run = replace(run, **{k: v for k, v in overrides.items() if v is not None})

    return run.validate()
