"""
Synthetic Images

Deterministic test inputs with known orientation: linearly symmetric waves
f(r) = g(kᵀr), their superpositions, and seeded Gaussian noise.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from functools import reduce

import numpy as np

from ..utils.errors import ParameterError

logger = logging.getLogger(__name__)

MIN_SIZE = 4
ON_GRID_TOL = 1e-9
GAUSS_ENVELOPE = 8.0  # samples


@dataclass(frozen=True)
class ScalarField:
    """Real samples on a regular grid; axis i carries coordinate r_i."""
    values: np.ndarray
    periodic: bool = True

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim < 1:
            raise ParameterError("a field needs at least one axis")
        if not np.all(np.isfinite(values)):
            raise ParameterError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def dims(self) -> tuple:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    def require_analysis_size(self) -> None:
        """Pipeline stages need at least MIN_SIZE samples per axis."""
        if min(self.dims) < MIN_SIZE:
            raise ParameterError(f"field dims {self.dims} below the minimum of {MIN_SIZE} per axis")

    def require_even(self) -> None:
        if any(m % 2 for m in self.dims):
            raise ParameterError(f"field dims {self.dims} must be even")


class Profile(str, Enum):
    COSINE = 'cosine'
    SQUARE = 'square'
    GAUSS_MODULATED = 'gauss_modulated'


@dataclass(frozen=True)
class WaveSpec:
    """f(r) = amplitude · g(ω₀·kᵀr + phase)."""
    direction: tuple
    frequency: float
    profile: Profile = Profile.COSINE
    amplitude: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        k = np.asarray(self.direction, dtype=np.float64)
        norm = float(np.linalg.norm(k))
        if norm == 0.0:
            raise ParameterError("wave direction must be nonzero")
        if not 0.0 < self.frequency < np.pi:
            raise ParameterError(f"wave frequency must lie in (0, π), got {self.frequency}")
        object.__setattr__(self, 'direction', tuple(float(x) for x in k / norm))
        object.__setattr__(self, 'profile', Profile(self.profile))

    @property
    def dim(self) -> int:
        return len(self.direction)

    def angle_deg(self) -> float:
        """Angle of a 2-D direction in degrees."""
        return float(np.degrees(np.arctan2(self.direction[1], self.direction[0])))


def wave_from_angle(angle_deg: float, frequency: float, profile=Profile.COSINE,
                    amplitude: float = 1.0, phase: float = 0.0) -> WaveSpec:
    t = np.radians(angle_deg)
    return WaveSpec((np.cos(t), np.sin(t)), frequency, profile, amplitude, phase)


def _bins(dims, spec: WaveSpec) -> np.ndarray:
    return spec.frequency * np.asarray(spec.direction) * np.asarray(dims) / (2.0 * np.pi)


def is_on_grid(dims, spec: WaveSpec) -> bool:
    bins = _bins(dims, spec)
    return bool(np.all(np.abs(bins - np.round(bins)) < ON_GRID_TOL))


def snap_to_grid(dims, spec: WaveSpec) -> WaveSpec:
    """Move ω₀k to the nearest integer DFT bin vector."""
    if len(dims) != spec.dim:
        raise ParameterError(f"wave of dimension {spec.dim} on a {len(dims)}-D grid")
    bins = np.round(_bins(dims, spec))
    if not np.any(bins):
        raise ParameterError(f"wave frequency {spec.frequency} rounds to DC on grid {tuple(dims)}")
    omega = 2.0 * np.pi * bins / np.asarray(dims)
    frequency = float(np.linalg.norm(omega))
    snapped = replace(spec, direction=tuple(omega / frequency), frequency=frequency)
    logger.debug(f"Snapped wave to bins {bins.astype(int).tolist()} (frequency {frequency:.6f})")
    return snapped


def _square(tau: np.ndarray) -> np.ndarray:
    # Zero crossings snap to 0 so the wave keeps exact half-wave symmetry.
    u = np.round(np.mod(tau / (2.0 * np.pi), 1.0), 12)
    crossing = (u == 0.25) | (u == 0.75)
    positive = (u < 0.25) | (u > 0.75)
    return np.where(crossing, 0.0, np.where(positive, 1.0, -1.0))


def linear_symmetric(dims, spec: WaveSpec, periodic: bool = True) -> ScalarField:
    """Sample amplitude · g(ω₀·kᵀr + phase) on the integer grid."""
    dims = tuple(int(m) for m in dims)
    if len(dims) != spec.dim:
        raise ParameterError(f"wave of dimension {spec.dim} on a {len(dims)}-D grid")
    if periodic and not is_on_grid(dims, spec):
        raise ParameterError(
            f"frequency {spec.frequency} along {spec.direction} is off-grid for periodic dims {dims}")

    coords = np.meshgrid(*[np.arange(m, dtype=np.float64) for m in dims], indexing='ij')
    projection = sum(k * r for k, r in zip(spec.direction, coords))
    tau = spec.frequency * projection + spec.phase

    if spec.profile is Profile.COSINE:
        values = np.cos(tau)
    elif spec.profile is Profile.SQUARE:
        values = _square(tau)
    else:
        center = sum(k * (m - 1) / 2.0 for k, m in zip(spec.direction, dims))
        envelope = np.exp(-((projection - center) ** 2) / (2.0 * GAUSS_ENVELOPE ** 2))
        values = envelope * np.cos(tau)

    return ScalarField(spec.amplitude * values, periodic=periodic)


def superpose(fields: list[ScalarField]) -> ScalarField:
    """Pointwise sum of fields with identical dims."""
    if not fields:
        raise ParameterError("nothing to superpose")
    dims = fields[0].dims
    for f in fields[1:]:
        if f.dims != dims:
            raise ParameterError(f"dims mismatch: {f.dims} vs {dims}")
    total = reduce(np.add, (f.values for f in fields))
    return ScalarField(total, periodic=all(f.periodic for f in fields))


def _row_normals(seed: int, row: int, count: int) -> np.ndarray:
    """Box–Muller normals from a Philox stream keyed by seed XOR row."""
    key = (int(seed) ^ int(row)) & 0xFFFFFFFFFFFFFFFF
    rng = np.random.Generator(np.random.Philox(key=key))
    pairs = (count + 1) // 2
    u = rng.random(2 * pairs).reshape(pairs, 2)
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    angle = 2.0 * np.pi * u[:, 1]
    z = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1).reshape(-1)
    return z[:count]


def add_noise(f: ScalarField, sigma: float, seed: int) -> ScalarField:
    """Add i.i.d. N(0, sigma²) samples; row r of axis 0 uses its own Philox key."""
    if sigma < 0:
        raise ParameterError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return f
    rows = f.dims[0]
    per_row = int(np.prod(f.dims[1:], dtype=np.int64)) if f.ndim > 1 else 1
    noise = np.stack([_row_normals(seed, r, per_row) for r in range(rows)]).reshape(f.dims)
    logger.debug(f"Added noise sigma={sigma} seed={seed} to field {f.dims}")
    return ScalarField(f.values + sigma * noise, periodic=f.periodic)
