"""
Filter Bank

Quadrature (lognormal radial, cosine-power angular) and Gabor transfer
functions on the DFT grid, applied by FFT to produce nonnegative response
fields q_k.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from .synth import ScalarField
from .tessellation import DirectionSet
from ..utils.errors import ParameterError

logger = logging.getLogger(__name__)

DEFAULT_CENTER_FREQUENCY = math.pi / 3
DEFAULT_BANDWIDTH = 2.0  # octaves
GABOR_HALF_AMPLITUDE = 1.0 / math.sqrt(2.0 * math.log(2.0))


class FilterKind(str, Enum):
    QUADRATURE = 'quadrature'
    GABOR = 'gabor'


class ResponseMode(str, Enum):
    POWER = 'power'
    MAGNITUDE = 'magnitude'


@dataclass(frozen=True)
class FilterSpec:
    """One directional filter of the bank."""
    kind: FilterKind
    direction: tuple
    center_frequency: float = DEFAULT_CENTER_FREQUENCY
    bandwidth: float = DEFAULT_BANDWIDTH
    exponent: int = 1
    label: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'kind', FilterKind(self.kind))
        n = np.asarray(self.direction, dtype=np.float64)
        norm = float(np.linalg.norm(n))
        if abs(norm - 1.0) > 1e-9:
            raise ParameterError(f"filter direction must be a unit vector, norm is {norm}")
        object.__setattr__(self, 'direction', tuple(float(x) for x in n))
        if not 0.0 < self.center_frequency < math.pi:
            raise ParameterError(f"center frequency must lie in (0, π), got {self.center_frequency}")
        if self.bandwidth <= 0:
            raise ParameterError(f"bandwidth must be positive, got {self.bandwidth}")
        if int(self.exponent) != self.exponent or self.exponent < 1:
            raise ParameterError(f"angular exponent must be an integer >= 1, got {self.exponent}")

    @property
    def dim(self) -> int:
        return len(self.direction)

    @property
    def gabor_sigma(self) -> float:
        """Frequency-domain σ whose half-amplitude radial width spans `bandwidth` octaves."""
        r = 2.0 ** self.bandwidth
        return self.center_frequency * (r - 1.0) / (r + 1.0) * GABOR_HALF_AMPLITUDE


@dataclass(frozen=True)
class ResponseField:
    """Nonnegative per-pixel filter response."""
    values: np.ndarray
    label: str = ''
    mode: ResponseMode = ResponseMode.POWER

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if np.any(values < 0):
            raise ParameterError(f"response {self.label!r} has negative values")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'mode', ResponseMode(self.mode))


@lru_cache(maxsize=16)
def frequency_grid(shape: tuple) -> tuple:
    """Per-axis angular frequencies 2πm/M, m in [-M/2, M/2), broadcast to `shape`."""
    if not shape or min(shape) < 1:
        raise ParameterError(f"frequency grid needs positive extent, got {shape}")
    axes = [2.0 * np.pi * np.fft.fftfreq(m) for m in shape]
    grid = np.meshgrid(*axes, indexing='ij')
    for g in grid:
        g.setflags(write=False)
    return tuple(grid)


def lognormal_radial(rho: np.ndarray, center: float, bandwidth: float) -> np.ndarray:
    """R(ρ) = exp(-(4/(B² ln 2)) ln²(ρ/ρ₀)), with R(0) = 0."""
    rho = np.asarray(rho, dtype=np.float64)
    out = np.zeros_like(rho)
    positive = rho > 0
    log_ratio = np.log(rho[positive] / center)
    out[positive] = np.exp(-(4.0 / (bandwidth ** 2 * math.log(2.0))) * log_ratio ** 2)
    return out


def transfer_at(spec: FilterSpec, omega: np.ndarray) -> np.ndarray:
    """
    Evaluate the filter's transfer function at frequency vectors.

    Args:
        spec: the filter
        omega: array (..., N) of angular frequencies in radians/sample

    Returns:
        real array (...) of transfer values
    """
    omega = np.asarray(omega, dtype=np.float64)
    if omega.shape[-1] != spec.dim:
        raise ParameterError(f"frequency vectors of size {omega.shape[-1]} for a {spec.dim}-D filter")
    n = np.asarray(spec.direction)
    rho = np.linalg.norm(omega, axis=-1)

    if spec.kind is FilterKind.QUADRATURE:
        along = omega @ n
        with np.errstate(invalid='ignore', divide='ignore'):
            cosine = np.where(rho > 0, along / np.where(rho > 0, rho, 1.0), 0.0)
        angular = np.maximum(cosine, 0.0) ** spec.exponent
        return lognormal_radial(rho, spec.center_frequency, spec.bandwidth) * angular

    offset = omega - spec.center_frequency * n
    h = np.exp(-np.sum(offset * offset, axis=-1) / (2.0 * spec.gabor_sigma ** 2))
    # DC carries no orientation; every filter rejects it.
    return np.where(rho > 0, h, 0.0)


def _grid_omega(shape: tuple) -> np.ndarray:
    return np.stack(frequency_grid(tuple(shape)), axis=-1)


def synth_quadrature_transfer(spec: FilterSpec, shape: tuple) -> np.ndarray:
    """Quadrature transfer samples on the DFT grid of `shape` (unshifted order)."""
    if spec.kind is not FilterKind.QUADRATURE:
        raise ParameterError(f"expected a quadrature filter, got {spec.kind.value}")
    return transfer_at(spec, _grid_omega(shape))


def synth_gabor_transfer(spec: FilterSpec, shape: tuple) -> np.ndarray:
    """Gabor transfer samples on the DFT grid of `shape` (unshifted order)."""
    if spec.kind is not FilterKind.GABOR:
        raise ParameterError(f"expected a Gabor filter, got {spec.kind.value}")
    return transfer_at(spec, _grid_omega(shape))


def synth_transfer(spec: FilterSpec, shape: tuple) -> np.ndarray:
    if spec.kind is FilterKind.QUADRATURE:
        return synth_quadrature_transfer(spec, shape)
    return synth_gabor_transfer(spec, shape)


def make_bank(dirs: DirectionSet, kind=FilterKind.QUADRATURE,
              center_frequency: float = DEFAULT_CENTER_FREQUENCY,
              bandwidth: float = DEFAULT_BANDWIDTH, exponent: int = 1) -> list[FilterSpec]:
    """One filter per tune-in direction."""
    return [
        FilterSpec(kind=kind, direction=tuple(n), center_frequency=center_frequency,
                   bandwidth=bandwidth, exponent=exponent, label=label)
        for label, n in zip(dirs.labels, dirs.directions)
    ]


def _response(spectrum: np.ndarray, spec: FilterSpec, mode: ResponseMode) -> ResponseField:
    h = synth_transfer(spec, spectrum.shape)
    complex_response = np.fft.ifftn(spectrum * h, norm='ortho')
    magnitude = np.abs(complex_response)
    values = magnitude ** 2 if mode is ResponseMode.POWER else magnitude
    return ResponseField(values, label=spec.label, mode=mode)


def apply_bank(f: ScalarField, bank: list[FilterSpec], mode=ResponseMode.POWER,
               threads: int = 1, upsample: bool = False) -> list[ResponseField]:
    """
    Filter f with every transfer function of the bank.

    Args:
        f: input image, even dims
        bank: filters whose dimension matches f
        mode: POWER (|response|², default) or MAGNITUDE (|response|)
        threads: worker threads; each response is produced by exactly one worker
        upsample: run the bank on upsample2x(f) and decimate after squaring

    Returns:
        One ResponseField per filter, in bank order.
    """
    mode = ResponseMode(mode)
    if not bank:
        raise ParameterError("filter bank is empty")
    f.require_analysis_size()
    f.require_even()
    for spec in bank:
        if spec.dim != f.ndim:
            raise ParameterError(f"filter {spec.label!r} is {spec.dim}-D but the image is {f.ndim}-D")

    if upsample:
        from .tensor import upsample2x
        fine = upsample2x(f)
        fine_bank = [replace(s, center_frequency=s.center_frequency / 2.0) for s in bank]
        responses = apply_bank(fine, fine_bank, mode=mode, threads=threads)
        decimate = tuple(slice(None, None, 2) for _ in range(f.ndim))
        return [ResponseField(r.values[decimate], label=r.label, mode=r.mode) for r in responses]

    spectrum = np.fft.fftn(f.values, norm='ortho')
    logger.info(f"Applying {len(bank)} filters to {f.dims} image ({mode.value}, {threads} threads)")
    if threads <= 1:
        return [_response(spectrum, spec, mode) for spec in bank]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda spec: _response(spectrum, spec, mode), bank))


def uniform_responses(q, shape: tuple, labels=None, mode=ResponseMode.POWER) -> list[ResponseField]:
    """Spatially constant responses q_k over a grid."""
    labels = labels or [f"n{k + 1}" for k in range(len(q))]
    return [ResponseField(np.full(shape, float(v)), label=label, mode=mode) for v, label in zip(q, labels)]
