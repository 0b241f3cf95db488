"""
Tensor Constructions

T_GK from frame-corrected filter responses, T_BG by direct sampling, the
global spectral-moment and DFT-gradient tensors, the Gaussian-derivative
tensor field, and 2x spectral upsampling.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import ndimage

from .filterbank import ResponseField, frequency_grid
from .linalg import (SymMat, dense_to_packed, eig_sym_batch, packed_pairs,
                     packed_size, packed_to_dense, dim_from_packed)
from .synth import ScalarField
from .tessellation import DirectionSet
from ..utils.errors import ParameterError

logger = logging.getLogger(__name__)

COUNTEREXAMPLE_Q = (1.0, 0.0, 0.25, 0.0, 0.25, 0.0)
KERNEL_TRUNCATE = 4.0


class Construction(str, Enum):
    GK = 'gk'
    BG = 'bg'
    GRADIENT = 'gradient'
    SPECTRAL = 'spectral'


@dataclass(frozen=True)
class FrameCoefficients:
    """Weights of T_GK = Σ q_k (α n_k n_kᵀ - β I)."""
    alpha: float = 1.25
    beta: float = 0.25

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if not self.beta >= 0:
            raise ParameterError(f"beta must be non-negative, got {self.beta}")


ICOSA6_COEFFICIENTS = FrameCoefficients(alpha=1.25, beta=0.25)


@dataclass(frozen=True)
class TensorField:
    """Per-pixel SymMat stored as N(N+1)/2 planes over a grid."""
    planes: np.ndarray
    tag: Construction

    def __post_init__(self):
        planes = np.array(self.planes, dtype=np.float64, copy=True)
        dim_from_packed(planes.shape[0])
        if not np.all(np.isfinite(planes)):
            raise ParameterError("tensor field entries must be finite")
        planes.setflags(write=False)
        object.__setattr__(self, 'planes', planes)
        object.__setattr__(self, 'tag', Construction(self.tag))

    @property
    def dim(self) -> int:
        return dim_from_packed(self.planes.shape[0])

    @property
    def grid(self) -> tuple:
        return self.planes.shape[1:]

    def at(self, index) -> SymMat:
        return SymMat(self.dim, self.planes[(slice(None),) + tuple(index)])

    def dense(self) -> np.ndarray:
        return packed_to_dense(self.planes)

    def mean(self) -> SymMat:
        axes = tuple(range(1, self.planes.ndim))
        return SymMat(self.dim, self.planes.mean(axis=axes) if axes else self.planes)

    def trace(self) -> np.ndarray:
        return sum(self.planes[p] for p, (i, j) in enumerate(packed_pairs(self.dim)) if i == j)

    def min_eigenvalues(self) -> np.ndarray:
        w, _ = eig_sym_batch(self.dense())
        return w[..., -1]

    def is_psd(self, rel_tol: float = 1e-10) -> bool:
        return bool(np.all(self.min_eigenvalues() >= -rel_tol * np.abs(self.trace())))


def _stack_responses(q: list[ResponseField], dirs: DirectionSet) -> np.ndarray:
    if len(q) != len(dirs):
        raise ParameterError(f"{len(q)} responses for {len(dirs)} directions")
    if not q:
        raise ParameterError("no responses")
    shape = q[0].values.shape
    for r in q:
        if r.values.shape != shape:
            raise ParameterError(f"response {r.label!r} has shape {r.values.shape}, expected {shape}")
    return np.stack([r.values for r in q])


def _outer_planes(dirs: DirectionSet) -> np.ndarray:
    """Packed n_k n_kᵀ for every direction, shape (K, P)."""
    return np.stack([dense_to_packed(np.outer(n, n)) for n in dirs.directions])


def _diagonal_mask(dim: int) -> np.ndarray:
    return np.array([1.0 if i == j else 0.0 for i, j in packed_pairs(dim)])


def tensor_bg(q: list[ResponseField], dirs: DirectionSet) -> TensorField:
    """Direct sampling: T = Σ_k q_k n_k n_kᵀ per pixel."""
    weights = _stack_responses(q, dirs)
    planes = np.tensordot(_outer_planes(dirs), weights, axes=([0], [0]))
    return TensorField(planes, Construction.BG)


def tensor_gk(q: list[ResponseField], dirs: DirectionSet,
              coef: Optional[FrameCoefficients] = None) -> TensorField:
    """
    Frame-corrected tensor T = Σ_k q_k (α n_k n_kᵀ - β I) per pixel.

    Coefficients default to (5/4, 1/4) only for the icosahedral set; any
    other direction set must supply them.
    """
    if coef is None:
        if dirs.name != 'icosa6':
            raise ParameterError(f"no default frame coefficients for direction set {dirs.name!r}")
        coef = ICOSA6_COEFFICIENTS
    weights = _stack_responses(q, dirs)
    outer_sum = np.tensordot(_outer_planes(dirs), weights, axes=([0], [0]))
    total = weights.sum(axis=0)
    mask = _diagonal_mask(dirs.dim).reshape((-1,) + (1,) * total.ndim)
    planes = coef.alpha * outer_sum - coef.beta * mask * total
    return TensorField(planes, Construction.GK)


# ---------------------------------------------------------------------------
# Global moment tensors
# ---------------------------------------------------------------------------

def _require_global_input(f: ScalarField) -> None:
    f.require_even()


def spectral_moment_tensor(f: ScalarField) -> SymMat:
    """T = Σ_ω |F(ω)|² ω ωᵀ over the full DFT grid (unitary DFT)."""
    _require_global_input(f)
    power = np.abs(np.fft.fftn(f.values, norm='ortho')) ** 2
    omega = frequency_grid(f.dims)
    entries = [np.sum(power * omega[i] * omega[j]) for i, j in packed_pairs(f.ndim)]
    return SymMat(f.ndim, np.array(entries))


def spectral_gradient(f: ScalarField) -> list[np.ndarray]:
    """Complex DFT gradient: inverse DFT of iω_i F(ω) per axis."""
    spectrum = np.fft.fftn(f.values, norm='ortho')
    return [np.fft.ifftn(1j * w * spectrum, norm='ortho') for w in frequency_grid(f.dims)]


def dft_gradient_tensor(f: ScalarField) -> SymMat:
    """
    T = Σ_r ∇f ∇fᵀ with gradients from the DFT.

    At the Nyquist bin the DFT gradient of a real image is not real, so the
    products are Hermitian (g_i conj(g_j)); their sum is real and equals
    spectral_moment_tensor by Parseval.
    """
    _require_global_input(f)
    grads = spectral_gradient(f)
    entries = [np.real(np.sum(grads[i] * np.conj(grads[j]))) for i, j in packed_pairs(f.ndim)]
    return SymMat(f.ndim, np.array(entries))


# ---------------------------------------------------------------------------
# Upsampling
# ---------------------------------------------------------------------------

def _upsample_axis(values: np.ndarray, axis: int) -> np.ndarray:
    m = values.shape[axis]
    spectrum = np.fft.fft(values, axis=axis)
    shape = list(spectrum.shape)
    shape[axis] = 2 * m
    padded = np.zeros(shape, dtype=complex)
    half = m // 2

    def take(sl):
        idx = [slice(None)] * spectrum.ndim
        idx[axis] = sl
        return tuple(idx)

    padded[take(slice(0, half))] = spectrum[take(slice(0, half))]
    padded[take(slice(2 * m - half, 2 * m))] = spectrum[take(slice(m - half, m))]
    # Split the Nyquist bin evenly between ±M/2 so the result stays real.
    nyquist = spectrum[take(slice(half, half + 1))]
    padded[take(slice(half, half + 1))] = 0.5 * nyquist
    padded[take(slice(2 * m - half, 2 * m - half + 1))] = 0.5 * nyquist
    return np.fft.ifft(padded, axis=axis) * 2.0


def upsample2x(f: ScalarField) -> ScalarField:
    """Band-limited 2x upsampling by zero-padding the centred spectrum."""
    f.require_even()
    values = f.values.astype(complex)
    for axis in range(f.ndim):
        values = _upsample_axis(values, axis)
    return ScalarField(np.real(values), periodic=f.periodic)


# ---------------------------------------------------------------------------
# Gradient tensor field
# ---------------------------------------------------------------------------

BOUNDARY_MODES = {'periodic': 'wrap', 'reflect': 'reflect'}
DERIVATIVES = ('gaussian', 'spectral')


def _gaussian_gradient(values: np.ndarray, sigma: float, mode: str) -> list[np.ndarray]:
    grads = []
    for axis in range(values.ndim):
        order = [0] * values.ndim
        order[axis] = 1
        grads.append(ndimage.gaussian_filter(values, sigma, order=order, mode=mode,
                                             truncate=KERNEL_TRUNCATE))
    return grads


def _spectral_gaussian(sigma: float, shape: tuple) -> np.ndarray:
    omega = frequency_grid(shape)
    rho2 = sum(w * w for w in omega)
    return np.exp(-0.5 * sigma * sigma * rho2)


def _spectral_gradient_smoothed(values: np.ndarray, sigma: float) -> list[np.ndarray]:
    spectrum = np.fft.fftn(values) * _spectral_gaussian(sigma, values.shape)
    return [np.real(np.fft.ifftn(1j * w * spectrum)) for w in frequency_grid(values.shape)]


def _smooth(plane: np.ndarray, sigma: float, derivative: str, mode: str) -> np.ndarray:
    if sigma == 0:
        return plane
    if derivative == 'spectral':
        return np.real(np.fft.ifftn(np.fft.fftn(plane) * _spectral_gaussian(sigma, plane.shape)))
    return ndimage.gaussian_filter(plane, sigma, mode=mode, truncate=KERNEL_TRUNCATE)


def gradient_tensor(f: ScalarField, inner_scale: float = 1.0, outer_scale: float = 3.0,
                    boundary: str = 'periodic', derivative: Optional[str] = None,
                    upsample: bool = False) -> TensorField:
    """
    Structure tensor field from Gaussian-derivative gradients.

    Args:
        f: input image
        inner_scale: σ_d of the derivative filters (> 0)
        outer_scale: σ_o of the component-wise smoothing (>= 0, 0 disables it)
        boundary: 'periodic' or 'reflect' (spatial kernels only)
        derivative: 'gaussian' for sampled kernels truncated at 4σ,
            'spectral' for exact Gaussian transfer functions on the DFT grid.
            None picks 'spectral' when upsampling with periodic boundaries
            and 'gaussian' otherwise.
        upsample: compute on upsample2x(f) at doubled scales, then return the
            values at the original sample sites in original derivative units.
            With spectral derivatives this matches the plain spectral field to
            rounding for input bandlimited below π/2. Sampled kernels only
            agree to their truncation and sampling error (about 1e-3 relative).

    Returns:
        TensorField tagged 'gradient'
    """
    if not inner_scale > 0:
        raise ParameterError(f"inner scale must be positive, got {inner_scale}")
    if outer_scale < 0:
        raise ParameterError(f"outer scale must be non-negative, got {outer_scale}")
    if derivative is None:
        derivative = 'spectral' if upsample and boundary == 'periodic' else 'gaussian'
    if boundary not in BOUNDARY_MODES:
        raise ParameterError(f"boundary must be one of {sorted(BOUNDARY_MODES)}, got {boundary!r}")
    if derivative not in DERIVATIVES:
        raise ParameterError(f"derivative must be one of {list(DERIVATIVES)}, got {derivative!r}")
    if derivative == 'spectral' and boundary != 'periodic':
        raise ParameterError("spectral derivatives imply periodic boundaries")
    f.require_analysis_size()

    if upsample:
        fine = upsample2x(f)
        fine_field = gradient_tensor(fine, 2.0 * inner_scale, 2.0 * outer_scale,
                                     boundary=boundary, derivative=derivative)
        decimate = (slice(None),) + tuple(slice(None, None, 2) for _ in range(f.ndim))
        # fine-grid derivatives are half the original ones
        return TensorField(4.0 * fine_field.planes[decimate], Construction.GRADIENT)

    mode = BOUNDARY_MODES[boundary]
    if derivative == 'spectral':
        grads = _spectral_gradient_smoothed(f.values, inner_scale)
    else:
        grads = _gaussian_gradient(f.values, inner_scale, mode)

    planes = np.stack([_smooth(grads[i] * grads[j], outer_scale, derivative, mode)
                       for i, j in packed_pairs(f.ndim)])
    logger.debug(f"Gradient tensor on {f.dims}: σ_d={inner_scale}, σ_o={outer_scale}, "
                 f"{derivative} derivatives, {boundary} boundary")
    return TensorField(planes, Construction.GRADIENT)


def global_field(t: SymMat, ndim: int, tag=Construction.SPECTRAL) -> TensorField:
    """Wrap a single global tensor as a one-pixel field."""
    return TensorField(t.entries.reshape((packed_size(t.dim),) + (1,) * ndim), tag)
