"""
Symmetric Matrix Core

Packed symmetric storage, outer products, a cyclic Jacobi eigensolver that
works on whole stacks of matrices at once, and a characteristic-polynomial
oracle used to cross-check it.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..utils.errors import ConvergenceError, ParameterError

logger = logging.getLogger(__name__)

MAX_SWEEPS = 100
OFF_DIAGONAL_TOL = 1e-14
SIGN_TOL = 1e-12


@lru_cache(maxsize=16)
def packed_pairs(dim: int) -> tuple:
    """(i, j) index pairs of the row-major upper triangle."""
    return tuple((i, j) for i in range(dim) for j in range(i, dim))


def packed_size(dim: int) -> int:
    return dim * (dim + 1) // 2


def dim_from_packed(size: int) -> int:
    """Inverse of packed_size; raises if size is not triangular."""
    dim = int((math.isqrt(8 * size + 1) - 1) // 2)
    if dim < 1 or packed_size(dim) != size:
        raise ParameterError(f"{size} is not a packed symmetric size")
    return dim


def packed_to_dense(planes: np.ndarray) -> np.ndarray:
    """Packed planes (P, *grid) to dense matrices (*grid, N, N)."""
    planes = np.asarray(planes, dtype=np.float64)
    dim = dim_from_packed(planes.shape[0])
    dense = np.empty(planes.shape[1:] + (dim, dim), dtype=np.float64)
    for p, (i, j) in enumerate(packed_pairs(dim)):
        dense[..., i, j] = planes[p]
        dense[..., j, i] = planes[p]
    return dense


def dense_to_packed(dense: np.ndarray) -> np.ndarray:
    """Dense matrices (*grid, N, N) to packed planes (P, *grid), upper triangle."""
    dense = np.asarray(dense, dtype=np.float64)
    dim = dense.shape[-1]
    return np.stack([dense[..., i, j] for i, j in packed_pairs(dim)])


@dataclass(frozen=True)
class SymMat:
    """Symmetric N x N matrix stored as its packed upper triangle."""
    dim: int
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.float64, copy=True).reshape(-1)
        if self.dim < 1:
            raise ParameterError(f"dimension must be positive, got {self.dim}")
        if entries.size != packed_size(self.dim):
            raise ParameterError(
                f"expected {packed_size(self.dim)} packed entries for N={self.dim}, got {entries.size}")
        if not np.all(np.isfinite(entries)):
            raise ParameterError("SymMat entries must be finite")
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)

    @classmethod
    def from_dense(cls, m) -> 'SymMat':
        m = np.asarray(m, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ParameterError(f"expected a square matrix, got shape {m.shape}")
        # Average with the transpose so slightly asymmetric input is accepted.
        sym = 0.5 * (m + m.T)
        return cls(m.shape[0], dense_to_packed(sym))

    def to_dense(self) -> np.ndarray:
        return packed_to_dense(self.entries)

    def __getitem__(self, ij) -> float:
        i, j = ij
        if i > j:
            i, j = j, i
        return float(self.entries[packed_pairs(self.dim).index((i, j))])

    def trace(self) -> float:
        return float(np.trace(self.to_dense()))

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.to_dense()))

    def scaled(self, c: float) -> 'SymMat':
        return SymMat(self.dim, self.entries * c)

    def __add__(self, other: 'SymMat') -> 'SymMat':
        if other.dim != self.dim:
            raise ParameterError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return SymMat(self.dim, self.entries + other.entries)


@dataclass(frozen=True)
class EigenDecomp:
    """Eigenvalues sorted descending, eigenvectors as matching columns."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def identity(dim: int) -> SymMat:
    return SymMat.from_dense(np.eye(dim))


def outer(v) -> SymMat:
    """v vᵀ as a SymMat."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    return SymMat.from_dense(np.outer(v, v))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """One Jacobi rotation annihilating a[..., p, q] for every matrix in the stack."""
    app = a[..., p, p].copy()
    aqq = a[..., q, q].copy()
    apq = a[..., p, q].copy()

    active = apq != 0.0
    safe_apq = np.where(active, apq, 1.0)
    theta = (aqq - app) / (2.0 * safe_apq)
    t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
    t = np.where(active, t, 0.0)
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c

    cc = c[..., None]
    ss = s[..., None]

    col_p = a[..., :, p].copy()
    col_q = a[..., :, q].copy()
    a[..., :, p] = cc * col_p - ss * col_q
    a[..., :, q] = ss * col_p + cc * col_q

    row_p = a[..., p, :].copy()
    row_q = a[..., q, :].copy()
    a[..., p, :] = cc * row_p - ss * row_q
    a[..., q, :] = ss * row_p + cc * row_q

    a[..., p, p] = app - t * apq
    a[..., q, q] = aqq + t * apq
    a[..., p, q] = 0.0
    a[..., q, p] = 0.0

    vec_p = v[..., :, p].copy()
    vec_q = v[..., :, q].copy()
    v[..., :, p] = cc * vec_p - ss * vec_q
    v[..., :, q] = ss * vec_p + cc * vec_q


def _off_norm(a: np.ndarray) -> np.ndarray:
    off = a * (1.0 - np.eye(a.shape[-1]))
    return np.sqrt(np.sum(off * off, axis=(-2, -1)))


def eig_sym_batch(dense: np.ndarray, max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """
    Cyclic Jacobi eigendecomposition of a stack of symmetric matrices.

    Args:
        dense: array of shape (..., N, N)
        max_sweeps: sweep cap before giving up

    Returns:
        (eigenvalues (..., N) sorted descending, eigenvectors (..., N, N) as columns)

    Raises:
        ConvergenceError: if any matrix is not diagonal after max_sweeps sweeps.
    """
    a = np.array(dense, dtype=np.float64, copy=True)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ParameterError(f"expected (..., N, N), got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParameterError("matrix entries must be finite")

    n = a.shape[-1]
    v = np.broadcast_to(np.eye(n), a.shape).copy()
    threshold = OFF_DIAGONAL_TOL * np.linalg.norm(a, axis=(-2, -1))

    sweeps = 0
    if n == 2:
        # A single rotation diagonalizes a 2x2 matrix exactly.
        _rotate(a, v, 0, 1)
        sweeps = 1
    else:
        while True:
            off = _off_norm(a)
            if np.all(off <= threshold):
                break
            if sweeps >= max_sweeps:
                worst = float(np.max(off - threshold))
                raise ConvergenceError(
                    f"Jacobi did not converge after {max_sweeps} sweeps (excess off-diagonal norm {worst:.3e})")
            for p in range(n - 1):
                for q in range(p + 1, n):
                    _rotate(a, v, p, q)
            sweeps += 1
    logger.debug(f"Jacobi converged in {sweeps} sweeps for {a[..., 0, 0].size} matrices of size {n}")

    w = np.diagonal(a, axis1=-2, axis2=-1).copy()
    order = np.argsort(-w, axis=-1, kind='stable')
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)

    # Sign convention: the first clearly nonzero component of each eigenvector is positive.
    significant = np.abs(v) > SIGN_TOL
    first = np.argmax(significant, axis=-2)
    lead = np.take_along_axis(v, first[..., None, :], axis=-2)[..., 0, :]
    sign = np.where(lead < 0.0, -1.0, 1.0)
    v = v * sign[..., None, :]
    return w, v


def eig_sym(m: SymMat) -> EigenDecomp:
    """Eigendecomposition of one SymMat."""
    w, v = eig_sym_batch(m.to_dense())
    return EigenDecomp(eigenvalues=w, eigenvectors=v)


def is_psd(m: SymMat, tol: float = 0.0) -> bool:
    """True iff the smallest eigenvalue is at least -tol."""
    if tol < 0:
        raise ParameterError(f"tol must be non-negative, got {tol}")
    return bool(eig_sym(m).eigenvalues[-1] >= -tol)


# ---------------------------------------------------------------------------
# Characteristic-polynomial oracle
# ---------------------------------------------------------------------------

def _char_poly(m: np.ndarray):
    """det(λI - m) by explicit cofactor expansion, for N = 2 or 3."""
    if m.shape == (2, 2):
        def p(lam):
            return (lam - m[0, 0]) * (lam - m[1, 1]) - m[0, 1] * m[1, 0]
        return p

    def p(lam):
        a = lam - m[0, 0]
        e = lam - m[1, 1]
        i = lam - m[2, 2]
        b, c = -m[0, 1], -m[0, 2]
        d, f = -m[1, 0], -m[1, 2]
        g, h = -m[2, 0], -m[2, 1]
        return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    return p


def _bisect(p, lo: float, hi: float, iterations: int = 200) -> float:
    flo, fhi = p(lo), p(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        # Touching root at a critical point.
        return lo if abs(flo) < abs(fhi) else hi
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = p(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def char_poly_eigenvalues(m: SymMat) -> np.ndarray:
    """
    Eigenvalues of a 2x2 or 3x3 SymMat by bisection on det(λI - m).

    Independent of the Jacobi solver: roots are bracketed between the
    Gershgorin bound and the critical points of the polynomial.
    """
    if m.dim not in (2, 3):
        raise ParameterError(f"oracle supports N = 2 or 3, got {m.dim}")
    a = m.to_dense()
    bound = float(np.max(np.sum(np.abs(a), axis=1)))
    if bound == 0.0:
        return np.zeros(m.dim)
    p = _char_poly(a)

    tr = float(np.trace(a))
    if m.dim == 2:
        critical = [0.5 * tr]
    else:
        minors = (a[0, 0] * a[1, 1] - a[0, 1] ** 2
                  + a[0, 0] * a[2, 2] - a[0, 2] ** 2
                  + a[1, 1] * a[2, 2] - a[1, 2] ** 2)
        # p'(λ) = 3λ² - 2·tr·λ + minors
        disc = max(4.0 * tr * tr - 12.0 * minors, 0.0)
        root = math.sqrt(disc)
        critical = [(2.0 * tr - root) / 6.0, (2.0 * tr + root) / 6.0]

    breaks = [-bound] + [min(max(c, -bound), bound) for c in critical] + [bound]
    roots = [_bisect(p, lo, hi) for lo, hi in zip(breaks[:-1], breaks[1:])]
    return np.array(sorted(roots, reverse=True))
