"""
Tensor Analysis

TLS orientation with certainty, rank profiles, orientation error statistics
and the indefiniteness report for GK tensor fields.
"""

import logging
from dataclasses import dataclass, asdict, field

import numpy as np

from .linalg import EigenDecomp, SymMat, eig_sym, eig_sym_batch
from .tensor import TensorField
from .tessellation import canonical, canonical_batch
from ..utils.errors import ParameterError

logger = logging.getLogger(__name__)

DEFAULT_RANK_TOL = 1e-3
HISTOGRAM_BINS = 20


@dataclass
class OrientationEstimate:
    """Dominant orientation of one tensor."""
    direction: np.ndarray
    lambda1: float
    lambda2: float
    certainty: float
    tls_error: float
    eigen: EigenDecomp = field(repr=False)

    @property
    def angle_deg(self) -> float:
        """Angle of a 2-D direction, in degrees within [0, 180)."""
        return float(np.degrees(np.arctan2(self.direction[1], self.direction[0])) % 180.0)

    def to_dict(self) -> dict:
        return {
            'direction': [float(x) for x in self.direction],
            'lambda1': self.lambda1,
            'lambda2': self.lambda2,
            'certainty': self.certainty,
            'tls_error': self.tls_error,
        }


def _certainty(l1, l2):
    denom = l1 + l2
    with np.errstate(invalid='ignore', divide='ignore'):
        c = np.where(denom > 0, (l1 - l2) / np.where(denom > 0, denom, 1.0), 0.0)
    return np.clip(c, 0.0, 1.0)


def orientation(t: SymMat) -> OrientationEstimate:
    """
    TLS orientation: the eigenvector of the largest eigenvalue.

    certainty = (λ1-λ2)/(λ1+λ2) when λ1+λ2 > 0, else 0; tls_error = trace - λ1.
    A zero tensor yields certainty 0 with an arbitrary canonical direction.
    """
    if t.dim < 2:
        raise ParameterError("orientation needs N >= 2")
    eigen = eig_sym(t)
    w = eigen.eigenvalues
    l1, l2 = float(w[0]), float(w[1])
    return OrientationEstimate(
        direction=canonical(eigen.eigenvectors[:, 0]),
        lambda1=l1,
        lambda2=l2,
        certainty=float(_certainty(l1, l2)),
        tls_error=t.trace() - l1,
        eigen=eigen,
    )


@dataclass
class OrientationField:
    """Per-pixel TLS orientation over a tensor field's grid."""
    directions: np.ndarray   # (*grid, N)
    eigenvalues: np.ndarray  # (*grid, N), descending
    certainty: np.ndarray    # (*grid)

    @property
    def tls_error(self) -> np.ndarray:
        return self.eigenvalues.sum(axis=-1) - self.eigenvalues[..., 0]


def orientation_field(tf: TensorField) -> OrientationField:
    """Batched orientation for every pixel of a tensor field."""
    w, v = eig_sym_batch(tf.dense())
    directions = canonical_batch(v[..., :, 0])
    return OrientationField(directions=directions, eigenvalues=w, certainty=_certainty(w[..., 0], w[..., 1]))


def angle_field(of: OrientationField) -> np.ndarray:
    """2-D orientation angles in radians within [0, π)."""
    if of.directions.shape[-1] != 2:
        raise ParameterError("angle fields are defined for 2-D orientations only")
    return np.mod(np.arctan2(of.directions[..., 1], of.directions[..., 0]), np.pi)


def angular_error_deg(estimated: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Orientation error in degrees, ignoring sign: arccos |u·v| for unit vectors."""
    estimated = np.asarray(estimated, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    truth = truth / np.linalg.norm(truth, axis=-1, keepdims=True)
    dot = np.abs(np.sum(estimated * truth, axis=-1))
    return np.degrees(np.arccos(np.clip(dot, 0.0, 1.0)))


@dataclass
class OrientationErrorStats:
    """Error of an estimated orientation field against a known truth."""
    count: int
    mean_deg: float
    rms_deg: float
    max_deg: float
    mean_certainty: float

    def to_dict(self) -> dict:
        return asdict(self)


def orientation_error_stats(of: OrientationField, truth, margin: int = 0) -> OrientationErrorStats:
    """Error statistics over the interior, `margin` samples in from every edge."""
    if margin < 0:
        raise ParameterError(f"margin must be non-negative, got {margin}")
    grid = of.certainty.shape
    if any(2 * margin >= m for m in grid):
        raise ParameterError(f"margin {margin} leaves no interior in grid {grid}")
    interior = tuple(slice(margin, m - margin) for m in grid)
    errors = angular_error_deg(of.directions[interior], truth)
    return OrientationErrorStats(
        count=int(errors.size),
        mean_deg=float(np.mean(errors)),
        rms_deg=float(np.sqrt(np.mean(errors ** 2))),
        max_deg=float(np.max(errors)),
        mean_certainty=float(np.mean(of.certainty[interior])),
    )


@dataclass
class OrientationDelta:
    """Axial angle between two orientation fields on the same grid."""
    count: int
    mean_deg: float
    median_deg: float
    max_deg: float

    def to_dict(self) -> dict:
        return asdict(self)


def orientation_delta_stats(a: OrientationField, b: OrientationField) -> OrientationDelta:
    if a.directions.shape != b.directions.shape:
        raise ParameterError(f"orientation fields differ in shape: {a.directions.shape} vs {b.directions.shape}")
    delta = angular_error_deg(a.directions, b.directions)
    return OrientationDelta(
        count=int(delta.size),
        mean_deg=float(np.mean(delta)),
        median_deg=float(np.median(delta)),
        max_deg=float(np.max(delta)),
    )


@dataclass
class RankProfile:
    """How many eigenvalues are close to zero relative to λ1."""
    near_zero_count: int
    eigenvalues: np.ndarray
    threshold: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            'near_zero_count': self.near_zero_count,
            'eigenvalues': [float(x) for x in self.eigenvalues],
            'threshold': self.threshold,
            'degenerate': self.degenerate,
        }


def rank_profile(t: SymMat, rel_tol: float = DEFAULT_RANK_TOL) -> RankProfile:
    """
    Count eigenvalues with λ_i < rel_tol·λ1.

    k = N-1 means a linearly symmetric neighbourhood and k = 0 an isotropic
    one. A tensor without a positive leading eigenvalue is reported
    degenerate with k = N.
    """
    if not 0.0 < rel_tol < 1.0:
        raise ParameterError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    w = eig_sym(t).eigenvalues
    if w[0] <= 0:
        return RankProfile(near_zero_count=t.dim, eigenvalues=w, threshold=0.0, degenerate=True)
    threshold = rel_tol * float(w[0])
    return RankProfile(near_zero_count=int(np.sum(w < threshold)), eigenvalues=w, threshold=threshold)


@dataclass
class IndefinitenessReport:
    """How often and how strongly a tensor field leaves the PSD cone."""
    pixels: int
    negative_pixels: int
    fraction_negative: float
    min_eigenvalue: float
    worst_ratio: float
    histogram: list = field(default_factory=list)
    bin_edges: list = field(default_factory=list)

    def to_rows(self) -> list[dict]:
        """Summary fields followed by one row per histogram bin."""
        rows = [
            {'metric': 'pixels', 'value': self.pixels},
            {'metric': 'negative_pixels', 'value': self.negative_pixels},
            {'metric': 'fraction_negative', 'value': self.fraction_negative},
            {'metric': 'min_eigenvalue', 'value': self.min_eigenvalue},
            {'metric': 'worst_ratio', 'value': self.worst_ratio},
        ]
        for count, lo, hi in zip(self.histogram, self.bin_edges[:-1], self.bin_edges[1:]):
            rows.append({'metric': f"ratio[{lo:.2f},{hi:.2f})", 'value': count})
        return rows


def indefiniteness_report(tf: TensorField, tol: float = 1e-10,
                          bins: int = HISTOGRAM_BINS) -> IndefinitenessReport:
    """
    Fraction of pixels whose smallest eigenvalue is below -tol·|trace|, plus
    a histogram of λ_min/|trace| on [-1, 1] (ratio 0 where the trace is 0).
    """
    if tol < 0:
        raise ParameterError(f"tol must be non-negative, got {tol}")
    if bins < 1:
        raise ParameterError(f"bins must be positive, got {bins}")
    min_eig = tf.min_eigenvalues()
    scale = np.abs(tf.trace())
    negative = min_eig < -tol * scale
    with np.errstate(invalid='ignore', divide='ignore'):
        ratio = np.where(scale > 0, min_eig / np.where(scale > 0, scale, 1.0), 0.0)
    ratio = np.clip(ratio, -1.0, 1.0)
    counts, edges = np.histogram(ratio, bins=bins, range=(-1.0, 1.0))
    report = IndefinitenessReport(
        pixels=int(min_eig.size),
        negative_pixels=int(np.sum(negative)),
        fraction_negative=float(np.mean(negative)),
        min_eigenvalue=float(np.min(min_eig)),
        worst_ratio=float(np.min(ratio)),
        histogram=[int(c) for c in counts],
        bin_edges=[float(e) for e in edges],
    )
    logger.info(f"Indefiniteness: {report.negative_pixels}/{report.pixels} pixels negative, "
                f"min eigenvalue {report.min_eigenvalue:.6g}")
    return report
