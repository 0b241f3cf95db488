"""
Direction Sets

Tune-in directions n_k tessellating half of the frequency space: the
icosahedral six-direction set for 3-D and evenly spaced half circles for 2-D.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from ..utils.errors import ParameterError
from ..utils.tables import write_csv

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-12
ANGLE_TOL = 1e-9


@dataclass(frozen=True)
class DirectionSet:
    """K unit directions of dimension N with labels."""
    dim: int
    directions: np.ndarray
    labels: tuple = field(default=())
    name: str = 'custom'

    def __post_init__(self):
        dirs = np.array(self.directions, dtype=np.float64, copy=True)
        if dirs.ndim != 2 or dirs.shape[1] != self.dim:
            raise ParameterError(f"directions must have shape (K, {self.dim}), got {dirs.shape}")
        dirs.setflags(write=False)
        object.__setattr__(self, 'directions', dirs)
        labels = tuple(self.labels) or tuple(f"n{k + 1}" for k in range(dirs.shape[0]))
        if len(labels) != dirs.shape[0]:
            raise ParameterError(f"{len(labels)} labels for {dirs.shape[0]} directions")
        object.__setattr__(self, 'labels', labels)

    def __len__(self) -> int:
        return self.directions.shape[0]

    def frame_operator(self) -> np.ndarray:
        """Σ_k n_k n_kᵀ as a dense matrix."""
        return self.directions.T @ self.directions

    def to_rows(self) -> list[dict]:
        rows = []
        for label, n in zip(self.labels, self.directions):
            row = {'label': label}
            row.update({f"n{i + 1}": float(x) for i, x in enumerate(n)})
            rows.append(row)
        return rows


def canonical(v) -> np.ndarray:
    """Flip v so that its last nonzero coordinate is positive."""
    v = np.asarray(v, dtype=np.float64)
    nonzero = np.flatnonzero(np.abs(v) > 0.0)
    if nonzero.size and v[nonzero[-1]] < 0:
        return -v
    return v


def canonical_batch(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Half-space convention applied along the last axis of a stack of vectors."""
    significant = np.abs(v) > tol
    n = v.shape[-1]
    # Index of the last significant coordinate; falls back to 0 for null vectors.
    last = n - 1 - np.argmax(significant[..., ::-1], axis=-1)
    lead = np.take_along_axis(v, last[..., None], axis=-1)
    return np.where(lead < 0.0, -v, v)


def icosa_constants() -> tuple[float, float]:
    """a = 2/√(10+2√5), b = (1+√5)/√(10+2√5), at full precision."""
    root5 = math.sqrt(5.0)
    denom = math.sqrt(10.0 + 2.0 * root5)
    return 2.0 / denom, (1.0 + root5) / denom


def icosa6() -> DirectionSet:
    """Six icosahedral directions covering half of 3-D frequency space."""
    a, b = icosa_constants()
    dirs = [
        (a, 0.0, b),
        (-a, 0.0, b),
        (b, a, 0.0),
        (-b, a, 0.0),
        (0.0, b, a),
        (0.0, -b, a),
    ]
    return DirectionSet(dim=3, directions=np.array(dirs), name='icosa6')


def half_circle(k: int) -> DirectionSet:
    """K 2-D directions at angles kπ/K, k = 0..K-1."""
    if k < 2:
        raise ParameterError(f"half_circle needs K >= 2, got {k}")
    angles = np.pi * np.arange(k) / k
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    # cos(π/2) is not exactly zero in floating point
    dirs[np.abs(dirs) < 1e-15] = 0.0
    labels = tuple(f"theta{math.degrees(t):.1f}" for t in angles)
    return DirectionSet(dim=2, directions=dirs, labels=labels, name=f"half_circle:{k}")


def direction_set_from_name(name: str) -> DirectionSet:
    """Parse 'icosa6' or 'half_circle:K'."""
    name = name.strip()
    if name == 'icosa6':
        return icosa6()
    if name.startswith('half_circle:'):
        try:
            k = int(name.split(':', 1)[1])
        except ValueError:
            raise ParameterError(f"bad direction set '{name}'")
        return half_circle(k)
    raise ParameterError(f"unknown direction set '{name}' (expected icosa6 or half_circle:K)")


def _angle_between(u: np.ndarray, v: np.ndarray) -> float:
    # chord-based form stays accurate for nearly equal vectors
    return 2.0 * math.asin(min(1.0, float(np.linalg.norm(u - v)) / 2.0))


def validate(d: DirectionSet) -> list[str]:
    """Invariant violations of a DirectionSet; empty when it is valid."""
    violations = []
    if len(d) < 1:
        violations.append("direction set is empty")
        return violations

    for label, n in zip(d.labels, d.directions):
        norm = float(np.linalg.norm(n))
        if abs(norm - 1.0) > UNIT_TOL:
            violations.append(f"{label}: norm {norm!r} is not 1")

    units = [n / np.linalg.norm(n) if np.linalg.norm(n) > 0 else n for n in d.directions]
    for i in range(len(d)):
        for j in range(i + 1, len(d)):
            if _angle_between(units[i], units[j]) < ANGLE_TOL:
                violations.append(f"{d.labels[i]} and {d.labels[j]}: duplicate directions")
            elif _angle_between(units[i], -units[j]) < ANGLE_TOL:
                violations.append(f"{d.labels[i]} and {d.labels[j]}: antipodal directions")
    return violations


def write_directions_csv(d: DirectionSet, path: Union[str, Path]) -> None:
    """One row per direction, label first."""
    rows = d.to_rows()
    write_csv(rows, path)
    logger.info(f"Wrote {len(rows)} directions to {path}")
