"""Orientation rendering as binary P6 colour images."""

import logging
from pathlib import Path
from typing import Union

import numpy as np
from matplotlib.colors import hsv_to_rgb

from ..utils.errors import ParameterError

logger = logging.getLogger(__name__)


def orientation_rgb(angles, certainty) -> np.ndarray:
    """
    Colour-code orientations: hue = 2·angle (so θ and θ+π coincide),
    saturation 1, value = certainty clipped to [0, 1].

    Returns uint8 RGB of shape (rows, cols, 3).
    """
    angles = np.asarray(angles, dtype=np.float64)
    certainty = np.asarray(certainty, dtype=np.float64)
    if angles.ndim != 2 or certainty.shape != angles.shape:
        raise ParameterError(f"expected matching 2-D angle and certainty fields, got {angles.shape} and {certainty.shape}")
    hue = np.mod(angles / np.pi, 1.0)
    hsv = np.stack([hue, np.ones_like(hue), np.clip(certainty, 0.0, 1.0)], axis=-1)
    return np.rint(hsv_to_rgb(hsv) * 255.0).astype(np.uint8)


def encode_ppm(rgb: np.ndarray) -> bytes:
    rows, cols = rgb.shape[:2]
    return f"P6\n{cols} {rows}\n255\n".encode('ascii') + np.ascontiguousarray(rgb, dtype=np.uint8).tobytes()


def write_orientation_ppm(angles, certainty, path: Union[str, Path]) -> None:
    rgb = orientation_rgb(angles, certainty)
    Path(path).write_bytes(encode_ppm(rgb))
    logger.info(f"Wrote orientation image {path} ({rgb.shape[0]}x{rgb.shape[1]})")
