"""
PGM Images

Binary P5 graymaps, 8- or 16-bit. Axis 0 of the field is rows, and 16-bit
samples are big-endian as the format requires.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from ..core.synth import ScalarField
from ..utils.errors import FormatError, ParameterError

logger = logging.getLogger(__name__)

MAGIC = b"P5"
MAX_MAXVAL = 65535
WHITESPACE = b" \t\n\r\v\f"
RANGE_SLACK = 1e-9


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Skip whitespace and '#' comments, return (token, position after it)."""
    while pos < len(data):
        ch = data[pos:pos + 1]
        if ch in WHITESPACE:
            pos += 1
        elif ch == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and data[pos:pos + 1] not in WHITESPACE and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FormatError("unexpected end of PGM header", offset=start)
    return data[start:pos], pos


def _header_int(data: bytes, pos: int, name: str) -> tuple[int, int]:
    token, end = _next_token(data, pos)
    if not token.isdigit():
        raise FormatError(f"PGM {name} is not a decimal integer: {token[:16]!r}", offset=end - len(token))
    return int(token), end


def parse_pgm(data: bytes) -> ScalarField:
    """Decode P5 bytes into a field with values in [0, 1]."""
    if data[:2] != MAGIC:
        raise FormatError(f"not a binary PGM (magic {data[:2]!r})", offset=0)
    pos = 2
    width, pos = _header_int(data, pos, 'width')
    height, pos = _header_int(data, pos, 'height')
    maxval, pos = _header_int(data, pos, 'maxval')
    if width < 1 or height < 1:
        raise FormatError(f"PGM dims must be positive, got {width}x{height}", offset=pos)
    if not 1 <= maxval <= MAX_MAXVAL:
        raise FormatError(f"PGM maxval must lie in [1, {MAX_MAXVAL}], got {maxval}", offset=pos)
    if pos >= len(data) or data[pos:pos + 1] not in WHITESPACE:
        raise FormatError("missing whitespace after PGM maxval", offset=pos)
    pos += 1

    sample_bytes = 1 if maxval < 256 else 2
    expected = width * height * sample_bytes
    payload = data[pos:pos + expected]
    if len(payload) < expected:
        raise FormatError(f"truncated PGM payload: {len(payload)} of {expected} bytes", offset=pos + len(payload))

    dtype = np.uint8 if sample_bytes == 1 else np.dtype('>u2')
    samples = np.frombuffer(payload, dtype=dtype).reshape(height, width).astype(np.float64)
    if np.any(samples > maxval):
        raise FormatError(f"PGM sample exceeds maxval {maxval}", offset=pos)
    return ScalarField(samples / maxval, periodic=False)


def read_pgm(path: Union[str, Path]) -> ScalarField:
    data = Path(path).read_bytes()
    field = parse_pgm(data)
    logger.info(f"Read PGM {path}: {field.dims[0]} rows x {field.dims[1]} columns")
    return field


def unit_range(field: ScalarField) -> ScalarField:
    """
    Map a field affinely onto [0, 1] (min to 0, max to 1).

    A constant field maps to 0. Fields already inside [0, 1] are returned
    unchanged.
    """
    lo, hi = float(np.min(field.values)), float(np.max(field.values))
    if lo >= 0.0 and hi <= 1.0:
        return field
    if hi == lo:
        return ScalarField(np.zeros(field.dims), periodic=field.periodic)
    logger.info(f"Mapping field range [{lo:.6g}, {hi:.6g}] onto [0, 1] for PGM output")
    return ScalarField((field.values - lo) / (hi - lo), periodic=field.periodic)


def encode_pgm(field: ScalarField, maxval: int = 255) -> bytes:
    """Quantize values in [0, 1] to P5 bytes; anything outside is rejected."""
    if field.ndim != 2:
        raise ParameterError(f"PGM holds 2-D images, got {field.ndim}-D")
    if not 1 <= maxval <= MAX_MAXVAL:
        raise ParameterError(f"maxval must lie in [1, {MAX_MAXVAL}], got {maxval}")
    lo, hi = float(np.min(field.values)), float(np.max(field.values))
    if lo < -RANGE_SLACK or hi > 1.0 + RANGE_SLACK:
        raise ParameterError(f"PGM values must lie in [0, 1], got [{lo:.6g}, {hi:.6g}]; see unit_range")
    height, width = field.dims
    samples = np.rint(np.clip(field.values, 0.0, 1.0) * maxval)
    dtype = np.uint8 if maxval < 256 else np.dtype('>u2')
    header = f"P5\n{width} {height}\n{maxval}\n".encode('ascii')
    return header + samples.astype(dtype).tobytes()


def write_pgm(field: ScalarField, path: Union[str, Path], maxval: int = 255) -> None:
    Path(path).write_bytes(encode_pgm(field, maxval))
    logger.info(f"Wrote PGM {path} ({field.dims}, maxval {maxval})")
