"""
STF1 Raster Format

Little-endian container for scalar fields, response stacks and tensor
fields. All math runs in float64; values are truncated to float32 only here.

Layout:
    b"STF1"           magic
    u16 version       1
    u8  dtype         1 = float32
    u8  ndim
    u32 planes
    u32 x ndim        sizes, axis 0 first
    u16 tag length
    tag               UTF-8
    payload           planes x prod(sizes) float32, plane-major, C order within a plane
"""

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from ..core.filterbank import ResponseField, ResponseMode
from ..core.linalg import dim_from_packed
from ..core.synth import ScalarField
from ..core.tensor import Construction, TensorField
from ..utils.errors import FormatError, ParameterError

logger = logging.getLogger(__name__)

MAGIC = b"STF1"
VERSION = 1
DTYPE_F32 = 1
MAX_PAYLOAD_BYTES = 1 << 34

_FIXED = struct.Struct('<4sHBBI')
_TAG_LEN = struct.Struct('<H')

SCALAR_TAG = 'scalar'
ORIENTATION_TAG = 'orientation'
RESPONSES_PREFIX = 'responses:'
MIN_EIG_PREFIX = 'min-eig:'


@dataclass(frozen=True)
class RasterHeader:
    dims: tuple
    planes: int
    tag: str
    version: int = VERSION
    dtype: int = DTYPE_F32

    @property
    def payload_bytes(self) -> int:
        return int(np.prod(self.dims, dtype=object)) * self.planes * 4

    def pack(self) -> bytes:
        tag = self.tag.encode('utf-8')
        return (_FIXED.pack(MAGIC, self.version, self.dtype, len(self.dims), self.planes)
                + struct.pack(f'<{len(self.dims)}I', *self.dims)
                + _TAG_LEN.pack(len(tag)) + tag)


@dataclass(frozen=True)
class RawRaster:
    """A decoded raster: header plus float64 planes of shape (planes, *dims)."""
    header: RasterHeader
    data: np.ndarray

    @property
    def tag(self) -> str:
        return self.header.tag

    def as_scalar_field(self) -> ScalarField:
        if self.header.planes != 1:
            raise FormatError(f"expected a single-plane raster, got {self.header.planes} planes (tag {self.tag!r})")
        return ScalarField(self.data[0])

    def as_tensor_field(self) -> TensorField:
        try:
            construction = Construction(self.tag)
            dim_from_packed(self.header.planes)
        except (ValueError, ParameterError):
            raise FormatError(f"raster tagged {self.tag!r} with {self.header.planes} planes is not a tensor field")
        return TensorField(self.data, construction)

    def as_responses(self, labels=None) -> list[ResponseField]:
        if not self.tag.startswith(RESPONSES_PREFIX):
            raise FormatError(f"raster tagged {self.tag!r} does not hold filter responses")
        try:
            mode = ResponseMode(self.tag[len(RESPONSES_PREFIX):])
        except ValueError:
            raise FormatError(f"unknown response mode in tag {self.tag!r}")
        labels = labels or [f"n{k + 1}" for k in range(self.header.planes)]
        return [ResponseField(plane, label=label, mode=mode) for plane, label in zip(self.data, labels)]


def parse_raw(data: bytes) -> RawRaster:
    """Decode STF1 bytes; every malformed input raises FormatError."""
    if len(data) < _FIXED.size:
        raise FormatError(f"raster header needs {_FIXED.size} bytes, got {len(data)}", offset=len(data))
    magic, version, dtype, ndim, planes = _FIXED.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad raster magic {magic!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported raster version {version}", offset=4)
    if dtype != DTYPE_F32:
        raise FormatError(f"unsupported raster dtype code {dtype}", offset=6)
    if ndim < 1:
        raise FormatError("raster needs at least one axis", offset=7)
    if planes < 1:
        raise FormatError("raster needs at least one plane", offset=8)

    pos = _FIXED.size
    sizes_end = pos + 4 * ndim
    if len(data) < sizes_end + _TAG_LEN.size:
        raise FormatError("truncated raster sizes", offset=len(data))
    dims = struct.unpack_from(f'<{ndim}I', data, pos)
    if min(dims) < 1:
        raise FormatError(f"raster sizes must be positive, got {dims}", offset=pos)
    pos = sizes_end
    (tag_len,) = _TAG_LEN.unpack_from(data, pos)
    pos += _TAG_LEN.size
    if len(data) < pos + tag_len:
        raise FormatError("truncated raster tag", offset=len(data))
    try:
        tag = data[pos:pos + tag_len].decode('utf-8')
    except UnicodeDecodeError as e:
        raise FormatError(f"raster tag is not UTF-8: {e.reason}", offset=pos + e.start)
    pos += tag_len

    header = RasterHeader(dims=tuple(dims), planes=planes, tag=tag, version=version, dtype=dtype)
    expected = header.payload_bytes
    if expected > MAX_PAYLOAD_BYTES:
        raise FormatError(f"raster payload of {expected} bytes exceeds the {MAX_PAYLOAD_BYTES}-byte limit", offset=8)
    actual = len(data) - pos
    if actual != expected:
        raise FormatError(f"raster payload is {actual} bytes, header implies {expected}", offset=pos)

    values = np.frombuffer(data, dtype='<f4', offset=pos).reshape((planes,) + header.dims)
    return RawRaster(header=header, data=values.astype(np.float64))


def read_raw(path: Union[str, Path]) -> RawRaster:
    raster = parse_raw(Path(path).read_bytes())
    logger.info(f"Read raster {path}: tag {raster.tag!r}, {raster.header.planes} planes over {raster.header.dims}")
    return raster


def encode_raw(planes: np.ndarray, tag: str) -> bytes:
    planes = np.asarray(planes, dtype=np.float64)
    if planes.ndim < 2:
        raise ParameterError(f"raster planes need shape (planes, *dims), got {planes.shape}")
    header = RasterHeader(dims=tuple(int(m) for m in planes.shape[1:]), planes=int(planes.shape[0]), tag=tag)
    if header.payload_bytes > MAX_PAYLOAD_BYTES:
        raise ParameterError(f"raster of {header.payload_bytes} bytes exceeds the size limit")
    return header.pack() + np.ascontiguousarray(planes, dtype='<f4').tobytes()


def _planes_and_tag(obj) -> tuple[np.ndarray, str]:
    if isinstance(obj, TensorField):
        return obj.planes, obj.tag.value
    if isinstance(obj, ScalarField):
        return obj.values[None, ...], SCALAR_TAG
    if isinstance(obj, (list, tuple)) and obj and all(isinstance(r, ResponseField) for r in obj):
        return np.stack([r.values for r in obj]), RESPONSES_PREFIX + obj[0].mode.value
    raise ParameterError(f"cannot serialize {type(obj).__name__} as a raster")


def write_raw(obj, path: Union[str, Path], tag: str = None) -> None:
    """
    Serialize a ScalarField, TensorField or list of ResponseField.

    A bare ndarray of shape (planes, *dims) is accepted when `tag` is given.
    """
    if isinstance(obj, np.ndarray):
        if tag is None:
            raise ParameterError("a tag is required to write bare planes")
        planes = obj
    else:
        planes, default_tag = _planes_and_tag(obj)
        tag = tag or default_tag
    Path(path).write_bytes(encode_raw(planes, tag))
    logger.info(f"Wrote raster {path}: tag {tag!r}, {planes.shape[0]} planes over {planes.shape[1:]}")
