"""
Multi-channel float grids and the KGTEN tensor file format

Coordinates: x is the column, y is the row, origin at the top-left pixel
center, +x right, +y down. Storage is channel-major, then row, then column.
"""
import logging
import math
import re
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from grids.errors import (
    GridIndexError,
    GridValidationError,
    TensorFormatError,
    TensorTruncationError,
)
from grids.files import PathLike, atomic_write_bytes, read_bytes

log = logging.getLogger(__name__)

KGTEN_MAGIC = b"KGTEN\n"
KGTEN_DTYPE = np.dtype("<f4")
_HEADER_RE = re.compile(rb"^dtype=f32 order=chw c=(\d+) h=(\d+) w=(\d+)$")


@dataclass(frozen=True)
class GridShape:
    height: int
    width: int

    def __post_init__(self):
        for name in ("height", "width"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise GridValidationError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise GridValidationError(f"{name} must be >= 1, got {value}")
        object.__setattr__(self, "height", int(self.height))
        object.__setattr__(self, "width", int(self.width))

    @property
    def size(self) -> int:
        return self.height * self.width

    def as_tuple(self) -> Tuple[int, int]:
        return (self.height, self.width)


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GridValidationError(f"non-finite point ({self.x}, {self.y})")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))

    def distance_to(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def offset(self, dx: float, dy: float) -> "Point2":
        return Point2(self.x + dx, self.y + dy)

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)


class ChannelGrid:
    """Immutable C×H×W float32 grid"""

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float32, order="C", copy=True)
        if arr.ndim == 2:
            arr = arr[None, :, :]
        if arr.ndim != 3:
            raise GridValidationError(f"expected a C×H×W array, got {arr.ndim} dims")
        c, h, w = arr.shape
        if c < 1 or h < 1 or w < 1:
            raise GridValidationError(f"empty grid dimensions {arr.shape}")
        if not np.isfinite(arr).all():
            raise GridValidationError("grid contains non-finite values")
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def zeros(cls, channels: int, shape: GridShape) -> "ChannelGrid":
        return cls(np.zeros((channels, shape.height, shape.width), dtype=np.float32))

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def channels(self) -> int:
        return self._data.shape[0]

    @property
    def height(self) -> int:
        return self._data.shape[1]

    @property
    def width(self) -> int:
        return self._data.shape[2]

    @property
    def shape(self) -> GridShape:
        return GridShape(self.height, self.width)

    def channel(self, index: int) -> np.ndarray:
        if not 0 <= index < self.channels:
            raise GridIndexError(f"channel {index} out of range [0, {self.channels})")
        return self._data[index]

    def to_bytes(self) -> bytes:
        header = (
            f"dtype=f32 order=chw c={self.channels} h={self.height} w={self.width}\n"
        ).encode("ascii")
        return KGTEN_MAGIC + header + self._data.astype(KGTEN_DTYPE, copy=False).tobytes(order="C")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ChannelGrid):
            return NotImplemented
        return self._data.shape == other._data.shape and self._data.tobytes() == other._data.tobytes()

    def __hash__(self) -> int:
        return hash((self._data.shape, self._data.tobytes()))

    def __repr__(self) -> str:
        return f"ChannelGrid(c={self.channels}, h={self.height}, w={self.width})"


def parse_tensor(payload: bytes, source: Optional[str] = None) -> ChannelGrid:
    """Decode KGTEN bytes"""
    where = f"{source}: " if source else ""

    if not payload.startswith(KGTEN_MAGIC):
        raise TensorFormatError(f"{where}bad magic, expected KGTEN")

    header_end = payload.find(b"\n", len(KGTEN_MAGIC))
    if header_end < 0:
        raise TensorFormatError(f"{where}unterminated header line")

    match = _HEADER_RE.match(payload[len(KGTEN_MAGIC):header_end])
    if match is None:
        raise TensorFormatError(f"{where}malformed header")

    c, h, w = (int(v) for v in match.groups())
    if c < 1 or h < 1 or w < 1:
        raise TensorFormatError(f"{where}header declares empty dimensions c={c} h={h} w={w}")

    body = payload[header_end + 1:]
    expected = c * h * w * KGTEN_DTYPE.itemsize
    if len(body) < expected:
        raise TensorTruncationError(
            f"{where}payload has {len(body)} bytes, header declares {expected}"
        )
    if len(body) > expected:
        raise TensorFormatError(f"{where}{len(body) - expected} trailing bytes after payload")

    data = np.frombuffer(body, dtype=KGTEN_DTYPE).reshape(c, h, w)
    return ChannelGrid(data)


def read_tensor(path: PathLike) -> ChannelGrid:
    grid = parse_tensor(read_bytes(path), source=str(path))
    log.debug(f"read {grid!r} from {path}")
    return grid


def write_tensor(grid: ChannelGrid, path: PathLike) -> None:
    atomic_write_bytes(path, grid.to_bytes())
    log.debug(f"wrote {grid!r} to {path}")
