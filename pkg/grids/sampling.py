"""
Bilinear kernel: sampling (gather) and splatting (scatter, the adjoint)
"""
import math
from typing import Tuple

import numpy as np

from grids.errors import GridIndexError, GridValidationError
from grids.tensor import ChannelGrid, GridShape, Point2


def _clamped_corners(x: float, y: float, width: int, height: int) -> Tuple[int, int, int, int, float, float]:
    x = min(max(x, 0.0), width - 1.0)
    y = min(max(y, 0.0), height - 1.0)
    x0 = int(math.floor(x))
    y0 = int(math.floor(y))
    x1 = min(x0 + 1, width - 1)
    y1 = min(y0 + 1, height - 1)
    return x0, y0, x1, y1, x - x0, y - y0


def bilinear_sample(grid: ChannelGrid, channel: int, p: Point2) -> float:
    """Interpolate one channel at a continuous position, clamped to the border"""
    if not 0 <= channel < grid.channels:
        raise GridIndexError(f"channel {channel} out of range [0, {grid.channels})")

    plane = grid.data[channel]
    x0, y0, x1, y1, fx, fy = _clamped_corners(p.x, p.y, grid.width, grid.height)

    top = (1.0 - fx) * float(plane[y0, x0]) + fx * float(plane[y0, x1])
    bottom = (1.0 - fx) * float(plane[y1, x0]) + fx * float(plane[y1, x1])
    return (1.0 - fy) * top + fy * bottom


def bilinear_sample_pair(grid: ChannelGrid, channel: int, p: Point2) -> Tuple[float, float]:
    """Sample a (dx, dy) vector stored in channels (channel, channel + 1)"""
    return bilinear_sample(grid, channel, p), bilinear_sample(grid, channel + 1, p)


def splat_bilinear(
    xs: np.ndarray,
    ys: np.ndarray,
    weights: np.ndarray,
    shape: GridShape,
) -> np.ndarray:
    """
    Scatter weighted votes at continuous positions onto a float64 H×W plane.

    Each vote is spread over its 4 neighboring cells with bilinear weights;
    contributions landing outside the grid are dropped. Votes are accumulated
    in input order, neighbors in (y0,x0), (y0,x1), (y1,x0), (y1,x1) order, so
    the result is bit-deterministic.
    """
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    weights = np.asarray(weights, dtype=np.float64).ravel()
    if not (xs.shape == ys.shape == weights.shape):
        raise GridValidationError("vote arrays must have equal length")

    acc = np.zeros(shape.as_tuple(), dtype=np.float64)
    if xs.size == 0:
        return acc

    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    cols = np.stack([x0, x0 + 1, x0, x0 + 1], axis=1).ravel()
    rows = np.stack([y0, y0, y0 + 1, y0 + 1], axis=1).ravel()
    contrib = np.stack(
        [
            weights * (1.0 - fx) * (1.0 - fy),
            weights * fx * (1.0 - fy),
            weights * (1.0 - fx) * fy,
            weights * fx * fy,
        ],
        axis=1,
    ).ravel()

    inside = (cols >= 0) & (cols < shape.width) & (rows >= 0) & (rows < shape.height)
    np.add.at(acc, (rows[inside], cols[inside]), contrib[inside])
    return acc
