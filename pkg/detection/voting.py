"""
Keypoint voting: heatmap + single offsets -> score map h'(x) -> peaks
"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.ndimage import maximum_filter

from detection.encoder import validate_targets
from detection.types import HEATMAP_CHANNELS, KEYPOINT_TYPES, Detection, DiscSpec
from grids.errors import GridValidationError
from grids.sampling import splat_bilinear
from grids.tensor import ChannelGrid, Point2

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PeakConfig:
    threshold: float = 0.004
    window: int = 3

    def __post_init__(self):
        if not self.threshold > 0:
            raise GridValidationError(f"peak threshold must be > 0, got {self.threshold}")
        if self.window < 3 or self.window % 2 == 0:
            raise GridValidationError(f"peak window must be odd and >= 3, got {self.window}")


@dataclass(frozen=True)
class ScoreMap:
    """Voted per-type scores, plus the offsets used to refine peak positions"""
    grid: ChannelGrid
    disc: DiscSpec
    single_offsets: Optional[ChannelGrid] = None

    def __post_init__(self):
        if self.grid.channels != HEATMAP_CHANNELS:
            raise GridValidationError(f"score map must have {HEATMAP_CHANNELS} channels")
        if (self.grid.data < 0).any():
            raise GridValidationError("score map values must be >= 0")
        if self.single_offsets is not None:
            validate_targets(self.grid, self.single_offsets)


def hough_vote(heatmap: ChannelGrid, single_offsets: ChannelGrid, disc: DiscSpec) -> ScoreMap:
    """
    h'(x) = 1/(pi r^2) * sum_i h(x_i) B(x_i + s(x_i) - x)

    Every cell with h > 0 votes at x_i + s(x_i); the bilinear kernel is applied
    as a forward splat, and votes outside the grid are dropped.
    """
    validate_targets(heatmap, single_offsets)
    shape = heatmap.shape
    norm = 1.0 / disc.area

    planes = np.zeros((HEATMAP_CHANNELS, shape.height, shape.width), dtype=np.float64)
    for kind in KEYPOINT_TYPES:
        h = heatmap.data[kind]
        rows, cols = np.nonzero(h > 0)
        if rows.size == 0:
            continue
        dx = single_offsets.data[2 * kind][rows, cols].astype(np.float64)
        dy = single_offsets.data[2 * kind + 1][rows, cols].astype(np.float64)
        weights = h[rows, cols].astype(np.float64) * norm
        planes[kind] = splat_bilinear(cols + dx, rows + dy, weights, shape)

    return ScoreMap(grid=ChannelGrid(planes), disc=disc, single_offsets=single_offsets)


def _has_earlier_tie(plane: np.ndarray, row: int, col: int, half: int) -> bool:
    """True when the window around (row, col) holds an equal value at a smaller (y, x)"""
    value = plane[row, col]
    r0, c0 = max(row - half, 0), max(col - half, 0)
    window = plane[r0:row + half + 1, c0:col + half + 1]
    for r, c in zip(*np.nonzero(window == value)):
        if (r0 + int(r), c0 + int(c)) < (row, col):
            return True
    return False


def extract_peaks(score_map: ScoreMap, cfg: PeakConfig) -> List[Detection]:
    """
    Cells that reach the threshold and equal their window maximum.

    Equal maxima inside one window keep the smallest (y, x). Each peak is
    refined to cell + s(cell) when the score map carries offsets.
    """
    grid = score_map.grid
    offsets = score_map.single_offsets
    half = cfg.window // 2
    detections: List[Detection] = []

    for kind in KEYPOINT_TYPES:
        plane = grid.data[kind]
        local_max = maximum_filter(plane, size=cfg.window, mode="constant", cval=0.0)
        rows, cols = np.nonzero((plane >= cfg.threshold) & (plane == local_max))

        accepted = []
        for row, col in zip(rows.tolist(), cols.tolist()):
            if _has_earlier_tie(plane, row, col, half):
                continue
            accepted.append((row, col))

            x, y = float(col), float(row)
            if offsets is not None:
                x += float(offsets.data[2 * kind][row, col])
                y += float(offsets.data[2 * kind + 1][row, col])
                x = min(max(x, 0.0), grid.width - 1.0)
                y = min(max(y, 0.0), grid.height - 1.0)
            detections.append(Detection(kind=kind, position=Point2(x, y), score=float(plane[row, col])))

        log.debug(f"{kind.name}: {len(accepted)} peaks")

    return detections
