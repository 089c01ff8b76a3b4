"""
Box retrieval from keypoint groups, multi-scale aggregation and NMS
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, List, Optional, Sequence, Tuple

from detection.types import BBox, KeypointGroup, KeypointType
from grids.errors import GridValidationError
from grids.tensor import ChannelGrid

log = logging.getLogger(__name__)

TL, TR, BL, BR, C = (
    KeypointType.TL,
    KeypointType.TR,
    KeypointType.BL,
    KeypointType.BR,
    KeypointType.C,
)
CORNERS = (TL, TR, BL, BR)
DIAGONAL_PAIRS: Tuple[FrozenSet[KeypointType], ...] = (frozenset({TL, BR}), frozenset({TR, BL}))


class BoxRule(Enum):
    """Which keypoint subsets may produce a box"""
    KEYPOINT_GRAPH = "keypoint_graph"  # any 3, a diagonal pair, or center + corner
    CORNER_PAIR = "corner_pair"  # TL + BR only

    @classmethod
    def parse(cls, value: str) -> "BoxRule":
        try:
            return cls(value.strip().lower().replace("-", "_"))
        except ValueError:
            raise GridValidationError(
                f"unknown box rule {value!r}, expected one of {[r.value for r in cls]}"
            ) from None


@dataclass(frozen=True)
class ScaleConfig:
    strides: Tuple[int, ...] = (4, 8, 16, 32)

    def __post_init__(self):
        strides = tuple(int(s) for s in self.strides)
        if not strides:
            raise GridValidationError("at least one stride is required")
        if strides[0] < 1 or any(b <= a for a, b in zip(strides, strides[1:])):
            raise GridValidationError(f"strides must be strictly increasing positive integers, got {strides}")
        object.__setattr__(self, "strides", strides)

    def __len__(self) -> int:
        return len(self.strides)


@dataclass(frozen=True)
class RoiCrop:
    """A sub-grid plus the inclusive cell region it was cut from"""
    grid: ChannelGrid
    x0: int
    y0: int
    x1: int
    y1: int


def is_minimal_valid_set(kinds: FrozenSet[KeypointType], rule: BoxRule = BoxRule.KEYPOINT_GRAPH) -> bool:
    if rule is BoxRule.CORNER_PAIR:
        return {TL, BR} <= kinds
    if len(kinds) >= 3:
        return True
    if kinds in DIAGONAL_PAIRS:
        return True
    return len(kinds) == 2 and C in kinds


def _edge(direct: List[float], reflected: List[float]) -> float:
    values = direct + reflected
    if min(values) == max(values):
        return values[0]
    # reflections through C only differ from corners by rounding on clean input
    if direct and math.isclose(min(values), max(values), rel_tol=1e-12, abs_tol=1e-12):
        return math.fsum(direct) / len(direct)
    return math.fsum(values) / len(values)


def box_from_group(group: KeypointGroup, rule: BoxRule = BoxRule.KEYPOINT_GRAPH) -> Optional[BBox]:
    """
    Reconstruct a box from a group, or None when the filled slots are not a
    minimal valid set.

    Each edge averages the available evidence: the corners lying on it and the
    reflections 2C - corner of the opposite corners. When the reflections agree
    with the corners up to float rounding, the corners alone are used. Score is
    the mean member score.
    """
    slots = dict(group.slots)
    if rule is BoxRule.CORNER_PAIR:
        slots = {k: d for k, d in slots.items() if k in (TL, BR)}

    kinds = frozenset(slots)
    if not is_minimal_valid_set(kinds, rule):
        return None

    pos = {k: d.position for k, d in slots.items()}
    center = pos.get(C)

    def reflect_x(k):
        return 2.0 * center.x - pos[k].x

    def reflect_y(k):
        return 2.0 * center.y - pos[k].y

    left = [pos[k].x for k in (TL, BL) if k in pos]
    right = [pos[k].x for k in (TR, BR) if k in pos]
    top = [pos[k].y for k in (TL, TR) if k in pos]
    bottom = [pos[k].y for k in (BL, BR) if k in pos]
    left_r, right_r, top_r, bottom_r = [], [], [], []
    if center is not None:
        left_r = [reflect_x(k) for k in (TR, BR) if k in pos]
        right_r = [reflect_x(k) for k in (TL, BL) if k in pos]
        top_r = [reflect_y(k) for k in (BL, BR) if k in pos]
        bottom_r = [reflect_y(k) for k in (TL, TR) if k in pos]

    if not (left + left_r and right + right_r and top + top_r and bottom + bottom_r):
        return None

    x_min, x_max = _edge(left, left_r), _edge(right, right_r)
    y_min, y_max = _edge(top, top_r), _edge(bottom, bottom_r)
    if not (x_min < x_max and y_min < y_max):
        log.debug(f"group {sorted(k.name for k in kinds)} reconstructs a degenerate box")
        return None

    score = math.fsum(d.score for d in slots.values()) / len(slots)
    return BBox(x_min, y_min, x_max, y_max, score)


def lift_to_image(box: BBox, stride: int) -> BBox:
    """Feature-map units -> image pixels"""
    if stride < 1:
        raise GridValidationError(f"stride must be >= 1, got {stride}")
    if stride == 1:
        return box
    return BBox(box.x_min * stride, box.y_min * stride, box.x_max * stride, box.y_max * stride, box.score)


def iou(a: BBox, b: BBox) -> float:
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return min(1.0, max(0.0, inter / union))


def rank_key(box: BBox) -> Tuple[float, float, float]:
    """Score descending, ties by smaller x_min then y_min"""
    return (-box.score, box.x_min, box.y_min)


def nms(boxes: Sequence[BBox], iou_threshold: float) -> List[BBox]:
    """Greedy non-maximum suppression; output in kept order"""
    if not 0 < iou_threshold <= 1:
        raise GridValidationError(f"NMS IoU threshold must be in (0, 1], got {iou_threshold}")

    kept: List[BBox] = []
    for box in sorted(boxes, key=rank_key):
        if all(iou(box, k) < iou_threshold for k in kept):
            kept.append(box)
    return kept


def aggregate_scales(
    per_scale_boxes: Sequence[Sequence[BBox]],
    scales: ScaleConfig,
    nms_iou: float,
) -> List[BBox]:
    """Lift each scale's boxes by its stride, concatenate, suppress duplicates"""
    if len(per_scale_boxes) != len(scales.strides):
        raise GridValidationError(
            f"got {len(per_scale_boxes)} box lists for {len(scales.strides)} scales"
        )
    lifted = [
        lift_to_image(box, stride)
        for boxes, stride in zip(per_scale_boxes, scales.strides)
        for box in boxes
    ]
    kept = nms(lifted, nms_iou)
    log.debug(f"aggregated {len(lifted)} boxes over {len(scales)} scales -> {len(kept)}")
    return kept


def crop_roi(grid: ChannelGrid, box: BBox, pad: float = 0.0) -> RoiCrop:
    """
    Sub-grid covering the padded box: cells floor(min - pad) .. ceil(max + pad)
    inclusive, clamped to the grid.
    """
    if pad < 0:
        raise GridValidationError(f"pad must be >= 0, got {pad}")

    x0 = int(math.floor(box.x_min - pad))
    y0 = int(math.floor(box.y_min - pad))
    x1 = int(math.ceil(box.x_max + pad))
    y1 = int(math.ceil(box.y_max + pad))
    if x1 < 0 or y1 < 0 or x0 > grid.width - 1 or y0 > grid.height - 1:
        raise GridValidationError(f"box {box.coords()} lies outside the {grid.width}x{grid.height} grid")

    x0, y0 = max(0, x0), max(0, y0)
    x1, y1 = min(grid.width - 1, x1), min(grid.height - 1, y1)
    return RoiCrop(grid=ChannelGrid(grid.data[:, y0:y1 + 1, x0:x1 + 1]), x0=x0, y0=y0, x1=x1, y1=y1)
