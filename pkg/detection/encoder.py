"""
Ground-truth target encoding: heatmap discs, single offsets, group offsets
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from detection.types import (
    GROUP_OFFSET_CHANNELS,
    HEATMAP_CHANNELS,
    KEYPOINT_TYPES,
    SINGLE_OFFSET_CHANNELS,
    BBox,
    DiscSpec,
    KeypointType,
    pair_index,
)
from grids.errors import GridValidationError
from grids.tensor import ChannelGrid, GridShape, Point2

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GtInstance:
    box: BBox
    mask: Optional[ChannelGrid] = None

    def __post_init__(self):
        if self.mask is not None and self.mask.channels != 1:
            raise GridValidationError(f"instance mask must have 1 channel, got {self.mask.channels}")


@dataclass(frozen=True)
class TargetSet:
    heatmap: ChannelGrid
    single_offsets: ChannelGrid
    group_offsets: ChannelGrid

    def __post_init__(self):
        validate_targets(self.heatmap, self.single_offsets, self.group_offsets)

    @property
    def shape(self) -> GridShape:
        return self.heatmap.shape


def validate_targets(
    heatmap: ChannelGrid,
    single_offsets: Optional[ChannelGrid] = None,
    group_offsets: Optional[ChannelGrid] = None,
):
    """Check channel counts (5 / 10 / 40) and equal shapes"""
    expected = (
        ("heatmap", heatmap, HEATMAP_CHANNELS),
        ("single offsets", single_offsets, SINGLE_OFFSET_CHANNELS),
        ("group offsets", group_offsets, GROUP_OFFSET_CHANNELS),
    )
    for name, grid, channels in expected:
        if grid is None:
            continue
        if grid.channels != channels:
            raise GridValidationError(f"{name} must have {channels} channels, got {grid.channels}")
        if grid.shape != heatmap.shape:
            raise GridValidationError(
                f"{name} shape {grid.shape.as_tuple()} differs from heatmap {heatmap.shape.as_tuple()}"
            )


def keypoints_of_box(box: BBox) -> Dict[KeypointType, Point2]:
    """The five keypoints of a box, in type order"""
    if not (box.x_min < box.x_max and box.y_min < box.y_max):
        raise GridValidationError(f"degenerate box {box.coords()}")
    return {
        KeypointType.TL: Point2(box.x_min, box.y_min),
        KeypointType.TR: Point2(box.x_max, box.y_min),
        KeypointType.BL: Point2(box.x_min, box.y_max),
        KeypointType.BR: Point2(box.x_max, box.y_max),
        KeypointType.C: Point2((box.x_min + box.x_max) / 2.0, (box.y_min + box.y_max) / 2.0),
    }


def _check_masks(instances: Sequence[GtInstance], shape: GridShape):
    for i, inst in enumerate(instances):
        if inst.mask is not None and inst.mask.shape != shape:
            raise GridValidationError(
                f"instance {i} mask shape {inst.mask.shape.as_tuple()} differs from scene {shape.as_tuple()}"
            )


def _disc_window(center: Point2, radius: float, shape: GridShape) -> Optional[Tuple[slice, slice, np.ndarray]]:
    """Cells of the bounding square of a disc, clipped to the grid, with squared distances"""
    x_lo = max(0, int(math.ceil(center.x - radius)))
    x_hi = min(shape.width - 1, int(math.floor(center.x + radius)))
    y_lo = max(0, int(math.ceil(center.y - radius)))
    y_hi = min(shape.height - 1, int(math.floor(center.y + radius)))
    if x_lo > x_hi or y_lo > y_hi:
        return None

    xs = np.arange(x_lo, x_hi + 1, dtype=np.float64)
    ys = np.arange(y_lo, y_hi + 1, dtype=np.float64)
    dist2 = (xs[None, :] - center.x) ** 2 + (ys[:, None] - center.y) ** 2
    return slice(y_lo, y_hi + 1), slice(x_lo, x_hi + 1), dist2


def disc_ownership(
    instances: Sequence[GtInstance],
    shape: GridShape,
    disc: DiscSpec,
) -> np.ndarray:
    """
    For each type t and cell x, the index of the instance whose type-t keypoint
    owns x, or -1.

    A cell belongs to a disc when its Euclidean distance to the keypoint is at
    most r. Overlapping same-type discs go to the nearest keypoint; ties keep
    the lower instance index.
    """
    owner = np.full((HEATMAP_CHANNELS, shape.height, shape.width), -1, dtype=np.int64)
    best = np.full((HEATMAP_CHANNELS, shape.height, shape.width), np.inf, dtype=np.float64)
    r2 = disc.radius * disc.radius

    for i, inst in enumerate(instances):
        for kind, point in keypoints_of_box(inst.box).items():
            window = _disc_window(point, disc.radius, shape)
            if window is None:
                log.debug(f"instance {i} {kind.name} disc lies outside the grid")
                continue
            rows, cols, dist2 = window
            best_view = best[kind, rows, cols]
            owner_view = owner[kind, rows, cols]
            wins = (dist2 <= r2) & (dist2 < best_view)
            best_view[wins] = dist2[wins]
            owner_view[wins] = i

    return owner


def _keypoint_table(instances: Sequence[GtInstance]) -> np.ndarray:
    """(N, 5, 2) array of keypoint (x, y) per instance and type"""
    table = np.zeros((len(instances), HEATMAP_CHANNELS, 2), dtype=np.float64)
    for i, inst in enumerate(instances):
        for kind, point in keypoints_of_box(inst.box).items():
            table[i, kind] = (point.x, point.y)
    return table


def _cell_coords(shape: GridShape) -> Tuple[np.ndarray, np.ndarray]:
    ys, xs = np.mgrid[0:shape.height, 0:shape.width]
    return xs.astype(np.float64), ys.astype(np.float64)


def _heatmap_from_owner(owner: np.ndarray) -> np.ndarray:
    return (owner >= 0).astype(np.float32)


def _single_offsets_from_owner(owner: np.ndarray, table: np.ndarray, shape: GridShape) -> np.ndarray:
    out = np.zeros((SINGLE_OFFSET_CHANNELS, shape.height, shape.width), dtype=np.float64)
    xs, ys = _cell_coords(shape)
    for kind in KEYPOINT_TYPES:
        inside = owner[kind] >= 0
        if not inside.any():
            continue
        idx = owner[kind][inside]
        out[2 * kind][inside] = table[idx, kind, 0] - xs[inside]
        out[2 * kind + 1][inside] = table[idx, kind, 1] - ys[inside]
    return out


def _group_offsets_from_owner(owner: np.ndarray, table: np.ndarray, shape: GridShape) -> np.ndarray:
    out = np.zeros((GROUP_OFFSET_CHANNELS, shape.height, shape.width), dtype=np.float64)
    xs, ys = _cell_coords(shape)
    for k in KEYPOINT_TYPES:
        inside = owner[k] >= 0
        if not inside.any():
            continue
        idx = owner[k][inside]
        for l in KEYPOINT_TYPES:
            if l == k:
                continue
            p = pair_index(k, l)
            out[2 * p][inside] = table[idx, l, 0] - xs[inside]
            out[2 * p + 1][inside] = table[idx, l, 1] - ys[inside]
    return out


def encode_heatmap(instances: Sequence[GtInstance], shape: GridShape, disc: DiscSpec) -> ChannelGrid:
    """h(x): 1 inside any same-type disc, else 0"""
    _check_masks(instances, shape)
    owner = disc_ownership(instances, shape, disc)
    return ChannelGrid(_heatmap_from_owner(owner))


def encode_single_offsets(instances: Sequence[GtInstance], shape: GridShape, disc: DiscSpec) -> ChannelGrid:
    """s(x) = y - x inside the disc of the owning keypoint y; type t in channels (2t, 2t+1)"""
    _check_masks(instances, shape)
    owner = disc_ownership(instances, shape, disc)
    return ChannelGrid(_single_offsets_from_owner(owner, _keypoint_table(instances), shape))


def encode_group_offsets(instances: Sequence[GtInstance], shape: GridShape, disc: DiscSpec) -> ChannelGrid:
    """g_{k,l}(x) = y_l - x for x in the disc of keypoint k of the same instance"""
    _check_masks(instances, shape)
    owner = disc_ownership(instances, shape, disc)
    return ChannelGrid(_group_offsets_from_owner(owner, _keypoint_table(instances), shape))


def encode_targets(instances: Sequence[GtInstance], shape: GridShape, disc: DiscSpec) -> TargetSet:
    """All three targets from a single ownership pass"""
    _check_masks(instances, shape)
    owner = disc_ownership(instances, shape, disc)
    table = _keypoint_table(instances)
    return TargetSet(
        heatmap=ChannelGrid(_heatmap_from_owner(owner)),
        single_offsets=ChannelGrid(_single_offsets_from_owner(owner, table, shape)),
        group_offsets=ChannelGrid(_group_offsets_from_owner(owner, table, shape)),
    )


# =====================================================
# MULTI-SCALE
# =====================================================

def scaled_shape(shape: GridShape, stride: int) -> GridShape:
    return GridShape(-(-shape.height // stride), -(-shape.width // stride))


def scale_instances(instances: Sequence[GtInstance], stride: int) -> List[GtInstance]:
    """Boxes in feature-map units of the given stride; masks are image-resolution only"""
    if stride < 1:
        raise GridValidationError(f"stride must be >= 1, got {stride}")
    return [
        GtInstance(
            BBox(
                inst.box.x_min / stride,
                inst.box.y_min / stride,
                inst.box.x_max / stride,
                inst.box.y_max / stride,
                inst.box.score,
            )
        )
        for inst in instances
    ]


def assign_scales(
    instances: Sequence[GtInstance],
    strides: Sequence[int],
    object_size: float,
) -> List[List[int]]:
    """
    Split instance indices over strides: each instance goes to the coarsest
    stride at which its longer side still spans object_size feature pixels,
    else to the finest one. A single stride takes every instance.
    """
    if not strides:
        raise GridValidationError("at least one stride is required")
    if len(strides) == 1:
        return [list(range(len(instances)))]
    per_scale: List[List[int]] = [[] for _ in strides]
    for index, inst in enumerate(instances):
        chosen = 0
        longer = max(inst.box.width, inst.box.height)
        for i, stride in enumerate(strides):
            if longer / stride >= object_size:
                chosen = i
        per_scale[chosen].append(index)
    return per_scale


def encode_multiscale(
    instances: Sequence[GtInstance],
    image_shape: GridShape,
    disc: DiscSpec,
    strides: Sequence[int],
    object_size: float,
) -> List[TargetSet]:
    """One TargetSet per stride, each encoding the instances assigned to it"""
    _check_masks(instances, image_shape)
    targets = []
    for stride, members in zip(strides, assign_scales(instances, strides, object_size)):
        shape = scaled_shape(image_shape, stride)
        log.debug(f"stride {stride}: {len(members)} instances on {shape.as_tuple()}")
        scaled = scale_instances([instances[i] for i in members], stride)
        targets.append(encode_targets(scaled, shape, disc))
    return targets
