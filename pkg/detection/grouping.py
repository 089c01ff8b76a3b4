"""
Keypoint grouping over the bidirectional group-offset graph
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from detection.types import (
    GROUP_OFFSET_CHANNELS,
    KEYPOINT_TYPES,
    Detection,
    KeypointGroup,
    KeypointType,
    pair_index,
)
from grids.errors import GridValidationError
from grids.sampling import bilinear_sample_pair
from grids.tensor import ChannelGrid, GridShape, Point2

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroupConfig:
    match_radius: float = 5.0
    duplicate_radius: float = 5.0

    def __post_init__(self):
        if not (self.match_radius > 0 and self.duplicate_radius > 0):
            raise GridValidationError("match and duplicate radii must be > 0")


def predict_partner(detection: Detection, partner: KeypointType, group_offsets: ChannelGrid) -> Point2:
    """p + g_{k,l}(p), sampled bilinearly at the sub-pixel detection position"""
    p = pair_index(detection.kind, partner)
    dx, dy = bilinear_sample_pair(group_offsets, 2 * p, detection.position)
    return detection.position.offset(dx, dy)


def group_keypoints(
    detections: Sequence[Detection],
    group_offsets: ChannelGrid,
    cfg: GroupConfig,
    scale_index: int = 0,
    shape: Optional[GridShape] = None,
) -> List[KeypointGroup]:
    """
    Greedy single-hop grouping.

    Detections are popped in strict score order. A claimed detection is
    skipped; one within duplicate_radius of an already-grouped detection of
    its type is rejected as a repeat. Otherwise it seeds a group and, for each
    other type, claims the nearest unclaimed detection within match_radius of
    its offset-predicted partner location.
    """
    if group_offsets.channels != GROUP_OFFSET_CHANNELS:
        raise GridValidationError(
            f"group offsets must have {GROUP_OFFSET_CHANNELS} channels, got {group_offsets.channels}"
        )
    if shape is not None and group_offsets.shape != shape:
        raise GridValidationError(
            f"group offsets shape {group_offsets.shape.as_tuple()} differs from {shape.as_tuple()}"
        )

    queue = sorted(range(len(detections)), key=lambda i: detections[i].queue_key())
    by_kind: Dict[KeypointType, List[int]] = {k: [] for k in KEYPOINT_TYPES}
    for i in queue:
        by_kind[detections[i].kind].append(i)

    consumed = [False] * len(detections)
    grouped: Dict[KeypointType, List[Point2]] = {k: [] for k in KEYPOINT_TYPES}
    groups: List[KeypointGroup] = []
    rejected = 0

    for i in queue:
        if consumed[i]:
            continue
        det = detections[i]
        consumed[i] = True

        if any(det.position.distance_to(q) <= cfg.duplicate_radius for q in grouped[det.kind]):
            rejected += 1
            continue

        group = KeypointGroup(scale_index=scale_index)
        group.add(det)
        grouped[det.kind].append(det.position)

        for partner in KEYPOINT_TYPES:
            if partner == det.kind:
                continue
            target = predict_partner(det, partner, group_offsets)
            j = _nearest_unclaimed(target, by_kind[partner], detections, consumed, cfg.match_radius)
            if j is None:
                continue
            consumed[j] = True
            group.add(detections[j])
            grouped[partner].append(detections[j].position)

        groups.append(group)

    log.debug(f"scale {scale_index}: {len(groups)} groups from {len(detections)} detections, {rejected} repeats")
    return groups


def _nearest_unclaimed(
    target: Point2,
    candidates: Sequence[int],
    detections: Sequence[Detection],
    consumed: List[bool],
    radius: float,
) -> Optional[int]:
    best = None
    best_dist = math.inf
    # candidates are in queue order, so strict < keeps the earlier one on ties
    for j in candidates:
        if consumed[j]:
            continue
        d = target.distance_to(detections[j].position)
        if d <= radius and d < best_dist:
            best, best_dist = j, d
    return best
