"""
Random box scenes by rejection sampling
"""
import logging
from collections import Counter
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

import config
from detection.boxes import iou
from detection.encoder import GtInstance, keypoints_of_box
from detection.types import KEYPOINT_TYPES, BBox
from evaluation.metrics import box_mask
from grids.errors import GenerationError, GridValidationError
from grids.tensor import GridShape
from synth.streams import SCENE, stream

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SceneSpec:
    shape: GridShape
    instance_count: Tuple[int, int]
    box_size: Tuple[int, int]  # side lengths in pixels, inclusive
    min_keypoint_separation: float
    seed: int = 0
    max_overlap_iou: float = 0.3
    with_masks: bool = False
    max_attempts: int = 1000

    def __post_init__(self):
        lo, hi = self.instance_count
        if lo < 0 or hi < lo:
            raise GridValidationError(f"bad instance count range {self.instance_count}")
        lo, hi = self.box_size
        if lo < 1 or hi < lo:
            raise GridValidationError(f"bad box size range {self.box_size}")
        if self.min_keypoint_separation < 0:
            raise GridValidationError("minimum keypoint separation must be >= 0")
        if not 0 <= self.max_overlap_iou <= 1:
            raise GridValidationError(f"max overlap IoU must be in [0, 1], got {self.max_overlap_iou}")
        if self.max_attempts < 1:
            raise GridValidationError("max_attempts must be >= 1")

    @classmethod
    def from_defaults(cls, seed: Optional[int] = None, radius: Optional[float] = None, **overrides) -> "SceneSpec":
        """config.py defaults; separation 2r + 2 so same-type discs never touch"""
        r = config.DISC_RADIUS if radius is None else radius
        spec = cls(
            shape=GridShape(config.SCENE_HEIGHT, config.SCENE_WIDTH),
            instance_count=(config.MIN_INSTANCES, config.MAX_INSTANCES),
            box_size=(config.MIN_BOX_SIZE, config.MAX_BOX_SIZE),
            min_keypoint_separation=2.0 * r + 2.0,
            seed=config.SEED if seed is None else seed,
            max_overlap_iou=config.MAX_OVERLAP_IOU,
            max_attempts=config.MAX_ATTEMPTS,
        )
        return replace(spec, **overrides) if overrides else spec

    def with_seed(self, seed: int) -> "SceneSpec":
        return replace(self, seed=seed)


def _check_feasible(spec: SceneSpec):
    # x_max = x_min + size must stay <= W - 1
    limit = min(spec.shape.width, spec.shape.height) - 1
    if spec.box_size[0] > limit:
        raise GenerationError(
            "box_size",
            f"smallest box side {spec.box_size[0]} does not fit a {spec.shape.as_tuple()} scene",
        )


def _sample_box(rng: np.random.Generator, spec: SceneSpec) -> BBox:
    limit = min(spec.shape.width, spec.shape.height) - 1
    hi = min(spec.box_size[1], limit)
    w = int(rng.integers(spec.box_size[0], hi, endpoint=True))
    h = int(rng.integers(spec.box_size[0], hi, endpoint=True))
    x = int(rng.integers(0, spec.shape.width - 1 - w, endpoint=True))
    y = int(rng.integers(0, spec.shape.height - 1 - h, endpoint=True))
    return BBox(float(x), float(y), float(x + w), float(y + h))


def _keypoint_array(box: BBox) -> np.ndarray:
    points = keypoints_of_box(box)
    return np.array([points[k].as_tuple() for k in KEYPOINT_TYPES], dtype=np.float64)


def _violation(box: BBox, keypoints: np.ndarray, placed: List[BBox], placed_kps: List[np.ndarray], spec: SceneSpec) -> Optional[str]:
    if placed_kps and spec.min_keypoint_separation > 0:
        others = np.stack(placed_kps)  # N x 5 x 2
        dist = np.hypot(others[..., 0] - keypoints[None, :, 0], others[..., 1] - keypoints[None, :, 1])
        if (dist < spec.min_keypoint_separation).any():
            return "min_keypoint_separation"
    for other in placed:
        if iou(box, other) > spec.max_overlap_iou:
            return "max_overlap_iou"
    return None


def generate_scene(spec: SceneSpec) -> List[GtInstance]:
    """
    Draw instance_count boxes with integer corners inside [0, W-1] x [0, H-1].

    Every same-type keypoint pair across instances is at least
    min_keypoint_separation apart and no two boxes overlap by more than
    max_overlap_iou. Each instance gets max_attempts draws; running out raises
    a GenerationError naming the constraint that rejected most draws.
    """
    _check_feasible(spec)
    rng = stream(spec.seed, SCENE)
    count = int(rng.integers(spec.instance_count[0], spec.instance_count[1], endpoint=True))

    placed: List[BBox] = []
    placed_kps: List[np.ndarray] = []
    for index in range(count):
        rejected: Counter = Counter()
        for _ in range(spec.max_attempts):
            box = _sample_box(rng, spec)
            keypoints = _keypoint_array(box)
            reason = _violation(box, keypoints, placed, placed_kps, spec)
            if reason is None:
                placed.append(box)
                placed_kps.append(keypoints)
                break
            rejected[reason] += 1
        else:
            constraint, _ = rejected.most_common(1)[0]
            raise GenerationError(
                constraint,
                f"instance {index + 1} of {count} not placed after {spec.max_attempts} attempts (seed {spec.seed})",
            )

    log.debug(f"scene seed {spec.seed}: {len(placed)} instances")
    if spec.with_masks:
        return [GtInstance(box=b, mask=box_mask(b, spec.shape)) for b in placed]
    return [GtInstance(box=b) for b in placed]
