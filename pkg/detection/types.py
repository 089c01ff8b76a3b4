"""
Types shared across the encode/decode pipeline
"""
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, Iterator, List, Optional, Tuple

from grids.errors import GridValidationError
from grids.tensor import Point2


class KeypointType(IntEnum):
    """Keypoint kinds; the value is the heatmap channel"""
    TL = 0  # top-left
    TR = 1  # top-right
    BL = 2  # bottom-left
    BR = 3  # bottom-right
    C = 4  # center

    @classmethod
    def parse(cls, name: str) -> "KeypointType":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise GridValidationError(
                f"unknown keypoint type {name!r}, expected one of {[t.name for t in cls]}"
            ) from None


KEYPOINT_TYPES: Tuple[KeypointType, ...] = tuple(KeypointType)
NUM_KEYPOINTS = len(KEYPOINT_TYPES)

# Ordered (k, l) pairs, k != l, lexicographic; pair p owns group-offset channels (2p, 2p+1)
KEYPOINT_PAIRS: Tuple[Tuple[KeypointType, KeypointType], ...] = tuple(
    (k, l) for k in KEYPOINT_TYPES for l in KEYPOINT_TYPES if l != k
)
_PAIR_INDEX: Dict[Tuple[int, int], int] = {
    (int(k), int(l)): p for p, (k, l) in enumerate(KEYPOINT_PAIRS)
}

HEATMAP_CHANNELS = NUM_KEYPOINTS
SINGLE_OFFSET_CHANNELS = 2 * NUM_KEYPOINTS
GROUP_OFFSET_CHANNELS = 2 * len(KEYPOINT_PAIRS)


def pair_index(k: KeypointType, l: KeypointType) -> int:
    try:
        return _PAIR_INDEX[(int(k), int(l))]
    except KeyError:
        raise GridValidationError(f"no group-offset pair for ({k!r}, {l!r})") from None


@dataclass(frozen=True)
class DiscSpec:
    radius: float = 5.0

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise GridValidationError(f"disc radius must be > 0, got {self.radius}")

    @property
    def area(self) -> float:
        """pi r^2, the voting normalizer"""
        return math.pi * self.radius * self.radius


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box; units depend on context (feature map or image)"""
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    score: float = 1.0

    def __post_init__(self):
        values = (self.x_min, self.y_min, self.x_max, self.y_max, self.score)
        if not all(math.isfinite(v) for v in values):
            raise GridValidationError(f"non-finite box {values}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise GridValidationError(
                f"degenerate box ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def coords(self) -> Tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    def with_score(self, score: float) -> "BBox":
        return BBox(self.x_min, self.y_min, self.x_max, self.y_max, score)

    def to_dict(self) -> dict:
        return {
            "x_min": self.x_min,
            "y_min": self.y_min,
            "x_max": self.x_max,
            "y_max": self.y_max,
            "score": self.score,
        }


@dataclass(frozen=True)
class Detection:
    """One localized keypoint candidate"""
    kind: KeypointType
    position: Point2
    score: float

    def queue_key(self) -> Tuple[float, float, float, int]:
        """Strict grouping order: score desc, then larger y, larger x, smaller type"""
        return (-self.score, -self.position.y, -self.position.x, int(self.kind))

    def to_dict(self) -> dict:
        return {
            "type": self.kind.name,
            "x": self.position.x,
            "y": self.position.y,
            "score": self.score,
        }


@dataclass
class KeypointGroup:
    """Up to five typed detections believed to belong to one instance"""
    slots: Dict[KeypointType, Detection] = field(default_factory=dict)
    scale_index: int = 0

    def add(self, detection: Detection):
        if detection.kind in self.slots:
            raise GridValidationError(f"group already holds a {detection.kind.name} keypoint")
        self.slots[detection.kind] = detection

    def get(self, kind: KeypointType) -> Optional[Detection]:
        return self.slots.get(kind)

    def kinds(self) -> frozenset:
        return frozenset(self.slots)

    def detections(self) -> List[Detection]:
        return [self.slots[k] for k in KEYPOINT_TYPES if k in self.slots]

    def __iter__(self) -> Iterator[Detection]:
        return iter(self.detections())

    def __len__(self) -> int:
        return len(self.slots)

    @property
    def seed(self) -> Detection:
        """Highest-scoring member (the detection that opened the group)"""
        return min(self.slots.values(), key=Detection.queue_key)

    def to_dict(self) -> dict:
        return {
            "scale_index": self.scale_index,
            "slots": {k.name: d.to_dict() for k, d in sorted(self.slots.items())},
        }
