"""
Decode flow: vote -> peaks -> group -> box -> aggregate -> NMS
"""
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import config
from detection.boxes import BoxRule, ScaleConfig, aggregate_scales, box_from_group
from detection.encoder import TargetSet
from detection.grouping import GroupConfig, group_keypoints
from detection.types import BBox, Detection, DiscSpec, KeypointGroup
from detection.voting import PeakConfig, ScoreMap, extract_peaks, hough_vote
from grids.errors import GridValidationError, MissingInputError
from grids.files import PathLike
from grids.tensor import read_tensor, write_tensor

log = logging.getLogger(__name__)

TARGET_FILES = {
    "heatmap": "heatmap.kgten",
    "single_offsets": "single_offsets.kgten",
    "group_offsets": "group_offsets.kgten",
}


@dataclass(frozen=True)
class PipelineConfig:
    disc: DiscSpec = field(default_factory=DiscSpec)
    peaks: PeakConfig = field(default_factory=PeakConfig)
    grouping: GroupConfig = field(default_factory=GroupConfig)
    scales: ScaleConfig = field(default_factory=ScaleConfig)
    nms_iou: float = 0.5
    eval_thresholds: Tuple[float, ...] = (0.5, 0.7)
    box_rule: BoxRule = BoxRule.KEYPOINT_GRAPH
    scale_object_size: float = 16.0

    def __post_init__(self):
        if not 0 < self.nms_iou <= 1:
            raise GridValidationError(f"NMS IoU must be in (0, 1], got {self.nms_iou}")
        thresholds = tuple(float(t) for t in self.eval_thresholds)
        if not thresholds or not all(0 < t <= 1 for t in thresholds):
            raise GridValidationError(f"evaluation thresholds must be in (0, 1], got {thresholds}")
        object.__setattr__(self, "eval_thresholds", thresholds)
        if not self.scale_object_size > 0:
            raise GridValidationError("scale object size must be > 0")

    @classmethod
    def from_defaults(cls, **overrides) -> "PipelineConfig":
        """Build from config.py, then apply keyword overrides (None keeps the default)"""

        def pick(key, default):
            value = overrides.pop(key, None)
            return default if value is None else value

        radius = pick("radius", config.DISC_RADIUS)
        match_radius = pick("match_radius", float(config.MATCH_RADIUS or radius))
        duplicate_radius = pick("duplicate_radius", float(config.DUPLICATE_RADIUS or radius))
        peak_threshold = pick("peak_threshold", config.PEAK_THRESHOLD)
        peak_window = pick("peak_window", config.PEAK_WINDOW)
        strides = pick("strides", config.STRIDES)
        box_rule = pick("box_rule", config.BOX_RULE)

        base = cls(
            disc=DiscSpec(float(radius)),
            peaks=PeakConfig(threshold=float(peak_threshold), window=int(peak_window)),
            grouping=GroupConfig(match_radius=float(match_radius), duplicate_radius=float(duplicate_radius)),
            scales=ScaleConfig(tuple(strides)),
            nms_iou=float(pick("nms_iou", config.NMS_IOU)),
            eval_thresholds=tuple(pick("eval_thresholds", config.IOU_THRESHOLDS)),
            box_rule=box_rule if isinstance(box_rule, BoxRule) else BoxRule.parse(box_rule),
            scale_object_size=float(pick("scale_object_size", config.SCALE_OBJECT_SIZE)),
        )
        if overrides:
            raise GridValidationError(f"unknown pipeline options {sorted(overrides)}")
        return base

    def with_strides(self, strides: Sequence[int]) -> "PipelineConfig":
        return replace(self, scales=ScaleConfig(tuple(strides)))

    def to_dict(self) -> dict:
        return {
            "radius": self.disc.radius,
            "peak_threshold": self.peaks.threshold,
            "peak_window": self.peaks.window,
            "match_radius": self.grouping.match_radius,
            "duplicate_radius": self.grouping.duplicate_radius,
            "strides": list(self.scales.strides),
            "nms_iou": self.nms_iou,
            "iou_thresholds": list(self.eval_thresholds),
            "box_rule": self.box_rule.value,
            "scale_object_size": self.scale_object_size,
        }


@dataclass
class ScaleDecode:
    """Intermediate results of one scale; boxes in feature-map units"""
    stride: int
    score_map: ScoreMap
    detections: List[Detection]
    groups: List[KeypointGroup]
    boxes: List[BBox]


@dataclass
class DecodeResult:
    boxes: List[BBox]
    scales: List[ScaleDecode]

    @property
    def groups(self) -> List[List[KeypointGroup]]:
        return [s.groups for s in self.scales]


def decode_scale(targets: TargetSet, cfg: PipelineConfig, scale_index: int = 0) -> ScaleDecode:
    stride = cfg.scales.strides[scale_index]
    score_map = hough_vote(targets.heatmap, targets.single_offsets, cfg.disc)
    detections = extract_peaks(score_map, cfg.peaks)
    groups = group_keypoints(
        detections,
        targets.group_offsets,
        cfg.grouping,
        scale_index=scale_index,
        shape=targets.shape,
    )
    boxes = [b for b in (box_from_group(g, cfg.box_rule) for g in groups) if b is not None]
    log.info(
        f"stride {stride}: {len(detections)} keypoints, {len(groups)} groups, {len(boxes)} boxes"
    )
    return ScaleDecode(stride=stride, score_map=score_map, detections=detections, groups=groups, boxes=boxes)


def decode_scales(per_scale_targets: Sequence[TargetSet], cfg: PipelineConfig) -> DecodeResult:
    if len(per_scale_targets) != len(cfg.scales):
        raise GridValidationError(
            f"got targets for {len(per_scale_targets)} scales, configured {len(cfg.scales)}"
        )
    decoded = [decode_scale(t, cfg, i) for i, t in enumerate(per_scale_targets)]
    boxes = aggregate_scales([d.boxes for d in decoded], cfg.scales, cfg.nms_iou)
    return DecodeResult(boxes=boxes, scales=decoded)


# =====================================================
# TARGET DIRECTORIES
# =====================================================

def scale_dir(root: PathLike, stride: int) -> Path:
    return Path(root) / f"s{stride}"


def write_targets(directory: PathLike, targets: TargetSet) -> List[Path]:
    directory = Path(directory)
    written = []
    for attr, name in TARGET_FILES.items():
        path = directory / name
        write_tensor(getattr(targets, attr), path)
        written.append(path)
    return written


def read_targets(directory: PathLike) -> TargetSet:
    directory = Path(directory)
    grids = {}
    for attr, name in TARGET_FILES.items():
        path = directory / name
        if not path.exists():
            raise MissingInputError(path, attr.replace("_", "-"))
        grids[attr] = read_tensor(path)
    return TargetSet(**grids)


def discover_scales(root: PathLike, strides: Sequence[int]) -> List[int]:
    """Configured strides that have a target directory under root"""
    root = Path(root)
    if not root.is_dir():
        raise MissingInputError(root, "target directory")
    present = [s for s in strides if scale_dir(root, s).is_dir()]
    if not present:
        raise MissingInputError(root / f"s{{{','.join(str(s) for s in strides)}}}", "scale directory")
    return present


def present_strides(root: PathLike) -> List[int]:
    """Strides of every s<stride>/ directory under root, ascending"""
    root = Path(root)
    if not root.is_dir():
        raise MissingInputError(root, "target directory")
    strides = sorted(
        int(p.name[1:]) for p in root.iterdir() if p.is_dir() and p.name[:1] == "s" and p.name[1:].isdigit()
    )
    strides = [s for s in strides if s >= 1]
    if not strides:
        raise MissingInputError(root / "s<stride>", "scale directory")
    return strides


def load_scales(root: PathLike, strides: Sequence[int]) -> Tuple[List[int], List[TargetSet]]:
    present = discover_scales(root, strides)
    targets = []
    for stride in present:
        try:
            targets.append(read_targets(scale_dir(root, stride)))
        except GridValidationError as e:
            raise GridValidationError(f"scale s{stride}: {e}") from e
    return present, targets
