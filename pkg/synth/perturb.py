"""
Corrupt clean targets the way an imperfect network would
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from detection.encoder import GtInstance, TargetSet, keypoints_of_box
from detection.types import HEATMAP_CHANNELS, KEYPOINT_TYPES, NUM_KEYPOINTS, KeypointType, pair_index
from grids.errors import GridValidationError
from grids.tensor import ChannelGrid
from synth.streams import DROP_COUNT, DROPOUT, FLIP, NOISE, stream

log = logging.getLogger(__name__)

# Max distance between an encoded keypoint (cell + offset) and its instance keypoint
OWNER_TOLERANCE = 1e-2


@dataclass(frozen=True)
class Perturbation:
    drop_types: FrozenSet[KeypointType] = frozenset()
    drop_probability: Tuple[float, ...] = (0.0,) * HEATMAP_CHANNELS  # per type
    drop_count: int = 0  # uniformly random types per instance
    drop_instances: Optional[FrozenSet[int]] = None  # None: every instance
    offset_noise_sigma: float = 0.0
    heatmap_flip_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "drop_types", frozenset(KeypointType(k) for k in self.drop_types))
        probs = tuple(float(p) for p in self.drop_probability)
        if len(probs) != HEATMAP_CHANNELS:
            raise GridValidationError(f"need {HEATMAP_CHANNELS} drop probabilities, got {len(probs)}")
        if not all(0.0 <= p <= 1.0 for p in probs):
            raise GridValidationError(f"drop probabilities must be in [0, 1], got {probs}")
        object.__setattr__(self, "drop_probability", probs)
        if not 0 <= self.drop_count <= NUM_KEYPOINTS:
            raise GridValidationError(f"drop count must be in [0, {NUM_KEYPOINTS}], got {self.drop_count}")
        if self.drop_instances is not None:
            object.__setattr__(self, "drop_instances", frozenset(int(i) for i in self.drop_instances))
        if not (math.isfinite(self.offset_noise_sigma) and self.offset_noise_sigma >= 0):
            raise GridValidationError(f"noise sigma must be >= 0, got {self.offset_noise_sigma}")
        if not 0.0 <= self.heatmap_flip_rate <= 1.0:
            raise GridValidationError(f"flip rate must be in [0, 1], got {self.heatmap_flip_rate}")

    @property
    def drops_keypoints(self) -> bool:
        return bool(self.drop_types) or self.drop_count > 0 or any(p > 0 for p in self.drop_probability)

    @property
    def is_identity(self) -> bool:
        return not self.drops_keypoints and self.offset_noise_sigma == 0 and self.heatmap_flip_rate == 0

    def with_seed(self, seed: int) -> "Perturbation":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        return {
            "drop_types": sorted(k.name for k in self.drop_types),
            "drop_probability": list(self.drop_probability),
            "drop_count": self.drop_count,
            "drop_instances": None if self.drop_instances is None else sorted(self.drop_instances),
            "offset_noise_sigma": self.offset_noise_sigma,
            "heatmap_flip_rate": self.heatmap_flip_rate,
            "seed": self.seed,
        }


def dropped_types(
    instances: Sequence[GtInstance],
    perturbation: Perturbation,
    instance_ids: Optional[Sequence[int]] = None,
) -> List[FrozenSet[KeypointType]]:
    """
    Keypoint types each instance loses. Decisions come from one stream per
    (seed, instance, type), so they do not depend on scene order or scale.
    """
    ids = list(range(len(instances))) if instance_ids is None else [int(i) for i in instance_ids]
    if len(ids) != len(instances):
        raise GridValidationError("one instance id per instance is required")

    out = []
    for i in ids:
        if perturbation.drop_instances is not None and i not in perturbation.drop_instances:
            out.append(frozenset())
            continue
        kinds = set(perturbation.drop_types)
        for t in KEYPOINT_TYPES:
            p = perturbation.drop_probability[t]
            if p > 0 and stream(perturbation.seed, DROPOUT, i, t).random() < p:
                kinds.add(t)
        if perturbation.drop_count:
            picks = stream(perturbation.seed, DROP_COUNT, i).choice(
                NUM_KEYPOINTS, size=perturbation.drop_count, replace=False
            )
            kinds.update(KeypointType(int(k)) for k in picks)
        out.append(frozenset(kinds))
    return out


def _owners_from_targets(targets: TargetSet, instances: Sequence[GtInstance]) -> np.ndarray:
    """Instance index per (type, cell), recovered from where each disc cell points"""
    h, w = targets.shape.as_tuple()
    owner = np.full((HEATMAP_CHANNELS, h, w), -1, dtype=np.int64)
    if not instances:
        return owner

    table = np.array(
        [[keypoints_of_box(inst.box)[k].as_tuple() for k in KEYPOINT_TYPES] for inst in instances],
        dtype=np.float64,
    )
    heat = targets.heatmap.data
    single = targets.single_offsets.data.astype(np.float64)
    for t in KEYPOINT_TYPES:
        rows, cols = np.nonzero(heat[t] > 0)
        if rows.size == 0:
            continue
        tx = cols + single[2 * t, rows, cols]
        ty = rows + single[2 * t + 1, rows, cols]
        dist = np.hypot(tx[:, None] - table[None, :, t, 0], ty[:, None] - table[None, :, t, 1])
        nearest = np.argmin(dist, axis=1)
        ok = dist[np.arange(rows.size), nearest] <= OWNER_TOLERANCE
        if not ok.all():
            log.debug(f"{int((~ok).sum())} {t.name} cells match no instance keypoint")
        owner[t, rows[ok], cols[ok]] = nearest[ok]
    return owner


def perturb_targets(
    targets: TargetSet,
    instances: Sequence[GtInstance],
    perturbation: Perturbation,
    instance_ids: Optional[Sequence[int]] = None,
    stream_key: int = 0,
) -> TargetSet:
    """
    Apply dropout, offset noise and heatmap flips to clean targets.

    instances are in the targets' units. instance_ids give each one its
    identity for the random streams (default: its position); stream_key
    separates the flip streams of different grids of one scene.
    """
    if perturbation.is_identity:
        return targets

    ids = list(range(len(instances))) if instance_ids is None else [int(i) for i in instance_ids]
    owner = _owners_from_targets(targets, instances)
    dropped = dropped_types(instances, perturbation, ids)

    heat = targets.heatmap.data.copy()
    single = targets.single_offsets.data.astype(np.float64)
    group = targets.group_offsets.data.astype(np.float64)
    sigma = perturbation.offset_noise_sigma

    for local, (gid, lost) in enumerate(zip(ids, dropped)):
        for t in KEYPOINT_TYPES:
            cells = owner[t] == local
            partners = [l for l in KEYPOINT_TYPES if l != t]
            if t in lost:
                heat[t][cells] = 0.0
                single[2 * t][cells] = 0.0
                single[2 * t + 1][cells] = 0.0
                for l in partners:
                    p = pair_index(t, l)
                    group[2 * p][cells] = 0.0
                    group[2 * p + 1][cells] = 0.0
                continue
            if sigma == 0 or not cells.any():
                continue
            rows, cols = np.nonzero(cells)
            z = stream(perturbation.seed, NOISE, gid, t).standard_normal((rows.size, 2 + 2 * len(partners)))
            single[2 * t, rows, cols] += sigma * z[:, 0]
            single[2 * t + 1, rows, cols] += sigma * z[:, 1]
            for j, l in enumerate(partners):
                p = pair_index(t, l)
                group[2 * p, rows, cols] += sigma * z[:, 2 + 2 * j]
                group[2 * p + 1, rows, cols] += sigma * z[:, 3 + 2 * j]

    if perturbation.heatmap_flip_rate > 0:
        u = stream(perturbation.seed, FLIP, stream_key).random(heat.shape)
        flips = (u < perturbation.heatmap_flip_rate) & (heat == 0)
        heat[flips] = 1.0
        log.debug(f"flipped {int(flips.sum())} heatmap cells")

    return TargetSet(
        heatmap=ChannelGrid(heat),
        single_offsets=ChannelGrid(single),
        group_offsets=ChannelGrid(group),
    )
