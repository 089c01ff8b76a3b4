"""
Round-trip experiments: generate -> encode -> perturb -> decode -> evaluate
"""
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Tuple

from tqdm import tqdm

from detection.boxes import is_minimal_valid_set
from detection.encoder import GtInstance, TargetSet, assign_scales, encode_multiscale, scale_instances
from detection.pipeline import PipelineConfig, decode_scales
from detection.types import KEYPOINT_TYPES, BBox, KeypointType
from evaluation.metrics import EvalReport, evaluate_dataset, match_detections
from grids.errors import GridValidationError
from synth.perturb import Perturbation, dropped_types, perturb_targets
from synth.scenes import SceneSpec, generate_scene
from synth.streams import derive_seed

log = logging.getLogger(__name__)

ALL_TYPES = frozenset(KEYPOINT_TYPES)


@dataclass
class SceneOutcome:
    index: int
    seed: int
    ground_truth: List[BBox]
    predictions: List[BBox]
    dropped: List[FrozenSet[KeypointType]]

    def unrecoverable(self, cfg: PipelineConfig) -> int:
        """Instances whose surviving keypoints cannot rebuild a box"""
        return sum(1 for lost in self.dropped if not is_minimal_valid_set(ALL_TYPES - lost, cfg.box_rule))


@dataclass
class RoundtripResult:
    report: EvalReport
    scenes: List[SceneOutcome]
    recall: Dict[float, float] = field(default_factory=dict)
    max_box_error: float = 0.0  # over true positives at the lowest threshold
    unrecoverable: int = 0

    @property
    def num_instances(self) -> int:
        return sum(len(s.ground_truth) for s in self.scenes)

    def to_dict(self) -> dict:
        out = self.report.to_dict()
        out.update(
            {
                "scenes": len(self.scenes),
                "instances": self.num_instances,
                "recall": {f"{t:g}": v for t, v in self.recall.items()},
                "max_box_error": self.max_box_error,
                "unrecoverable_instances": self.unrecoverable,
            }
        )
        return out


def scene_targets(
    instances: List[GtInstance],
    spec: SceneSpec,
    perturbation: Perturbation,
    cfg: PipelineConfig,
) -> List[TargetSet]:
    """Per-stride targets of one scene, perturbed with global instance identities"""
    strides = cfg.scales.strides
    clean = encode_multiscale(instances, spec.shape, cfg.disc, strides, cfg.scale_object_size)
    if perturbation.is_identity:
        return clean
    members = assign_scales(instances, strides, cfg.scale_object_size)
    out = []
    for scale_index, (stride, ids, targets) in enumerate(zip(strides, members, clean)):
        scaled = scale_instances([instances[i] for i in ids], stride)
        out.append(perturb_targets(targets, scaled, perturbation, instance_ids=ids, stream_key=scale_index))
    return out


def run_scene(index: int, template: SceneSpec, perturbation: Perturbation, cfg: PipelineConfig) -> SceneOutcome:
    """The index-th scene of a seeded batch; every seed derives from the templates"""
    spec = template.with_seed(derive_seed(template.seed, index))
    scene_perturbation = perturbation.with_seed(derive_seed(perturbation.seed, index))

    instances = generate_scene(spec)
    decoded = decode_scales(scene_targets(instances, spec, scene_perturbation, cfg), cfg)
    return SceneOutcome(
        index=index,
        seed=spec.seed,
        ground_truth=[inst.box for inst in instances],
        predictions=decoded.boxes,
        dropped=dropped_types(instances, scene_perturbation),
    )


def _max_box_error(scenes: List[SceneOutcome], threshold: float) -> float:
    worst = 0.0
    for scene in scenes:
        match = match_detections(scene.predictions, scene.ground_truth, threshold)
        for i, j, tp in zip(match.order, match.matched_gt, match.is_tp):
            if not tp:
                continue
            pred, gt = scene.predictions[i].coords(), scene.ground_truth[j].coords()
            worst = max(worst, max(abs(a - b) for a, b in zip(pred, gt)))
    return worst


def run_roundtrip(
    template: SceneSpec,
    perturbation: Perturbation,
    cfg: PipelineConfig,
    scenes: int,
    workers: int = 1,
    per_image: bool = False,
    progress: bool = False,
) -> RoundtripResult:
    """
    Run a seeded batch of scenes. Scenes are independent and results are
    collected in index order, so the outcome does not depend on workers.
    """
    if scenes < 0:
        raise GridValidationError(f"scene count must be >= 0, got {scenes}")
    if workers < 1:
        raise GridValidationError(f"workers must be >= 1, got {workers}")

    def one(index: int) -> SceneOutcome:
        return run_scene(index, template, perturbation, cfg)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(
            tqdm(pool.map(one, range(scenes)), total=scenes, desc="scenes", disable=not progress, file=sys.stderr)
        )

    report = evaluate_dataset([(s.predictions, s.ground_truth) for s in outcomes], cfg.eval_thresholds, per_image)
    total = sum(len(s.ground_truth) for s in outcomes)
    recall = {
        t: (report.counts[t]["true_positives"] / total if total else 1.0)
        for t in report.thresholds
    }
    result = RoundtripResult(
        report=report,
        scenes=outcomes,
        recall=recall,
        max_box_error=_max_box_error(outcomes, min(report.thresholds)),
        unrecoverable=sum(s.unrecoverable(cfg) for s in outcomes),
    )
    log.info(f"roundtrip: {len(outcomes)} scenes, {total} instances, {result.unrecoverable} unrecoverable")
    return result


def format_ap_table(result: RoundtripResult) -> str:
    rows: List[Tuple[str, ...]] = [("IoU", "AP", "recall", "mean IoU", "TP", "FP", "FN")]
    for t in result.report.thresholds:
        c = result.report.counts[t]
        rows.append(
            (
                f"{t:g}",
                f"{result.report.ap[t]:.4f}",
                f"{result.recall[t]:.4f}",
                f"{result.report.mean_iou[t]:.4f}",
                str(c["true_positives"]),
                str(c["false_positives"]),
                str(c["false_negatives"]),
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows]
    lines.insert(1, "-" * len(lines[0]))
    lines.append(f"max box error: {result.max_box_error:.3g} px")
    lines.append(f"unrecoverable instances: {result.unrecoverable}")
    return "\n".join(lines)
