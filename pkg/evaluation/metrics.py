"""
Box- and mask-level detection metrics (VOC-style matching, all-point AP)
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from detection.boxes import iou, rank_key
from detection.types import BBox
from grids.errors import GridValidationError
from grids.tensor import ChannelGrid, GridShape

log = logging.getLogger(__name__)


@dataclass
class MatchResult:
    """Matching of ranked predictions against ground truths at one IoU threshold"""
    order: List[int]  # prediction indices, best first
    is_tp: List[bool]  # per ranked prediction
    matched_gt: List[Optional[int]]  # per ranked prediction
    matched_iou: List[float]  # IoU with the matched ground truth, 0 for FPs
    num_gts: int

    @property
    def true_positives(self) -> int:
        return sum(self.is_tp)

    @property
    def false_positives(self) -> int:
        return len(self.is_tp) - self.true_positives

    @property
    def false_negatives(self) -> int:
        return self.num_gts - self.true_positives


@dataclass
class EvalReport:
    thresholds: Tuple[float, ...]
    ap: Dict[float, float] = field(default_factory=dict)
    mean_iou: Dict[float, float] = field(default_factory=dict)
    pr_curve: Dict[float, List[Tuple[float, float]]] = field(default_factory=dict)
    counts: Dict[float, Dict[str, int]] = field(default_factory=dict)
    per_image: bool = False

    def to_dict(self) -> dict:
        def key(t):
            return f"{t:g}"

        return {
            "thresholds": list(self.thresholds),
            "per_image": self.per_image,
            "ap": {key(t): self.ap[t] for t in self.thresholds},
            "mean_iou": {key(t): self.mean_iou[t] for t in self.thresholds},
            "pr_curve": {key(t): [list(p) for p in self.pr_curve[t]] for t in self.thresholds},
            "counts": {key(t): dict(self.counts[t]) for t in self.thresholds},
        }


def _check_threshold(iou_threshold: float):
    if not 0 < iou_threshold <= 1:
        raise GridValidationError(f"IoU threshold must be in (0, 1], got {iou_threshold}")


def _match_ranked(order: Sequence[int], overlaps: np.ndarray, num_gts: int, iou_threshold: float) -> MatchResult:
    """Each prediction, best first, claims the unclaimed ground truth of highest overlap"""
    claimed = np.zeros(num_gts, dtype=bool)
    is_tp, matched_gt, matched_iou = [], [], []

    for i in order:
        best_j, best_ov = None, -1.0
        for j in range(num_gts):
            if claimed[j]:
                continue
            ov = float(overlaps[i, j])
            if ov > best_ov:
                best_j, best_ov = j, ov
        if best_j is not None and best_ov >= iou_threshold:
            claimed[best_j] = True
            is_tp.append(True)
            matched_gt.append(best_j)
            matched_iou.append(best_ov)
        else:
            is_tp.append(False)
            matched_gt.append(None)
            matched_iou.append(0.0)

    return MatchResult(list(order), is_tp, matched_gt, matched_iou, num_gts)


def _box_overlaps(preds: Sequence[BBox], gts: Sequence[BBox]) -> np.ndarray:
    overlaps = np.zeros((len(preds), len(gts)), dtype=np.float64)
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            overlaps[i, j] = iou(p, g)
    return overlaps


def match_detections(preds: Sequence[BBox], gts: Sequence[BBox], iou_threshold: float) -> MatchResult:
    _check_threshold(iou_threshold)
    order = sorted(range(len(preds)), key=lambda i: rank_key(preds[i]))
    return _match_ranked(order, _box_overlaps(preds, gts), len(gts), iou_threshold)


def _ap_from_flags(is_tp: Sequence[bool], num_gts: int) -> Tuple[float, List[Tuple[float, float]]]:
    """All-point interpolated AP and the raw (recall, precision) curve"""
    if num_gts == 0:
        return (1.0 if not is_tp else 0.0), []
    if not is_tp:
        return 0.0, []

    tp = np.cumsum(np.asarray(is_tp, dtype=np.float64))
    fp = np.cumsum(~np.asarray(is_tp, dtype=bool))
    recall = tp / num_gts
    precision = tp / np.maximum(tp + fp, np.finfo(np.float64).eps)

    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    idx = np.where(mrec[1:] != mrec[:-1])[0]
    ap = float(np.sum((mrec[idx + 1] - mrec[idx]) * mpre[idx + 1]))

    curve = [(float(r), float(p)) for r, p in zip(recall, precision)]
    return min(1.0, max(0.0, ap)), curve


def average_precision(preds: Sequence[BBox], gts: Sequence[BBox], iou_threshold: float) -> float:
    match = match_detections(preds, gts, iou_threshold)
    return _ap_from_flags(match.is_tp, len(gts))[0]


def mean_matched_iou(preds: Sequence[BBox], gts: Sequence[BBox], iou_threshold: float) -> float:
    """Mean IoU over true-positive pairs; 0 without matches"""
    match = match_detections(preds, gts, iou_threshold)
    matched = [v for v, tp in zip(match.matched_iou, match.is_tp) if tp]
    return math.fsum(matched) / len(matched) if matched else 0.0


# =====================================================
# MASKS
# =====================================================

def _binary_plane(mask: ChannelGrid, name: str) -> np.ndarray:
    if mask.channels != 1:
        raise GridValidationError(f"{name} must have 1 channel, got {mask.channels}")
    plane = mask.data[0]
    if not np.isin(plane, (0.0, 1.0)).all():
        raise GridValidationError(f"{name} must be binary")
    return plane.astype(bool)


def mask_iou(a: ChannelGrid, b: ChannelGrid) -> float:
    """|a and b| / |a or b|; 1 when both are empty"""
    if a.shape != b.shape:
        raise GridValidationError(
            f"mask shapes differ: {a.shape.as_tuple()} vs {b.shape.as_tuple()}"
        )
    pa, pb = _binary_plane(a, "mask a"), _binary_plane(b, "mask b")
    union = int(np.count_nonzero(pa | pb))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(pa & pb)) / union


def box_mask(box: BBox, shape: GridShape) -> ChannelGrid:
    """Filled rectangle: cells with x_min <= col < x_max and y_min <= row < y_max"""
    cols = np.arange(shape.width, dtype=np.float64)
    rows = np.arange(shape.height, dtype=np.float64)
    inside_x = (cols >= box.x_min) & (cols < box.x_max)
    inside_y = (rows >= box.y_min) & (rows < box.y_max)
    return ChannelGrid((inside_y[:, None] & inside_x[None, :]).astype(np.float32))


def match_masks(
    pred_masks: Sequence[ChannelGrid],
    pred_scores: Sequence[float],
    gt_masks: Sequence[ChannelGrid],
    iou_threshold: float,
) -> MatchResult:
    _check_threshold(iou_threshold)
    if len(pred_masks) != len(pred_scores):
        raise GridValidationError("one score per predicted mask is required")
    order = sorted(range(len(pred_masks)), key=lambda i: (-pred_scores[i], i))
    overlaps = np.zeros((len(pred_masks), len(gt_masks)), dtype=np.float64)
    for i, p in enumerate(pred_masks):
        for j, g in enumerate(gt_masks):
            overlaps[i, j] = mask_iou(p, g)
    return _match_ranked(order, overlaps, len(gt_masks), iou_threshold)


def mask_average_precision(
    pred_masks: Sequence[ChannelGrid],
    pred_scores: Sequence[float],
    gt_masks: Sequence[ChannelGrid],
    iou_threshold: float,
) -> float:
    match = match_masks(pred_masks, pred_scores, gt_masks, iou_threshold)
    return _ap_from_flags(match.is_tp, len(gt_masks))[0]


# =====================================================
# DATASETS
# =====================================================

def evaluate_dataset(
    images: Sequence[Tuple[Sequence[BBox], Sequence[BBox]]],
    thresholds: Sequence[float],
    per_image: bool = False,
) -> EvalReport:
    """
    Box-level report over (predictions, ground truths) pairs.

    Pooled (default): predictions of every image are ranked together against
    the total ground-truth count. per_image: AP and mean IoU are averaged over
    images. The PR curve is always the pooled one.
    """
    thresholds = tuple(float(t) for t in thresholds)
    for t in thresholds:
        _check_threshold(t)

    report = EvalReport(thresholds=thresholds, per_image=per_image)
    total_gts = sum(len(g) for _, g in images)
    total_preds = sum(len(p) for p, _ in images)

    for t in thresholds:
        ranked = []  # (rank key, image index, is_tp)
        matched_ious: List[float] = []
        image_aps: List[float] = []
        image_ious: List[float] = []

        for n, (preds, gts) in enumerate(images):
            match = match_detections(preds, gts, t)
            for i, tp in zip(match.order, match.is_tp):
                ranked.append((rank_key(preds[i]), n, tp))
            tp_ious = [v for v, tp in zip(match.matched_iou, match.is_tp) if tp]
            matched_ious.extend(tp_ious)
            image_aps.append(_ap_from_flags(match.is_tp, len(gts))[0])
            image_ious.append(math.fsum(tp_ious) / len(tp_ious) if tp_ious else 0.0)

        ranked.sort(key=lambda r: (r[0], r[1]))
        pooled_ap, curve = _ap_from_flags([r[2] for r in ranked], total_gts)

        if per_image and images:
            report.ap[t] = math.fsum(image_aps) / len(image_aps)
            report.mean_iou[t] = math.fsum(image_ious) / len(image_ious)
        else:
            report.ap[t] = pooled_ap
            report.mean_iou[t] = math.fsum(matched_ious) / len(matched_ious) if matched_ious else 0.0
        report.pr_curve[t] = curve
        tps = sum(1 for r in ranked if r[2])
        report.counts[t] = {
            "predictions": total_preds,
            "ground_truths": total_gts,
            "true_positives": tps,
            "false_positives": total_preds - tps,
            "false_negatives": total_gts - tps,
        }
        log.debug(f"IoU {t:g}: AP {report.ap[t]:.4f}, {tps}/{total_gts} matched")

    return report
