#!/usr/bin/env python3
"""
Box and mask metric tests
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detection.boxes import iou
from detection.types import BBox
from evaluation.metrics import (
    average_precision,
    box_mask,
    evaluate_dataset,
    mask_average_precision,
    mask_iou,
    match_detections,
    mean_matched_iou,
)
from grids.errors import GridValidationError
from grids.tensor import ChannelGrid, GridShape

GT_A = BBox(0, 0, 10, 10)
GT_B = BBox(20, 0, 30, 10)


def scored(box, score):
    return box.with_score(score)


# =====================================================
# MATCHING
# =====================================================

def test_perfect_predictions():
    match = match_detections([GT_A, GT_B], [GT_A, GT_B], 0.5)
    assert match.true_positives == 2
    assert match.false_positives == 0
    assert match.false_negatives == 0


def test_prediction_without_ground_truth():
    match = match_detections([GT_A], [], 0.5)
    assert match.is_tp == [False]
    assert match.false_positives == 1


def test_two_predictions_on_one_ground_truth():
    exact = scored(GT_A, 0.9)
    partial = BBox(0, 0, 10, 6, 0.8)
    assert iou(partial, GT_A) == pytest.approx(0.6)

    match = match_detections([partial, exact], [GT_A], 0.5)
    assert match.order == [1, 0]
    assert match.is_tp == [True, False]
    assert match.matched_gt == [0, None]


def test_ground_truth_claimed_once():
    preds = [BBox(0, 0, 10, 10, 0.5 + 0.1 * i) for i in range(4)]
    match = match_detections(preds, [GT_A], 0.5)
    claimed = [g for g in match.matched_gt if g is not None]
    assert claimed == [0]


@pytest.mark.parametrize("threshold", [0.0, -0.1, 1.01])
def test_threshold_range(threshold):
    with pytest.raises(GridValidationError):
        match_detections([], [], threshold)


# =====================================================
# AP / MEAN IOU
# =====================================================

def test_ap_ranked_fixture():
    preds = [scored(GT_A, 0.9), BBox(50, 50, 60, 60, 0.8), scored(GT_B, 0.7)]
    assert average_precision(preds, [GT_A, GT_B], 0.5) == pytest.approx(0.5 + 0.5 * 2 / 3, abs=1e-6)


def test_ap_trailing_false_positives_change_nothing():
    preds = [scored(GT_A, 0.9), BBox(50, 50, 60, 60, 0.8), scored(GT_B, 0.7)]
    extra = preds + [BBox(70, 70, 80, 80, 0.1), BBox(80, 0, 90, 5, 0.05)]
    assert average_precision(extra, [GT_A, GT_B], 0.5) == average_precision(preds, [GT_A, GT_B], 0.5)


def test_ap_empty_conventions():
    assert average_precision([], [], 0.5) == 1.0
    assert average_precision([GT_A], [], 0.5) == 0.0
    assert average_precision([], [GT_A], 0.5) == 0.0


def test_mean_iou_single_pair():
    pred = BBox(1, 1, 11, 11, 0.9)
    assert mean_matched_iou([pred], [GT_A], 0.5) == pytest.approx(81 / 119, abs=1e-9)


def test_mean_iou_without_matches():
    assert mean_matched_iou([BBox(50, 50, 60, 60)], [GT_A], 0.5) == 0.0


@settings(max_examples=60, deadline=None)
@given(
    flags=st.lists(st.booleans(), min_size=1, max_size=12),
    extra_gts=st.integers(0, 3),
    flip=st.integers(0, 11),
)
def test_ap_bounds_and_relabeling(flags, extra_gts, flip):
    # TPs sit exactly on their own ground truth, FPs far away
    preds, gts = [], []
    for i, tp in enumerate(flags):
        box = BBox(20 * i, 0, 20 * i + 10, 10, 1.0 - 0.01 * i)
        preds.append(box)
        if tp:
            gts.append(box.with_score(1.0))
    gts += [BBox(500 + 20 * j, 500, 510 + 20 * j, 510) for j in range(extra_gts)]
    far = [b if tp else BBox(b.x_min, 300, b.x_max, 310, b.score) for b, tp in zip(preds, flags)]

    ap = average_precision(far, gts, 0.5)
    assert 0.0 <= ap <= 1.0

    i = flip % len(flags)
    if flags[i]:
        relabeled = list(far)
        relabeled[i] = BBox(far[i].x_min, 300, far[i].x_max, 310, far[i].score)
        assert average_precision(relabeled, gts, 0.5) <= ap + 1e-12


# =====================================================
# MASKS
# =====================================================

def mask(rows):
    return ChannelGrid(np.array(rows, dtype=np.float32))


def test_mask_iou_fixture():
    assert mask_iou(mask([[1, 1], [0, 0]]), mask([[0, 1], [1, 0]])) == 1 / 3


def test_mask_iou_identical_disjoint_empty():
    a = mask([[1, 0], [0, 1]])
    assert mask_iou(a, a) == 1.0
    assert mask_iou(a, mask([[0, 1], [1, 0]])) == 0.0
    assert mask_iou(mask([[0, 0]]), mask([[0, 0]])) == 1.0


def test_mask_iou_validation():
    with pytest.raises(GridValidationError):
        mask_iou(mask([[1, 0]]), mask([[1], [0]]))
    with pytest.raises(GridValidationError):
        mask_iou(mask([[0.5, 0]]), mask([[1, 0]]))
    with pytest.raises(GridValidationError):
        mask_iou(ChannelGrid.zeros(2, GridShape(1, 2)), ChannelGrid.zeros(2, GridShape(1, 2)))


def test_box_mask_cells():
    m = box_mask(BBox(1, 2, 3, 4), GridShape(5, 5)).data[0]
    assert m.sum() == 4
    assert m[2, 1] == 1.0 and m[3, 2] == 1.0
    assert m[4, 3] == 0.0


def test_filled_masks_agree_with_box_iou():
    shape = GridShape(12, 12)
    a, b = BBox(2, 2, 6, 6), BBox(4, 4, 8, 8)
    assert mask_iou(box_mask(a, shape), box_mask(b, shape)) == pytest.approx(iou(a, b))


def test_mask_average_precision():
    shape = GridShape(16, 16)
    gts = [box_mask(GT_A, shape), box_mask(BBox(12, 12, 16, 16), shape)]
    preds = [box_mask(GT_A, shape), box_mask(BBox(0, 12, 4, 16), shape)]
    assert mask_average_precision(preds, [0.9, 0.8], gts, 0.5) == pytest.approx(0.5)
    with pytest.raises(GridValidationError):
        mask_average_precision(preds, [0.9], gts, 0.5)


# =====================================================
# DATASETS
# =====================================================

IMAGES = [
    ([scored(GT_A, 0.9)], [GT_A]),
    ([BBox(50, 50, 60, 60, 0.95)], [GT_B]),
]


def test_pooled_report():
    report = evaluate_dataset(IMAGES, (0.5, 0.7))
    assert report.ap[0.5] == pytest.approx(0.25)
    assert report.mean_iou[0.5] == 1.0
    assert report.pr_curve[0.5] == [(0.0, 0.0), (0.5, 0.5)]
    assert report.counts[0.7] == {
        "predictions": 2,
        "ground_truths": 2,
        "true_positives": 1,
        "false_positives": 1,
        "false_negatives": 1,
    }


def test_per_image_report():
    report = evaluate_dataset(IMAGES, (0.5,), per_image=True)
    assert report.ap[0.5] == pytest.approx(0.5)
    assert report.mean_iou[0.5] == pytest.approx(0.5)


def test_report_dict_keys():
    payload = evaluate_dataset(IMAGES, (0.5, 0.7)).to_dict()
    assert payload["thresholds"] == [0.5, 0.7]
    assert sorted(payload["ap"]) == ["0.5", "0.7"]
    assert payload["per_image"] is False


def test_empty_dataset():
    report = evaluate_dataset([], (0.5,))
    assert report.ap[0.5] == 1.0
    assert report.pr_curve[0.5] == []


def test_bad_dataset_threshold():
    with pytest.raises(GridValidationError):
        evaluate_dataset(IMAGES, (0.5, 0.0))
