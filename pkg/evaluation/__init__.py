from evaluation.metrics import (
    EvalReport,
    MatchResult,
    average_precision,
    box_mask,
    evaluate_dataset,
    mask_average_precision,
    mask_iou,
    match_detections,
    match_masks,
    mean_matched_iou,
)
