from detection.boxes import (
    BoxRule,
    RoiCrop,
    ScaleConfig,
    aggregate_scales,
    box_from_group,
    crop_roi,
    iou,
    is_minimal_valid_set,
    lift_to_image,
    nms,
)
from detection.encoder import (
    GtInstance,
    TargetSet,
    assign_scales,
    disc_ownership,
    encode_group_offsets,
    encode_heatmap,
    encode_multiscale,
    encode_single_offsets,
    encode_targets,
    keypoints_of_box,
    scale_instances,
)
from detection.grouping import GroupConfig, group_keypoints
from detection.pipeline import DecodeResult, PipelineConfig, ScaleDecode, decode_scale, decode_scales
from detection.types import (
    KEYPOINT_PAIRS,
    KEYPOINT_TYPES,
    BBox,
    Detection,
    DiscSpec,
    KeypointGroup,
    KeypointType,
    pair_index,
)
from detection.voting import PeakConfig, ScoreMap, extract_peaks, hough_vote
