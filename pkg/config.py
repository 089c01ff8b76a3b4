"""
Pipeline defaults, overridable by environment variables and CLI flags
"""
import os
import sys


def _floats(value: str):
    return tuple(float(v) for v in value.split(",") if v.strip())


def _ints(value: str):
    return tuple(int(v) for v in value.split(",") if v.strip())


# =====================================================
# KEYPOINT TARGETS
# =====================================================
DISC_RADIUS = float(os.environ.get("KG_RADIUS", "5"))  # heatmap disc radius r

# =====================================================
# VOTING / PEAKS
# =====================================================
PEAK_THRESHOLD = float(os.environ.get("KG_PEAK_THRESHOLD", "0.004"))
PEAK_WINDOW = int(os.environ.get("KG_PEAK_WINDOW", "3"))  # maximum-filter size, odd

# =====================================================
# GROUPING
# =====================================================
# Empty means "same as the disc radius"
MATCH_RADIUS = os.environ.get("KG_MATCH_RADIUS", "")
DUPLICATE_RADIUS = os.environ.get("KG_DUPLICATE_RADIUS", "")

# =====================================================
# BOXES / SCALES
# =====================================================
BOX_RULE = os.environ.get("KG_BOX_RULE", "keypoint_graph")
NMS_IOU = float(os.environ.get("KG_NMS_IOU", "0.5"))
STRIDES = _ints(os.environ.get("KG_STRIDES", "4,8,16,32"))
SCALE_OBJECT_SIZE = float(os.environ.get("KG_SCALE_OBJECT_SIZE", "16"))

# =====================================================
# EVALUATION
# =====================================================
IOU_THRESHOLDS = _floats(os.environ.get("KG_IOU_THRESHOLDS", "0.5,0.7"))

# =====================================================
# SYNTHETIC SCENES
# =====================================================
SEED = int(os.environ.get("KG_SEED", "0"))
SCENE_HEIGHT = int(os.environ.get("KG_SCENE_HEIGHT", "512"))
SCENE_WIDTH = int(os.environ.get("KG_SCENE_WIDTH", "512"))
MIN_INSTANCES = int(os.environ.get("KG_MIN_INSTANCES", "5"))
MAX_INSTANCES = int(os.environ.get("KG_MAX_INSTANCES", "15"))
MIN_BOX_SIZE = int(os.environ.get("KG_MIN_BOX_SIZE", "20"))
MAX_BOX_SIZE = int(os.environ.get("KG_MAX_BOX_SIZE", "120"))
MAX_OVERLAP_IOU = float(os.environ.get("KG_MAX_OVERLAP_IOU", "0.3"))
MAX_ATTEMPTS = int(os.environ.get("KG_MAX_ATTEMPTS", "1000"))  # rejection-sampling attempts per instance
ROUNDTRIP_SCENES = int(os.environ.get("KG_ROUNDTRIP_SCENES", "20"))
ROUNDTRIP_STRIDES = _ints(os.environ.get("KG_ROUNDTRIP_STRIDES", "1"))

# =====================================================
# EXECUTION
# =====================================================
WORKERS = int(os.environ.get("KG_WORKERS", "1"))

# =====================================================
# DEBUG SETTINGS
# =====================================================
DEBUG_MODE = os.environ.get("DEBUG_MODE", "false").lower() == "true"
VERBOSE_LOGGING = os.environ.get("VERBOSE_LOGGING", "false").lower() == "true"


def print_config(stream=sys.stderr):
    print("\n" + "=" * 60, file=stream)
    print("🔧 KEYPOINT GRAPH PIPELINE CONFIGURATION", file=stream)
    print("=" * 60, file=stream)
    print(f"Disc radius: {DISC_RADIUS}", file=stream)
    print(f"Peaks: threshold {PEAK_THRESHOLD}, window {PEAK_WINDOW}", file=stream)
    print(f"Grouping radii: match {MATCH_RADIUS or DISC_RADIUS}, duplicate {DUPLICATE_RADIUS or DISC_RADIUS}", file=stream)
    print(f"Box rule: {BOX_RULE}", file=stream)
    print(f"Strides: {STRIDES} (roundtrip {ROUNDTRIP_STRIDES})", file=stream)
    print(f"NMS IoU: {NMS_IOU}", file=stream)
    print(f"Eval IoU thresholds: {IOU_THRESHOLDS}", file=stream)
    print(f"Seed: {SEED} | Workers: {WORKERS}", file=stream)
    print(f"Debug Mode: {DEBUG_MODE}", file=stream)
    print("=" * 60 + "\n", file=stream)
