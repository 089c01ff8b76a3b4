import logging
from typing import Dict, List

from commands import Command, CommandCategory
from detection.encoder import GtInstance, encode_multiscale
from detection.pipeline import scale_dir, write_targets
from detection.records import read_ground_truth
from grids.errors import GridValidationError
from grids.tensor import GridShape

log = logging.getLogger(__name__)


# =====================================================
# ENCODE COMMAND
# =====================================================

def select_image(images: Dict[int, List[GtInstance]], image_id=None) -> List[GtInstance]:
    """Instances of one image; an empty file is an empty scene"""
    if image_id is not None:
        return images.get(int(image_id), [])
    if len(images) > 1:
        raise GridValidationError(
            f"ground truth holds {len(images)} images {sorted(images)}; pass --image-id"
        )
    return next(iter(images.values()), [])


class Encode(Command):
    name = "encode"
    description = """Encode ground-truth boxes into KGTEN target tensors.

Writes heatmap, single-offset and group-offset tensors for every configured
stride under OUT/s<stride>/. Instances are assigned to strides by size.

Input: gt (JSON Lines boxes), out (directory), height, width (image size)

Returns: strides, instances, files"""

    args = {
        "gt": "path",
        "out": "path",
        "height": "int",
        "width": "int",
        "image_id": "int|null",
    }

    category = CommandCategory.ENCODE
    success_keys = ["success"]
    result_summary_template = "✅ encoded {instances} instances at strides {strides}"

    def run(self, gt: str, out: str, height: int, width: int, image_id: int = None, options=None) -> dict:
        cfg = self.pipeline_config(options)
        shape = GridShape(int(height), int(width))
        instances = select_image(read_ground_truth(gt, load_masks=False), image_id)

        strides = list(cfg.scales.strides)
        per_scale = encode_multiscale(instances, shape, cfg.disc, strides, cfg.scale_object_size)

        files = []
        for stride, targets in zip(strides, per_scale):
            files.extend(str(p) for p in write_targets(scale_dir(out, stride), targets))
        log.info(f"encoded {len(instances)} instances into {len(files)} tensors")

        return {
            "success": True,
            "instances": len(instances),
            "strides": strides,
            "files": files,
        }
