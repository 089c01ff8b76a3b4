import logging

from commands import Command, CommandCategory
from detection.pipeline import decode_scales, load_scales, present_strides
from detection.records import write_boxes, write_groups
from grids.tensor import GridShape
from overlay.overlay_canvas import draw_decode

log = logging.getLogger(__name__)


# =====================================================
# DECODE COMMAND
# =====================================================

class Decode(Command):
    name = "decode"
    description = """Decode KGTEN targets into boxes.

Reads TARGETS/s<stride>/ for each given stride that exists, or every
s<stride>/ directory when no strides are given. Then runs voting, peak
extraction, grouping, box retrieval, multi-scale aggregation and NMS. Boxes
are written as JSON Lines in image pixels.

Input: targets (directory), out (boxes file), groups (optional JSON),
overlay (optional PPM), height/width (overlay size, default from the grids)

Returns: boxes, strides, files"""

    args = {
        "targets": "path",
        "out": "path",
        "groups": "path|null",
        "overlay": "path|null",
        "height": "int|null",
        "width": "int|null",
    }

    category = CommandCategory.DECODE
    result_summary_template = "✅ decoded {boxes} boxes from strides {strides}"

    def run(
        self,
        targets: str,
        out: str,
        groups: str = None,
        overlay: str = None,
        height: int = None,
        width: int = None,
        options=None,
    ) -> dict:
        if (options or {}).get("strides") is None:
            cfg = self.pipeline_config(options, strides=present_strides(targets))
        else:
            cfg = self.pipeline_config(options)
        strides, per_scale = load_scales(targets, cfg.scales.strides)
        cfg = cfg.with_strides(strides)

        result = decode_scales(per_scale, cfg)
        write_boxes(out, result.boxes)
        files = [str(out)]

        if groups:
            write_groups(groups, result.groups, strides)
            files.append(str(groups))

        if overlay:
            first = per_scale[0].shape
            shape = GridShape(
                int(height) if height else first.height * strides[0],
                int(width) if width else first.width * strides[0],
            )
            draw_decode(shape, result.boxes, result.groups, strides).save(overlay)
            files.append(str(overlay))

        log.info(f"decoded {len(result.boxes)} boxes")
        return {
            "success": True,
            "boxes": len(result.boxes),
            "strides": strides,
            "files": files,
        }
