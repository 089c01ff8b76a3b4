"""
Off-screen overlay canvas - boxes and keypoints rendered to a PPM image
"""
import logging
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

import cv2
import numpy as np

from detection.types import BBox, KeypointGroup, KeypointType
from grids.errors import GridValidationError, TensorIOError
from grids.files import PathLike, atomic_write_bytes
from grids.tensor import GridShape

log = logging.getLogger(__name__)

Color = Tuple[int, int, int]  # RGB

BOX_COLOR: Color = (255, 255, 255)
KEYPOINT_COLORS = {
    KeypointType.TL: (255, 0, 0),  # red
    KeypointType.TR: (0, 0, 255),  # blue
    KeypointType.BL: (255, 105, 180),  # pink
    KeypointType.BR: (0, 255, 0),  # green
    KeypointType.C: (255, 255, 0),  # yellow
}
CROSS_ARM = 1  # 3-px crosses


def _pixel(v: float) -> int:
    return int(np.floor(v + 0.5))


class OverlayCanvas:
    def __init__(self, height: int, width: int, background: Color = (0, 0, 0)):
        self.shape = GridShape(height, width)
        self.background = tuple(int(c) for c in background)
        if len(self.background) != 3 or not all(0 <= c <= 255 for c in self.background):
            raise GridValidationError(f"background must be an RGB triple, got {background}")

        # Shape storage
        self.shapes: List[Tuple[str, tuple]] = []

    def add_rect(self, x1: float, y1: float, x2: float, y2: float, color: Color = BOX_COLOR):
        """Add a 1-px rectangle outline (pixel coordinates)"""
        self.shapes.append(("rect", (_pixel(x1), _pixel(y1), _pixel(x2), _pixel(y2), color)))

    def add_box(self, box: BBox, color: Color = BOX_COLOR):
        self.add_rect(box.x_min, box.y_min, box.x_max, box.y_max, color)

    def add_keypoint(self, kind: KeypointType, x: float, y: float):
        """Add a 3-px cross in the type's color"""
        self.shapes.append(("cross", (_pixel(x), _pixel(y), KEYPOINT_COLORS[KeypointType(kind)])))

    def add_group(self, group: KeypointGroup, stride: int = 1):
        for det in group:
            self.add_keypoint(det.kind, det.position.x * stride, det.position.y * stride)

    def clear_shapes(self):
        self.shapes = []

    def render(self) -> np.ndarray:
        """H x W x 3 uint8 RGB image; rectangles first, crosses on top"""
        img = np.empty((self.shape.height, self.shape.width, 3), dtype=np.uint8)
        img[:] = self.background

        for shape, data in self.shapes:
            if shape == "rect":
                x1, y1, x2, y2, color = data
                cv2.rectangle(img, (x1, y1), (x2, y2), color, thickness=1, lineType=cv2.LINE_8)

        for shape, data in self.shapes:
            if shape == "cross":
                x, y, color = data
                cv2.line(img, (x - CROSS_ARM, y), (x + CROSS_ARM, y), color, thickness=1, lineType=cv2.LINE_8)
                cv2.line(img, (x, y - CROSS_ARM), (x, y + CROSS_ARM), color, thickness=1, lineType=cv2.LINE_8)

        return img

    def to_ppm(self) -> bytes:
        """Binary PPM (P6) encoding of render()"""
        ok, buf = cv2.imencode(".ppm", cv2.cvtColor(self.render(), cv2.COLOR_RGB2BGR))
        if not ok:
            raise TensorIOError("<ppm>", "PPM encoding failed")
        return buf.tobytes()

    def save(self, path: PathLike) -> Path:
        target = atomic_write_bytes(path, self.to_ppm())
        log.debug(f"overlay with {len(self.shapes)} shape(s) written to {target}")
        return target


def draw_decode(
    shape: GridShape,
    boxes: Iterable[BBox],
    per_scale_groups: Sequence[Sequence[KeypointGroup]] = (),
    strides: Sequence[int] = (),
) -> OverlayCanvas:
    """Canvas with final boxes and every grouped keypoint lifted to image pixels"""
    canvas = OverlayCanvas(shape.height, shape.width)
    for box in boxes:
        canvas.add_box(box)
    for groups, stride in zip(per_scale_groups, strides):
        for group in groups:
            canvas.add_group(group, stride)
    return canvas
