from overlay.overlay_canvas import KEYPOINT_COLORS, OverlayCanvas, draw_decode
