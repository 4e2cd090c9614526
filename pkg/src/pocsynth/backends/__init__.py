from .base import (
    DEFAULT_DETECTION_THRESHOLD,
    DEFAULT_GUIDANCE,
    DEFAULT_STEPS,
    Detection,
    InpaintBackend,
    InpaintRequest,
    SegmentationBackend,
    SegmentRequest,
)
from .http import HttpBackend
from .mock import MockBackend, MockInpainter, MockSegmenter, mock_color, mock_render_spec

__all__ = [
    "DEFAULT_DETECTION_THRESHOLD",
    "DEFAULT_GUIDANCE",
    "DEFAULT_STEPS",
    "Detection",
    "HttpBackend",
    "InpaintBackend",
    "InpaintRequest",
    "MockBackend",
    "MockInpainter",
    "MockSegmenter",
    "SegmentRequest",
    "SegmentationBackend",
    "mock_color",
    "mock_render_spec",
]
