"""Request/response types shared by every backend."""
from dataclasses import dataclass
from typing import List, Protocol

import numpy as np

from ..errors import ShapeError
from ..types import as_image, as_mask

DEFAULT_STEPS = 50
DEFAULT_GUIDANCE = 7.5
DEFAULT_DETECTION_THRESHOLD = 0.3


@dataclass(frozen=True)
class InpaintRequest:
    crop: np.ndarray
    mask: np.ndarray  # True = repaint
    prompt: str
    seed: int
    steps: int = DEFAULT_STEPS
    guidance: float = DEFAULT_GUIDANCE

    def __post_init__(self):
        crop = as_image(self.crop)
        mask = as_mask(self.mask, crop.shape[:2])
        if not mask.any():
            raise ShapeError("inpaint mask has no pixels to repaint")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "mask", mask)


@dataclass(frozen=True)
class SegmentRequest:
    crop: np.ndarray
    prompt: str
    detection_threshold: float = DEFAULT_DETECTION_THRESHOLD

    def __post_init__(self):
        as_image(self.crop)
        if not self.prompt:
            raise ValueError("segmentation prompt must be non-empty")
        if not 0.0 < self.detection_threshold <= 1.0:
            raise ValueError("detection_threshold must lie in (0, 1]")


@dataclass(frozen=True)
class Detection:
    mask: np.ndarray
    confidence: float
    label: str


class InpaintBackend(Protocol):
    def inpaint(self, req: InpaintRequest) -> np.ndarray: ...


class SegmentationBackend(Protocol):
    def segment(self, req: SegmentRequest) -> List[Detection]: ...


def sort_detections(detections: List[Detection]) -> List[Detection]:
    # stable: equal confidences keep backend order
    return sorted(detections, key=lambda d: -d.confidence)
