"""Where to put an object: valid-area segmentation and region sampling."""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .backends.base import DEFAULT_DETECTION_THRESHOLD, SegmentationBackend, SegmentRequest
from .errors import NoValidRegion
from .types import Region, as_image, as_mask

UNCONSTRAINED = "unconstrained"
PLACEMENT_MODES = ("guided", "random")


@dataclass(frozen=True)
class PlacementConfig:
    min_frac: float = 0.05
    max_frac: float = 0.35
    max_attempts: int = 50
    overlap_threshold: float = 0.6
    placement_mode: str = "guided"
    crop_multiple: int = 64

    def __post_init__(self):
        if not (0 < self.min_frac <= self.max_frac <= 1):
            raise ValueError("need 0 < min_frac <= max_frac <= 1")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if not 0 < self.overlap_threshold <= 1:
            raise ValueError("overlap_threshold must lie in (0, 1]")
        if self.placement_mode not in PLACEMENT_MODES:
            raise ValueError(f"placement_mode must be one of {PLACEMENT_MODES}")
        if self.crop_multiple < 1:
            raise ValueError("crop_multiple must be >= 1")


@dataclass(frozen=True)
class PlacementOutcome:
    region: Region
    crop: Region
    attempts_used: int
    center: Tuple[int, int]  # sampled (x, y); region may be shifted to fit the image


def valid_area(image: np.ndarray, location_prompt: str, backend: Optional[SegmentationBackend],
               placement_mode: str = "guided",
               detection_threshold: float = DEFAULT_DETECTION_THRESHOLD) -> np.ndarray:
    """Union of the backend's detections for ``location_prompt``.

    Random placement and the "unconstrained" prompt skip the backend and
    allow the whole image.
    """
    image = as_image(image)
    if not location_prompt:
        raise ValueError("location prompt must be non-empty")
    shape = image.shape[:2]
    if placement_mode == "random" or location_prompt == UNCONSTRAINED:
        return np.ones(shape, dtype=bool)
    detections = backend.segment(SegmentRequest(image, location_prompt, detection_threshold))
    valid = np.zeros(shape, dtype=bool)
    for det in detections:
        valid |= as_mask(det.mask, shape)
    return valid


def crop_for(region: Region, width: int, height: int, multiple: int) -> Region:
    """Square crop around ``region`` with side rounded up to ``multiple``.

    When the rounded side does not fit the image, the largest fitting
    multiple is used (never smaller than the region itself).
    """
    limit = min(width, height)
    need = max(region.w, region.h)
    side = math.ceil(need / multiple) * multiple
    if side > limit:
        side = (limit // multiple) * multiple
        side = max(side, need) if side else limit
    cx = region.x0 + region.w // 2
    cy = region.y0 + region.h // 2
    x0 = min(max(cx - side // 2, 0), width - side)
    y0 = min(max(cy - side // 2, 0), height - side)
    return Region(x0, y0, side, side)


def bottom_edge_overlap(valid: np.ndarray, region: Region) -> float:
    row = valid[region.y1 - 1, region.x0:region.x1]
    return float(row.mean())


def draw_region(valid: np.ndarray, cfg: PlacementConfig, rng: np.random.Generator,
                support: Optional[np.ndarray] = None) -> Optional[Tuple[Region, Tuple[int, int]]]:
    """One placement attempt; ``None`` when the bottom edge misses the valid area."""
    height, width = valid.shape
    if support is None:
        support = np.flatnonzero(valid)
    if support.size == 0:
        raise NoValidRegion("valid area is empty")
    side = min(width, height)
    w = max(1, int(round(rng.uniform(cfg.min_frac, cfg.max_frac) * side)))
    h = max(1, int(round(rng.uniform(cfg.min_frac, cfg.max_frac) * side)))
    idx = int(support[rng.integers(support.size)])
    cy, cx = divmod(idx, width)
    # keep the region in the image; the sampled centre stays inside it
    x0 = min(max(cx - w // 2, 0), width - w)
    y0 = min(max(cy - h // 2, 0), height - h)
    region = Region(x0, y0, w, h)
    if bottom_edge_overlap(valid, region) < cfg.overlap_threshold:
        return None
    return region, (cx, cy)


def sample_region(valid: np.ndarray, cfg: PlacementConfig, rng: np.random.Generator) -> PlacementOutcome:
    valid = as_mask(valid)
    height, width = valid.shape
    support = np.flatnonzero(valid)
    if support.size == 0:
        raise NoValidRegion("valid area is empty")
    for attempt in range(cfg.max_attempts):
        drawn = draw_region(valid, cfg, rng, support)
        if drawn is not None:
            region, center = drawn
            crop = crop_for(region, width, height, cfg.crop_multiple)
            return PlacementOutcome(region, crop, attempt + 1, center)
    raise NoValidRegion(f"no acceptable region after {cfg.max_attempts} attempts")
