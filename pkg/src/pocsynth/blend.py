"""Crop-local annotation, Gaussian feathering, blending and label update."""
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .backends.base import DEFAULT_DETECTION_THRESHOLD, SegmentationBackend, SegmentRequest
from .errors import GenerationRejected, ShapeError
from .types import LabelConvention, PromptSet, Region, as_image, as_mask, as_soft_mask


@dataclass(frozen=True)
class BlendConfig:
    sigma: float = 5.0
    truncate: float = 3.0
    min_object_area: float = 0.01

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.truncate < 1:
            raise ValueError("truncate must be >= 1")
        if not 0 <= self.min_object_area < 1:
            raise ValueError("min_object_area must lie in [0, 1)")


@dataclass(frozen=True)
class AugmentedSample:
    image: np.ndarray
    labels: np.ndarray
    object_mask: np.ndarray  # full-image coordinates
    prompt: PromptSet
    region: Region
    crop: Region
    seed: int


def gaussian_kernel1d(sigma: float, truncate: float) -> np.ndarray:
    radius = int(truncate * sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _smooth(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    out = ndimage.correlate1d(plane, kernel, axis=0, mode="constant", cval=0.0)
    return ndimage.correlate1d(out, kernel, axis=1, mode="constant", cval=0.0)


def feather(mask: np.ndarray, cfg: BlendConfig) -> np.ndarray:
    """Soft blending weights from a binary object mask.

    Separable Gaussian convolution, renormalised by the in-bounds kernel mass
    so an all-true mask stays exactly one up to the image border.
    """
    mask = as_mask(mask)
    kernel = gaussian_kernel1d(cfg.sigma, cfg.truncate)
    num = _smooth(mask.astype(np.float64), kernel)
    den = _smooth(np.ones(mask.shape, dtype=np.float64), kernel)
    return np.clip(num / den, 0.0, 1.0)


def blend(original: np.ndarray, edited: np.ndarray, soft: np.ndarray) -> np.ndarray:
    original = as_image(original)
    edited = as_image(edited)
    if original.shape != edited.shape:
        raise ShapeError(f"image shapes differ: {original.shape} vs {edited.shape}")
    w = as_soft_mask(soft, original.shape[:2])[..., None]
    mixed = (1.0 - w) * original + w * edited
    # round half away from zero; values are non-negative
    return np.clip(np.floor(mixed + 0.5), 0, 255).astype(np.uint8)


def annotate(crop_edited: np.ndarray, prompt: PromptSet, backend: SegmentationBackend,
             cfg: BlendConfig, region: Region,
             detection_threshold: float = DEFAULT_DETECTION_THRESHOLD) -> np.ndarray:
    """Object mask for the inpainted crop, or ``GenerationRejected``.

    ``region`` is the inpainted region in crop coordinates; its area sets the
    minimum acceptable object size.
    """
    crop_edited = as_image(crop_edited)
    detections = backend.segment(SegmentRequest(crop_edited, prompt.object_prompt, detection_threshold))
    if not detections:
        raise GenerationRejected(f"no {prompt.object_prompt!r} found in the inpainted crop")
    best = max(detections, key=lambda d: d.confidence)
    mask = as_mask(best.mask, crop_edited.shape[:2])
    area = int(mask.sum())
    needed = cfg.min_object_area * region.w * region.h
    if area == 0 or area < needed:
        raise GenerationRejected(
            f"{prompt.object_prompt!r} covers {area} px, below the {needed:.1f} px minimum"
        )
    return mask


def paste_and_label(base_image: np.ndarray, base_labels: np.ndarray, crop: Region,
                    blended_crop: np.ndarray, object_mask: np.ndarray, class_id: int,
                    convention: LabelConvention, prompt: PromptSet, region: Region,
                    seed: int) -> AugmentedSample:
    base_image = as_image(base_image)
    height, width = base_image.shape[:2]
    if base_labels.shape != (height, width):
        raise ShapeError(f"label map {base_labels.shape} does not match image {(height, width)}")
    if not crop.inside(width, height):
        raise ShapeError(f"crop {crop} leaves the {width}x{height} image")
    blended_crop = as_image(blended_crop)
    if blended_crop.shape[:2] != (crop.h, crop.w):
        raise ShapeError("blended crop does not match the crop region")
    object_mask = as_mask(object_mask, (crop.h, crop.w))
    convention.check_class_id(class_id)

    image = base_image.copy()
    image[crop.slices] = blended_crop
    full_mask = np.zeros((height, width), dtype=bool)
    full_mask[crop.slices] = object_mask
    labels = base_labels.copy()
    labels[full_mask] = class_id
    return AugmentedSample(image, labels, full_mask, prompt, region, crop, seed)
