"""Procedural stand-ins for the diffusion inpainter and the open-vocabulary segmenter.

The mock inpainter paints a flat-coloured ellipse inside the bounding box of
the repaint mask. The colour is a pure function of the prompt's subject, so
the mock segmenter can find the ellipse again by colour matching. That gives
an exact, model-free oracle for the whole pipeline: the label pixels written
for a sample must equal :meth:`EllipseSpec.pixels` of
:func:`mock_render_spec`.
"""
import colorsys
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import ndimage

from ..seeding import stable_hash
from ..types import Region
from .base import Detection, InpaintRequest, SegmentRequest, sort_detections

INPAINT_TEMPLATE = "A good photo of "
MOCK_CONFIDENCE = 0.9
COLOR_TOLERANCE = 12

# Fixed colours for scene prompts; "the road" uses the Cityscapes road colour.
# Object colours have HSV value 0.9 (max channel >= 229), so none can fall
# within tolerance of these.
SCENE_PALETTE = {"the road": (128, 64, 128)}


def prompt_subject(prompt: str) -> str:
    """The object named by a prompt, with the inpainting template removed."""
    if prompt.startswith(INPAINT_TEMPLATE):
        return prompt[len(INPAINT_TEMPLATE):]
    return prompt


def mock_hue(prompt: str) -> int:
    return stable_hash(prompt_subject(prompt)) % 360


def mock_color(prompt: str) -> Tuple[int, int, int]:
    r, g, b = colorsys.hsv_to_rgb(mock_hue(prompt) / 360.0, 0.8, 0.9)
    return (int(round(r * 255)), int(round(g * 255)), int(round(b * 255)))


@dataclass(frozen=True)
class EllipseSpec:
    cx: float
    cy: float
    ax: float  # semi-axis along x
    ay: float
    color: Tuple[int, int, int]

    def pixels(self, shape: Tuple[int, int]) -> np.ndarray:
        """Boolean raster of pixel centres falling inside the ellipse."""
        yy, xx = np.mgrid[0:shape[0], 0:shape[1]]
        return ((xx - self.cx) / self.ax) ** 2 + ((yy - self.cy) / self.ay) ** 2 <= 1.0


def mock_render_spec(prompt: str, region: Region, seed: int) -> EllipseSpec:
    u = stable_hash(prompt_subject(prompt), seed) / 2.0**64
    margin = 0.1 + 0.15 * u
    return EllipseSpec(
        cx=region.x0 + (region.w - 1) / 2.0,
        cy=region.y0 + (region.h - 1) / 2.0,
        ax=region.w / 2.0 * (1.0 - margin),
        ay=region.h / 2.0 * (1.0 - margin),
        color=mock_color(prompt),
    )


def mask_bbox(mask: np.ndarray) -> Region:
    ys = np.flatnonzero(mask.any(axis=1))
    xs = np.flatnonzero(mask.any(axis=0))
    return Region(int(xs[0]), int(ys[0]), int(xs[-1] - xs[0] + 1), int(ys[-1] - ys[0] + 1))


class MockInpainter:
    def inpaint(self, req: InpaintRequest) -> np.ndarray:
        spec = mock_render_spec(req.prompt, mask_bbox(req.mask), req.seed)
        out = req.crop.copy()
        out[spec.pixels(req.mask.shape) & req.mask] = spec.color
        return out


class MockSegmenter:
    """Finds regions whose colour matches the prompt's mock colour.

    Prompts listed in ``palette`` match that colour instead (scene elements
    such as the road). Each 8-connected component of matching pixels is one
    detection. With ``miss=True`` every call returns no detections.
    """

    def __init__(self, miss: bool = False, palette=None):
        self.miss = miss
        self.palette = dict(SCENE_PALETTE if palette is None else palette)

    def target_color(self, prompt: str) -> Tuple[int, int, int]:
        return self.palette.get(prompt_subject(prompt), None) or mock_color(prompt)

    def segment(self, req: SegmentRequest) -> List[Detection]:
        if self.miss or MOCK_CONFIDENCE <= req.detection_threshold:
            return []
        target = np.array(self.target_color(req.prompt), dtype=np.int16)
        diff = np.abs(req.crop.astype(np.int16) - target).max(axis=2)
        labelled, n = ndimage.label(diff <= COLOR_TOLERANCE, structure=np.ones((3, 3), dtype=bool))
        if n == 0:
            return []
        areas = np.bincount(labelled.ravel())[1:]
        order = np.argsort(-areas, kind="stable")
        label = prompt_subject(req.prompt)
        dets = [Detection(labelled == (i + 1), MOCK_CONFIDENCE, label) for i in order]
        return sort_detections(dets)


class MockBackend(MockInpainter, MockSegmenter):
    """Both mock halves behind one object."""
