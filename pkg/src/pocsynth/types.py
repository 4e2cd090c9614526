"""Domain types.

Rasters are plain numpy arrays, row-major with the origin at the top-left
and coordinates given as (x right, y down):

* image: ``(H, W, 3)`` uint8
* binary mask: ``(H, W)`` bool
* soft mask: ``(H, W)`` float64 in [0, 1]
* label map: ``(H, W)`` integer
* score map: ``(H, W)`` float32

The ``as_*`` helpers validate and normalise array inputs. Everything else is
a frozen dataclass.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional, Tuple

import numpy as np

from .errors import LabelValueError, ShapeError

CLASS_ROLES = ("ood", "id-synthetic", "new-class")


def as_image(arr) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ShapeError(f"expected an (H, W, 3) image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError("image must be at least 1x1")
    if arr.dtype != np.uint8:
        raise ShapeError(f"expected uint8 pixels, got {arr.dtype}")
    return arr


def as_mask(arr, shape: Optional[Tuple[int, int]] = None) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D mask, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise ShapeError(f"mask shape {arr.shape} does not match {tuple(shape)}")
    return arr.astype(bool, copy=False)


def as_soft_mask(arr, shape: Optional[Tuple[int, int]] = None) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D soft mask, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise ShapeError(f"soft mask shape {arr.shape} does not match {tuple(shape)}")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("soft mask weights must lie in [0, 1]")
    return arr


@dataclass(frozen=True)
class Region:
    """Axis-aligned box; ``x0, y0`` is the inclusive top-left corner."""

    x0: int
    y0: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"degenerate region {self}")

    @property
    def x1(self) -> int:
        return self.x0 + self.w

    @property
    def y1(self) -> int:
        return self.y0 + self.h

    @property
    def slices(self) -> Tuple[slice, slice]:
        return slice(self.y0, self.y1), slice(self.x0, self.x1)

    def inside(self, width: int, height: int) -> bool:
        return self.x0 >= 0 and self.y0 >= 0 and self.x1 <= width and self.y1 <= height

    def contains(self, other: "Region") -> bool:
        return (
            self.x0 <= other.x0
            and self.y0 <= other.y0
            and other.x1 <= self.x1
            and other.y1 <= self.y1
        )

    def shifted(self, dx: int, dy: int) -> "Region":
        return Region(self.x0 + dx, self.y0 + dy, self.w, self.h)

    def to_dict(self) -> dict:
        return {"x0": self.x0, "y0": self.y0, "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Region":
        return cls(int(d["x0"]), int(d["y0"]), int(d["w"]), int(d["h"]))


@dataclass(frozen=True)
class PromptSet:
    object_prompt: str
    location_prompt: str
    inpaint_prompt: str
    class_id: int = 0
    class_role: str = "ood"
    class_name: str = ""

    def __post_init__(self):
        if self.class_role not in CLASS_ROLES:
            raise ValueError(f"unknown class role {self.class_role!r}")

    def to_dict(self) -> dict:
        return {
            "object_prompt": self.object_prompt,
            "location_prompt": self.location_prompt,
            "inpaint_prompt": self.inpaint_prompt,
            "class_id": self.class_id,
            "class_role": self.class_role,
            "class_name": self.class_name,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PromptSet":
        return cls(**d)


@dataclass(frozen=True)
class LabelConvention:
    """Which integer label means what in a label map.

    ``id_class_names`` maps in-distribution class names (as used by the
    ID-object catalog) to their id under this convention.
    """

    id_class_ids: frozenset
    ood_id: int = 1
    ignore_id: int = 255
    new_class_ids: Mapping[str, int] = field(default_factory=dict)
    id_class_names: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "id_class_ids", frozenset(int(i) for i in self.id_class_ids))
        object.__setattr__(self, "new_class_ids", MappingProxyType(dict(self.new_class_ids)))
        object.__setattr__(self, "id_class_names", MappingProxyType(dict(self.id_class_names)))
        if self.ood_id in self.id_class_ids:
            raise ValueError("ood_id collides with an in-distribution id")
        if self.ignore_id in self.id_class_ids or self.ignore_id == self.ood_id:
            raise ValueError("ignore_id collides with another id")
        taken = self.id_class_ids | {self.ood_id, self.ignore_id}
        new = list(self.new_class_ids.values())
        if len(set(new)) != len(new) or taken & set(new):
            raise ValueError("new class ids must be unique and disjoint from existing ids")
        for name, cid in self.id_class_names.items():
            if cid not in self.id_class_ids:
                raise ValueError(f"id class {name!r} maps to unknown id {cid}")

    @property
    def valid_ids(self) -> frozenset:
        return self.id_class_ids | {self.ood_id, self.ignore_id} | frozenset(self.new_class_ids.values())

    @property
    def object_ids(self) -> frozenset:
        """Ids an inserted object may be labelled with (everything but ignore)."""
        return self.valid_ids - {self.ignore_id}

    def check_class_id(self, class_id: int) -> None:
        if class_id not in self.object_ids:
            raise LabelValueError(f"class id {class_id} is not a labelable id in this convention")

    def class_id_for(self, class_name: str, role: str) -> int:
        if role == "ood":
            return self.ood_id
        if role == "new-class":
            try:
                return self.new_class_ids[class_name]
            except KeyError:
                raise LabelValueError(f"no id assigned to new class {class_name!r}") from None
        try:
            return self.id_class_names[class_name]
        except KeyError:
            raise LabelValueError(f"{class_name!r} is not a known in-distribution class") from None

    def validate(self, labels: np.ndarray) -> None:
        values = np.unique(labels)
        bad = [int(v) for v in values if int(v) not in self.valid_ids]
        if bad:
            raise LabelValueError(f"label values outside the convention: {bad[:10]}")


@dataclass(frozen=True)
class ObjectCatalog:
    """Named list of object prompts with the class each prompt belongs to."""

    name: str
    prompts: Tuple[str, ...]
    class_names: Tuple[str, ...]

    def __post_init__(self):
        if len(self.prompts) != len(self.class_names):
            raise ValueError("prompts and class_names must align")

    def __len__(self) -> int:
        return len(self.prompts)

    def entries(self):
        return list(zip(self.prompts, self.class_names))
