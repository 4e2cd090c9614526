"""Raster file formats: RGB PNG images, 8-bit label PNGs, POCSCORE score maps."""
import io
import struct
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from .errors import LabelValueError, ShapeError
from .types import LabelConvention, as_image

SCORE_MAGIC = b"POCSCORE"
_SCORE_HEADER = struct.Struct("<8sII")

PathLike = Union[str, Path]


def encode_png(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(as_image(image), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as img:
        return np.array(img.convert("RGB"), dtype=np.uint8)


def encode_gray_png(plane: np.ndarray) -> bytes:
    plane = np.asarray(plane)
    if plane.ndim != 2:
        raise ShapeError(f"expected a 2-D raster, got shape {plane.shape}")
    buf = io.BytesIO()
    Image.fromarray(plane.astype(np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def decode_gray_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as img:
        if img.mode not in ("L", "P", "1"):
            raise ShapeError(f"expected a single-channel PNG, got mode {img.mode}")
        if img.mode == "P":
            # palette indices are the label values
            return np.array(img, dtype=np.uint8)
        return np.array(img.convert("L"), dtype=np.uint8)


def encode_mask_png(mask: np.ndarray) -> bytes:
    """Binary mask as an 8-bit PNG with 255 = true."""
    return encode_gray_png(np.where(np.asarray(mask, dtype=bool), 255, 0))


def decode_mask_png(data: bytes) -> np.ndarray:
    return decode_gray_png(data) >= 128


def encode_label_map(labels: np.ndarray, convention: LabelConvention) -> bytes:
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ShapeError(f"label map must be 2-D, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() > 255):
        raise LabelValueError("label values must fit in 8 bits")
    convention.validate(labels)
    return encode_gray_png(labels.astype(np.uint8))


def decode_label_map(data: bytes) -> np.ndarray:
    return decode_gray_png(data)


def read_image(path: PathLike) -> np.ndarray:
    return decode_png(Path(path).read_bytes())


def write_image(path: PathLike, image: np.ndarray) -> None:
    Path(path).write_bytes(encode_png(image))


def read_label_map(path: PathLike) -> np.ndarray:
    return decode_label_map(Path(path).read_bytes())


def write_label_map(path: PathLike, labels: np.ndarray, convention: LabelConvention) -> None:
    Path(path).write_bytes(encode_label_map(labels, convention))


def encode_score_map(scores: np.ndarray) -> bytes:
    scores = np.asarray(scores)
    if scores.ndim != 2:
        raise ShapeError(f"score map must be 2-D, got shape {scores.shape}")
    h, w = scores.shape
    return _SCORE_HEADER.pack(SCORE_MAGIC, w, h) + scores.astype("<f4").tobytes(order="C")


def decode_score_map(data: bytes) -> np.ndarray:
    if len(data) < _SCORE_HEADER.size:
        raise ValueError("score map shorter than its header")
    magic, w, h = _SCORE_HEADER.unpack_from(data)
    if magic != SCORE_MAGIC:
        raise ValueError(f"bad score map magic {magic!r}")
    body = data[_SCORE_HEADER.size:]
    if len(body) != 4 * w * h:
        raise ValueError(f"score map body has {len(body)} bytes, expected {4 * w * h}")
    return np.frombuffer(body, dtype="<f4").reshape(h, w).astype(np.float32)


def read_score_map(path: PathLike) -> np.ndarray:
    return decode_score_map(Path(path).read_bytes())


def write_score_map(path: PathLike, scores: np.ndarray) -> None:
    Path(path).write_bytes(encode_score_map(scores))
