"""JSON-over-HTTP client for remote inpainting and segmentation servers.

Wire protocol::

    POST {base}/v1/inpaint  {"image", "mask", "prompt", "seed", "steps", "guidance"}
                         -> {"image"}
    POST {base}/v1/segment  {"image", "prompt", "threshold"}
                         -> {"detections": [{"mask", "score", "label"}, ...]}

Images and masks are base64-encoded PNGs; masks are 8-bit with 255 marking
the pixels to repaint (or the detected object).
"""
import base64
import binascii
import json
import logging
import threading
import time
from typing import List

import numpy as np
import requests

from ..errors import BackendError
from ..io import decode_mask_png, decode_png, encode_mask_png, encode_png
from .base import Detection, InpaintRequest, SegmentRequest, sort_detections

log = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({408, 429, 500, 502, 503, 504})


def b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def unb64(text) -> bytes:
    if not isinstance(text, str):
        raise BackendError("expected a base64 string in response")
    try:
        return base64.b64decode(text, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise BackendError(f"invalid base64 payload: {exc}", retryable=True) from exc


def dump_json(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def inpaint_payload(req: InpaintRequest) -> dict:
    return {
        "image": b64(encode_png(req.crop)),
        "mask": b64(encode_mask_png(req.mask)),
        "prompt": req.prompt,
        "seed": int(req.seed),
        "steps": int(req.steps),
        "guidance": float(req.guidance),
    }


def segment_payload(req: SegmentRequest) -> dict:
    return {
        "image": b64(encode_png(req.crop)),
        "prompt": req.prompt,
        "threshold": float(req.detection_threshold),
    }


def _decode_image_field(value) -> np.ndarray:
    raw = unb64(value)
    try:
        return decode_png(raw)
    except Exception as exc:
        # truncated PNG streams land here
        raise BackendError(f"undecodable image in response: {exc}", retryable=True) from exc


def _decode_mask_field(value) -> np.ndarray:
    raw = unb64(value)
    try:
        return decode_mask_png(raw)
    except Exception as exc:
        raise BackendError(f"undecodable mask in response: {exc}", retryable=True) from exc


def parse_inpaint_response(body: dict, req: InpaintRequest) -> np.ndarray:
    if not isinstance(body, dict) or "image" not in body:
        raise BackendError("inpaint response lacks an 'image' field")
    image = _decode_image_field(body["image"])
    if image.shape != req.crop.shape:
        raise BackendError(
            f"dimension mismatch: sent {req.crop.shape[1]}x{req.crop.shape[0]}, "
            f"got {image.shape[1]}x{image.shape[0]}"
        )
    return image


def parse_segment_response(body: dict, req: SegmentRequest) -> List[Detection]:
    if not isinstance(body, dict) or not isinstance(body.get("detections"), list):
        raise BackendError("segment response lacks a 'detections' list")
    out = []
    for item in body["detections"]:
        try:
            score = float(item["score"])
            label = str(item.get("label", ""))
            mask_field = item["mask"]
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed detection entry: {exc}") from exc
        mask = _decode_mask_field(mask_field)
        if mask.shape != req.crop.shape[:2]:
            raise BackendError(f"detection mask shape {mask.shape} does not match crop {req.crop.shape[:2]}")
        if not 0.0 <= score <= 1.0:
            raise BackendError(f"detection score {score} outside [0, 1]")
        if score > req.detection_threshold:
            out.append(Detection(mask, score, label))
    return sort_detections(out)


class HttpBackend:
    """Client for a server implementing both endpoints.

    At most ``max_in_flight`` requests are outstanding at once across all
    threads using this client; each thread keeps its own session.
    """

    def __init__(self, base_url: str, timeout: float = 120.0, retries: int = 3,
                 backoff: float = 0.5, max_in_flight: int = 4):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = max(1, int(retries))
        self.backoff = backoff
        self._slots = threading.BoundedSemaphore(max(1, int(max_in_flight)))
        self._local = threading.local()

    def _session(self) -> requests.Session:
        session = getattr(self._local, "session", None)
        if session is None:
            session = self._local.session = requests.Session()
        return session

    def _post_once(self, path: str, body: bytes) -> dict:
        url = self.base_url + path
        try:
            with self._slots:
                resp = self._session().post(
                    url, data=body, timeout=self.timeout,
                    headers={"Content-Type": "application/json"},
                )
                content = resp.content
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise BackendError(f"transport failure on {path}: {exc}", retryable=True) from exc
        except requests.RequestException as exc:
            raise BackendError(f"request to {path} failed: {exc}", retryable=True) from exc
        if resp.status_code != 200:
            raise BackendError(
                f"{path} returned HTTP {resp.status_code}",
                retryable=resp.status_code in RETRYABLE_STATUS,
            )
        try:
            return json.loads(content)
        except ValueError as exc:
            raise BackendError(f"malformed JSON from {path}: {exc}", retryable=True) from exc

    def _call(self, path: str, payload: dict, parse):
        body = dump_json(payload)
        for attempt in range(self.retries):
            try:
                return parse(self._post_once(path, body))
            except BackendError as exc:
                if not exc.retryable or attempt == self.retries - 1:
                    raise
                delay = self.backoff * 2**attempt
                log.warning("%s (attempt %d/%d), retrying in %.2fs", exc, attempt + 1, self.retries, delay)
                time.sleep(delay)
        raise AssertionError("unreachable")

    def inpaint(self, req: InpaintRequest) -> np.ndarray:
        return self._call("/v1/inpaint", inpaint_payload(req), lambda b: parse_inpaint_response(b, req))

    def segment(self, req: SegmentRequest) -> List[Detection]:
        return self._call("/v1/segment", segment_payload(req), lambda b: parse_segment_response(b, req))
