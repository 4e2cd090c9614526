"""Regenerate the canned stub-server responses under tests/data/wire.

The responses are what a conforming server would return for the requests
stored next to them; the mock backends stand in for the models.

    python tests/make_wire_golden.py
"""
import json
from pathlib import Path

import numpy as np

from fixtures import street_scene
from pocsynth.backends import InpaintRequest, MockInpainter, MockSegmenter, SegmentRequest
from pocsynth.backends.http import b64, dump_json, inpaint_payload, segment_payload
from pocsynth.io import encode_mask_png, encode_png

OUT = Path(__file__).parent / "data" / "wire"


def golden_requests():
    image, _ = street_scene(256, 192, seed=3)
    crop = image[128:192, 64:128].copy()
    mask = np.zeros((64, 64), dtype=bool)
    mask[20:50, 14:44] = True
    inpaint = InpaintRequest(crop, mask, "A good photo of wheelie bin", seed=1234567890123, steps=50, guidance=7.5)
    return inpaint


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    inpaint = golden_requests()
    edited = MockInpainter().inpaint(inpaint)
    segment = SegmentRequest(edited, "wheelie bin", 0.3)
    dets = MockSegmenter().segment(segment)

    (OUT / "request_inpaint.json").write_bytes(dump_json(inpaint_payload(inpaint)))
    (OUT / "request_segment.json").write_bytes(dump_json(segment_payload(segment)))
    (OUT / "v1_inpaint.json").write_bytes(dump_json({"image": b64(encode_png(edited))}))
    (OUT / "v1_segment.json").write_bytes(dump_json({
        "detections": [{"mask": b64(encode_mask_png(d.mask)), "score": d.confidence, "label": d.label}
                       for d in dets],
    }))
    (OUT / "expected_inpaint.png").write_bytes(encode_png(edited))
    for i, d in enumerate(dets):
        (OUT / f"expected_mask_{i}.png").write_bytes(encode_mask_png(d.mask))
    print(json.dumps({"detections": len(dets)}))


if __name__ == "__main__":
    main()
