"""Deterministic per-sample random streams.

Every random draw in a generation run comes from a stream keyed by
``(global_seed, image_id, augmentation_index, attempt_index)``, so results
do not depend on which worker handles a sample or in what order.
"""
import hashlib

import numpy as np


def stable_hash(*parts) -> int:
    """64-bit hash of the parts' string forms, stable across processes."""
    data = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(data).digest()[:8], "big")


def sample_rng(global_seed: int, image_id: str, *indices: int) -> np.random.Generator:
    key = [int(global_seed) & (2**64 - 1), stable_hash(image_id), *(int(i) for i in indices)]
    return np.random.default_rng(np.random.SeedSequence(key))


def sample_seed(global_seed: int, image_id: str, *indices: int) -> int:
    """64-bit unsigned seed handed to backends for one attempt."""
    return stable_hash("seed", global_seed, image_id, *indices)
