"""Synthetic street scenes for pipeline tests.

Top half: grey noise ("sky and buildings"). Bottom half: the mock road colour
with a little noise, so the mock segmenter finds it for "the road". Grey and
the road colour are both far from any mock object colour.
"""
from pathlib import Path

import numpy as np

from pocsynth.backends.mock import SCENE_PALETTE
from pocsynth.io import write_image, write_label_map
from pocsynth.catalog import cityscapes_convention

ROAD_TRAIN_ID = 0
BUILDING_TRAIN_ID = 2


def street_scene(width=256, height=192, seed=0):
    rng = np.random.default_rng(seed)
    grey = rng.integers(90, 170, size=(height, width, 1))
    image = np.repeat(grey, 3, axis=2).astype(np.uint8)
    horizon = height // 2
    road = np.array(SCENE_PALETTE["the road"], dtype=np.int16)
    noise = rng.integers(-4, 5, size=(height - horizon, width, 3))
    image[horizon:] = np.clip(road + noise, 0, 255).astype(np.uint8)
    labels = np.full((height, width), BUILDING_TRAIN_ID, dtype=np.uint8)
    labels[horizon:] = ROAD_TRAIN_ID
    labels[:4] = 255
    return image, labels


def write_dataset(root, n_images=2, width=256, height=192, with_labels=True):
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    if with_labels:
        (root / "labels").mkdir(exist_ok=True)
    convention = cityscapes_convention()
    for i in range(n_images):
        image, labels = street_scene(width, height, seed=i)
        write_image(root / "images" / f"frame{i:03d}.png", image)
        if with_labels:
            write_label_map(root / "labels" / f"frame{i:03d}.png", labels, convention)
    return root
