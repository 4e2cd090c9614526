"""Built-in object lists and label conventions."""
from typing import Dict, Tuple

from .errors import CatalogNotFound
from .types import LabelConvention, ObjectCatalog

ANOMALY_PROMPTS = (
    "stroller",
    "trolley",
    "garbage bag",
    "wheelie bin",
    "suitcase",
    "skateboard",
    "chair dumped on the street",
    "sofa dumped on the street",
    "furniture dumped on the street",
    "matress dumped on the street",
    "garbage dumped on the street",
    "clothes dumped on the street",
    "cement mixer on the street",
    "cat",
    "dog",
    "bird flying",
    "horse",
    "skunk",
    "sheep",
    "crocodile",
    "alligator",
    "bear",
    "llama",
    "tiger",
    "monkey",
)

CITYSCAPES_ID_OBJECTS = ("rider", "bicycle", "motorcycle", "bus", "person", "car")

# VOC animal classes
PASCAL_ANIMALS = ("bird", "cat", "cow", "dog", "horse", "sheep")

COCO_CLASSES = (
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck",
    "boat", "traffic light", "fire hydrant", "stop sign", "parking meter", "bench",
    "bird", "cat", "dog", "horse", "sheep", "cow", "elephant", "bear", "zebra",
    "giraffe", "backpack", "umbrella", "handbag", "tie", "suitcase", "frisbee",
    "skis", "snowboard", "sports ball", "kite", "baseball bat", "baseball glove",
    "skateboard", "surfboard", "tennis racket", "bottle", "wine glass", "cup",
    "fork", "knife", "spoon", "bowl", "banana", "apple", "sandwich", "orange",
    "broccoli", "carrot", "hot dog", "pizza", "donut", "cake", "chair", "couch",
    "potted plant", "bed", "dining table", "toilet", "tv", "laptop", "mouse",
    "remote", "keyboard", "cell phone", "microwave", "oven", "toaster", "sink",
    "refrigerator", "book", "clock", "vase", "scissors", "teddy bear",
    "hair drier", "toothbrush",
)

# COCO classes that overlap Cityscapes categories; OOD fine-tuning sets skip them.
COCO_CITYSCAPES_OVERLAP = frozenset(
    {"person", "bicycle", "car", "motorcycle", "bus", "train", "truck",
     "traffic light", "stop sign"}
)

CITYSCAPES_TRAIN_IDS: Dict[str, int] = {
    "road": 0, "sidewalk": 1, "building": 2, "wall": 3, "fence": 4, "pole": 5,
    "traffic light": 6, "traffic sign": 7, "vegetation": 8, "terrain": 9,
    "sky": 10, "person": 11, "rider": 12, "car": 13, "truck": 14, "bus": 15,
    "train": 16, "motorcycle": 17, "bicycle": 18,
}


def _class_of(prompt: str) -> str:
    # "bird flying" belongs to the bird class; everything else is its own class
    return "bird" if prompt == "bird flying" else prompt


_CATALOGS: Dict[str, Tuple[str, ...]] = {
    "poc-alt-25": ANOMALY_PROMPTS,
    "cityscapes-id-6": CITYSCAPES_ID_OBJECTS,
    "pascal-animals-6": PASCAL_ANIMALS,
    "coco-80": COCO_CLASSES,
}


def catalog_names():
    return sorted(_CATALOGS)


def load_catalog(name: str) -> ObjectCatalog:
    try:
        prompts = _CATALOGS[name]
    except KeyError:
        raise CatalogNotFound(f"unknown catalog {name!r}; known: {', '.join(catalog_names())}") from None
    return ObjectCatalog(name, prompts, tuple(_class_of(p) for p in prompts))


def anomaly_test_convention() -> LabelConvention:
    """0 = in-distribution, 1 = OOD, 255 = ignore; every ID object maps to 0."""
    return LabelConvention(
        id_class_ids={0},
        ood_id=1,
        ignore_id=255,
        id_class_names={name: 0 for name in CITYSCAPES_TRAIN_IDS},
    )


def cityscapes_convention(new_classes=(), ood_id: int = 254) -> LabelConvention:
    """Cityscapes train ids, new classes numbered consecutively from 19."""
    base = max(CITYSCAPES_TRAIN_IDS.values()) + 1
    return LabelConvention(
        id_class_ids=set(CITYSCAPES_TRAIN_IDS.values()),
        ood_id=ood_id,
        ignore_id=255,
        new_class_ids={name: base + i for i, name in enumerate(new_classes)},
        id_class_names=CITYSCAPES_TRAIN_IDS,
    )
