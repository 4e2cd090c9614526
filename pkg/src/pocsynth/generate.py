"""Dataset generation runs: prompts, per-sample insertion, outputs and manifest.

A run walks ``input_dir`` (``images/*.png`` plus optional ``labels/*.png``,
or bare ``*.png`` files), inserts ``augmentations_per_image`` objects per
input and writes::

    output_dir/images/<stem>_aug<k>.png
    output_dir/labels/<stem>_aug<k>.png
    output_dir/manifest.jsonl

All randomness is derived per sample from the global seed, so the output
tree is byte-identical for any worker count.
"""
import hashlib
import json
import logging
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .backends.base import (
    DEFAULT_DETECTION_THRESHOLD,
    DEFAULT_GUIDANCE,
    DEFAULT_STEPS,
    InpaintBackend,
    InpaintRequest,
    SegmentationBackend,
)
from .blend import BlendConfig, annotate, blend, feather, paste_and_label
from .catalog import (
    COCO_CITYSCAPES_OVERLAP,
    anomaly_test_convention,
    cityscapes_convention,
    load_catalog,
)
from .errors import BackendError, GenerationRejected, LabelValueError, PromptError
from .io import read_image, read_label_map, write_image, write_label_map
from .placement import PlacementConfig, UNCONSTRAINED, crop_for, draw_region, valid_area
from .seeding import sample_rng, sample_seed
from .types import LabelConvention, ObjectCatalog, PromptSet, Region

log = logging.getLogger(__name__)

MODES = ("anomaly-test", "ood-finetune", "extend")
INPAINT_TEMPLATE = "A good photo of {}"
DEFAULT_LOCATION = "the road"
MANIFEST_NAME = "manifest.jsonl"


class OutputExists(Exception):
    pass


def build_prompt(object_prompt: str, class_name: Optional[str] = None, class_id: int = 0,
                 class_role: str = "ood") -> PromptSet:
    if not object_prompt or not object_prompt.strip():
        raise PromptError("object prompt must be non-empty")
    class_name = class_name or object_prompt
    location = UNCONSTRAINED if class_name == "bird" else DEFAULT_LOCATION
    return PromptSet(
        object_prompt=object_prompt,
        location_prompt=location,
        inpaint_prompt=INPAINT_TEMPLATE.format(object_prompt),
        class_id=class_id,
        class_role=class_role,
        class_name=class_name,
    )


@dataclass(frozen=True)
class CatalogUse:
    catalog: ObjectCatalog
    role: str


def ood_finetune_catalog() -> ObjectCatalog:
    coco = load_catalog("coco-80")
    keep = [(p, c) for p, c in coco.entries() if c not in COCO_CITYSCAPES_OVERLAP]
    return ObjectCatalog("coco-80", tuple(p for p, _ in keep), tuple(c for _, c in keep))


def default_role(catalog_name: str, mode: str) -> str:
    if catalog_name == "cityscapes-id-6":
        return "id-synthetic"
    if catalog_name == "pascal-animals-6" and mode == "extend":
        return "new-class"
    return "ood"


def default_catalogs(mode: str) -> List[CatalogUse]:
    if mode == "anomaly-test":
        return [CatalogUse(load_catalog("poc-alt-25"), "ood"),
                CatalogUse(load_catalog("cityscapes-id-6"), "id-synthetic")]
    if mode == "ood-finetune":
        return [CatalogUse(ood_finetune_catalog(), "ood")]
    if mode == "extend":
        return [CatalogUse(load_catalog("pascal-animals-6"), "new-class")]
    raise ValueError(f"unknown mode {mode!r}")


def convention_for(mode: str, catalogs: Sequence[CatalogUse]) -> LabelConvention:
    if mode == "anomaly-test":
        return anomaly_test_convention()
    new = []
    for use in catalogs:
        if use.role == "new-class":
            new.extend(c for c in use.catalog.class_names if c not in new)
    return cityscapes_convention(new_classes=new)


@dataclass(frozen=True)
class GenerationJob:
    mode: str
    input_dir: Path
    output_dir: Path
    catalogs: Tuple[CatalogUse, ...] = ()
    augmentations_per_image: int = 3
    global_seed: int = 0
    placement: PlacementConfig = field(default_factory=PlacementConfig)
    blend: BlendConfig = field(default_factory=BlendConfig)
    concurrency: int = 4
    compose: bool = False
    id_object_fraction: float = 1 / 6
    steps: int = DEFAULT_STEPS
    guidance: float = DEFAULT_GUIDANCE
    detection_threshold: float = DEFAULT_DETECTION_THRESHOLD
    base_ignore_id: int = 255
    overwrite: bool = False
    resume: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.augmentations_per_image < 1:
            raise ValueError("augmentations_per_image must be >= 1")
        if not self.catalogs:
            object.__setattr__(self, "catalogs", tuple(default_catalogs(self.mode)))
        object.__setattr__(self, "catalogs", tuple(self.catalogs))
        object.__setattr__(self, "input_dir", Path(self.input_dir))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        if not 0 <= self.id_object_fraction <= 1:
            raise ValueError("id_object_fraction must lie in [0, 1]")

    @cached_property
    def convention(self) -> LabelConvention:
        return convention_for(self.mode, self.catalogs)

    def fingerprint(self) -> dict:
        """Everything that determines the output, minus paths and scheduling."""
        return {
            "mode": self.mode,
            "catalogs": [{"name": u.catalog.name, "role": u.role, "prompts": list(u.catalog.prompts)}
                         for u in self.catalogs],
            "augmentations_per_image": self.augmentations_per_image,
            "global_seed": self.global_seed,
            "placement": asdict(self.placement),
            "blend": asdict(self.blend),
            "compose": self.compose,
            "id_object_fraction": self.id_object_fraction,
            "steps": self.steps,
            "guidance": self.guidance,
            "detection_threshold": self.detection_threshold,
            "base_ignore_id": self.base_ignore_id,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.fingerprint(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def sample_prompts(job: GenerationJob, image_id: str) -> List[PromptSet]:
    """One prompt per augmentation, each from its own seeded stream.

    Anomaly-test runs first pick ID objects with probability
    ``id_object_fraction``, then draw uniformly within the chosen group.
    Other modes draw uniformly over every catalog entry.
    """
    convention = job.convention
    entries = [(p, c, u.role) for u in job.catalogs for p, c in u.catalog.entries()]
    id_entries = [e for e in entries if e[2] == "id-synthetic"]
    other_entries = [e for e in entries if e[2] != "id-synthetic"]
    split = job.mode == "anomaly-test" and id_entries and other_entries
    prompts = []
    for k in range(job.augmentations_per_image):
        rng = sample_rng(job.global_seed, f"{image_id}#prompt", k)
        pool = entries
        if split:
            pool = id_entries if rng.random() < job.id_object_fraction else other_entries
        prompt, class_name, role = pool[int(rng.integers(len(pool)))]
        prompts.append(build_prompt(prompt, class_name, convention.class_id_for(class_name, role), role))
    return prompts


@dataclass
class ManifestEntry:
    source_image: str
    aug_index: int
    output_image: Optional[str]
    output_labels: Optional[str]
    prompt: Optional[PromptSet]
    region: Optional[Region]
    crop: Optional[Region]
    seed: Optional[int]
    status: str
    reject_reason: Optional[str] = None
    attempts: int = 0
    object_pixels: int = 0

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"

    def to_dict(self) -> dict:
        return {
            "source_image": self.source_image,
            "aug_index": self.aug_index,
            "output_image": self.output_image,
            "output_labels": self.output_labels,
            "prompt": self.prompt.to_dict() if self.prompt else None,
            "region": self.region.to_dict() if self.region else None,
            "crop": self.crop.to_dict() if self.crop else None,
            "seed": self.seed,
            "status": self.status,
            "reject_reason": self.reject_reason,
            "attempts": self.attempts,
            "object_pixels": self.object_pixels,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestEntry":
        d = dict(d)
        d["prompt"] = PromptSet.from_dict(d["prompt"]) if d.get("prompt") else None
        d["region"] = Region.from_dict(d["region"]) if d.get("region") else None
        d["crop"] = Region.from_dict(d["crop"]) if d.get("crop") else None
        return cls(**d)

    def to_line(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True) + "\n"


def read_manifest(path) -> Tuple[dict, List[ManifestEntry]]:
    header, entries = {}, []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if "header" in obj:
            header = obj["header"]
        else:
            entries.append(ManifestEntry.from_dict(obj))
    return header, entries


@dataclass
class Insertion:
    """Outcome of inserting one object into one image."""

    image: Optional[np.ndarray]
    labels: Optional[np.ndarray]
    region: Optional[Region]
    crop: Optional[Region]
    seed: Optional[int]
    attempts: int
    reject_reason: Optional[str] = None
    object_pixels: int = 0


def insert_object(image: np.ndarray, labels: np.ndarray, prompt: PromptSet, job: GenerationJob,
                  inpainter: InpaintBackend, segmenter: SegmentationBackend,
                  image_id: str, aug_index: int) -> Insertion:
    """Run region selection, inpainting, annotation and blending for one object.

    Region draws and generation rejections share ``placement.max_attempts``.
    Backend failures end the sample immediately.
    """
    cfg = job.placement
    height, width = image.shape[:2]
    try:
        valid = valid_area(image, prompt.location_prompt, segmenter, cfg.placement_mode,
                           job.detection_threshold)
    except BackendError as exc:
        return Insertion(None, None, None, None, None, 0, f"backend error: {exc}")
    support = np.flatnonzero(valid)
    if support.size == 0:
        return Insertion(None, None, None, None, None, 0, f"no valid area for {prompt.location_prompt!r}")

    reason = "no acceptable region"
    for attempt in range(cfg.max_attempts):
        rng = sample_rng(job.global_seed, image_id, aug_index, attempt)
        seed = sample_seed(job.global_seed, image_id, aug_index, attempt)
        drawn = draw_region(valid, cfg, rng, support)
        if drawn is None:
            reason = "no acceptable region"
            continue
        region, _ = drawn
        crop = crop_for(region, width, height, cfg.crop_multiple)
        local = region.shifted(-crop.x0, -crop.y0)
        x_r = image[crop.slices]
        repaint = np.zeros((crop.h, crop.w), dtype=bool)
        repaint[local.slices] = True
        try:
            edited = inpainter.inpaint(InpaintRequest(x_r, repaint, prompt.inpaint_prompt, seed,
                                                      job.steps, job.guidance))
            object_mask = annotate(edited, prompt, segmenter, job.blend, local, job.detection_threshold)
        except GenerationRejected as exc:
            reason = f"generation rejected: {exc}"
            log.debug("%s aug %d attempt %d: %s", image_id, aug_index, attempt, exc)
            continue
        except BackendError as exc:
            return Insertion(None, None, region, crop, seed, attempt + 1, f"backend error: {exc}")
        blended = blend(x_r, edited, feather(object_mask, job.blend))
        sample = paste_and_label(image, labels, crop, blended, object_mask, prompt.class_id,
                                 job.convention, prompt, region, seed)
        return Insertion(sample.image, sample.labels, region, crop, seed, attempt + 1,
                         object_pixels=int(object_mask.sum()))
    return Insertion(None, None, None, None, None, cfg.max_attempts, reason)


@dataclass(frozen=True)
class InputItem:
    image_id: str
    image_path: Path
    label_path: Optional[Path]
    rel: str


def list_inputs(input_dir: Path) -> List[InputItem]:
    input_dir = Path(input_dir)
    image_dir = input_dir / "images" if (input_dir / "images").is_dir() else input_dir
    label_dir = input_dir / "labels"
    items = []
    for path in sorted(image_dir.glob("*.png")):
        label = label_dir / path.name
        items.append(InputItem(path.stem, path, label if label.is_file() else None,
                               path.relative_to(input_dir).as_posix()))
    return items


def load_base(item: InputItem, job: GenerationJob) -> Tuple[np.ndarray, np.ndarray]:
    """Input image and its label map in the job's label convention."""
    image = read_image(item.image_path)
    convention = job.convention
    if job.mode == "anomaly-test":
        # anomaly ground truth: everything known is ID, base ignore stays ignore
        labels = np.zeros(image.shape[:2], dtype=np.uint8)
        if item.label_path is not None:
            base = read_label_map(item.label_path)
            labels[base == job.base_ignore_id] = convention.ignore_id
    else:
        if item.label_path is None:
            raise FileNotFoundError(f"no label map for {item.rel}")
        labels = read_label_map(item.label_path)
        convention.validate(labels)
    if labels.shape != image.shape[:2]:
        raise LabelValueError(f"label map shape {labels.shape} does not match image {image.shape[:2]}")
    return image, labels


class Generator:
    def __init__(self, job: GenerationJob, inpainter: InpaintBackend, segmenter: SegmentationBackend):
        self.job = job
        self.inpainter = inpainter
        self.segmenter = segmenter
        self.convention = job.convention
        self.images_dir = job.output_dir / "images"
        self.labels_dir = job.output_dir / "labels"

    def _output_names(self, item: InputItem, k: int) -> Tuple[str, str]:
        name = f"{item.image_id}_aug{k}.png"
        return f"images/{name}", f"labels/{name}"

    def _write(self, rel_image: str, rel_labels: str, image: np.ndarray, labels: np.ndarray) -> None:
        write_image(self.job.output_dir / rel_image, image)
        write_label_map(self.job.output_dir / rel_labels, labels, self.convention)

    def _entry(self, item, k, prompt, ins: Insertion, outputs=(None, None)) -> ManifestEntry:
        accepted = ins.reject_reason is None
        return ManifestEntry(
            source_image=item.rel, aug_index=k,
            output_image=outputs[0] if accepted else None,
            output_labels=outputs[1] if accepted else None,
            prompt=prompt, region=ins.region, crop=ins.crop, seed=ins.seed,
            status="accepted" if accepted else "rejected",
            reject_reason=ins.reject_reason, attempts=ins.attempts,
            object_pixels=ins.object_pixels,
        )

    def _failed(self, item, ks, prompts, exc) -> List[ManifestEntry]:
        reason = f"unreadable input: {exc}"
        log.warning("%s: %s", item.rel, reason)
        return [ManifestEntry(item.rel, k, None, None, prompts[k] if prompts else None,
                              None, None, None, "rejected", reason, 0) for k in ks]

    def single(self, item: InputItem, k: int) -> List[ManifestEntry]:
        prompts = sample_prompts(self.job, item.image_id)
        try:
            image, labels = load_base(item, self.job)
        except Exception as exc:
            return self._failed(item, [k], prompts, exc)
        ins = insert_object(image, labels, prompts[k], self.job, self.inpainter, self.segmenter,
                            item.image_id, k)
        outputs = self._output_names(item, k)
        if ins.reject_reason is None:
            self._write(*outputs, ins.image, ins.labels)
        else:
            log.info("%s aug %d rejected: %s", item.image_id, k, ins.reject_reason)
        return [self._entry(item, k, prompts[k], ins, outputs)]

    def composed(self, item: InputItem, todo: Sequence[int]) -> List[ManifestEntry]:
        prompts = sample_prompts(self.job, item.image_id)
        try:
            image, labels = load_base(item, self.job)
        except Exception as exc:
            return self._failed(item, todo, prompts, exc)
        outputs = self._output_names(item, 0)
        results = []
        for k in todo:
            ins = insert_object(image, labels, prompts[k], self.job, self.inpainter, self.segmenter,
                                item.image_id, k)
            if ins.reject_reason is None:
                image, labels = ins.image, ins.labels
            else:
                log.info("%s aug %d rejected: %s", item.image_id, k, ins.reject_reason)
            results.append((k, ins))
        if any(ins.reject_reason is None for _, ins in results):
            self._write(*outputs, image, labels)
        return [self._entry(item, k, prompts[k], ins, outputs) for k, ins in results]


def _prepare_output(job: GenerationJob) -> List[ManifestEntry]:
    out = job.output_dir
    manifest = out / MANIFEST_NAME
    previous: List[ManifestEntry] = []
    occupied = manifest.exists() or (out / "images").exists() or (out / "labels").exists()
    if occupied:
        if job.resume and manifest.exists():
            header, previous = read_manifest(manifest)
            if header.get("config_hash") != job.config_hash():
                raise OutputExists(f"{manifest} was written by a different job configuration")
        elif job.overwrite:
            for sub in ("images", "labels"):
                shutil.rmtree(out / sub, ignore_errors=True)
            manifest.unlink(missing_ok=True)
        else:
            raise OutputExists(f"{out} already holds generated data; pass overwrite or resume")
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    return previous


def manifest_header(job: GenerationJob) -> dict:
    return {
        "tool": "pocsynth",
        "version": __version__,
        "config_hash": job.config_hash(),
        "global_seed": job.global_seed,
        "mode": job.mode,
    }


def run(job: GenerationJob, inpainter: InpaintBackend, segmenter: SegmentationBackend) -> List[ManifestEntry]:
    """Generate the dataset and return every manifest entry (old and new)."""
    previous = _prepare_output(job)
    done = {(e.source_image, e.aug_index) for e in previous if e.accepted}
    items = list_inputs(job.input_dir)
    gen = Generator(job, inpainter, segmenter)
    n_aug = job.augmentations_per_image

    if job.compose:
        tasks = []
        for item in items:
            # a composed image is rebuilt as a whole
            if not any((item.rel, k) in done for k in range(n_aug)):
                tasks.append((gen.composed, item, list(range(n_aug))))
    else:
        tasks = [(gen.single, item, k) for item in items for k in range(n_aug)
                 if (item.rel, k) not in done]

    manifest = job.output_dir / MANIFEST_NAME
    new_entries: List[ManifestEntry] = []
    mode = "a" if previous else "w"
    with manifest.open(mode) as fh:
        if not previous:
            fh.write(json.dumps({"header": manifest_header(job)}, sort_keys=True) + "\n")
        with ThreadPoolExecutor(max_workers=job.concurrency) as pool:
            for entries in pool.map(lambda t: t[0](t[1], t[2]), tasks):
                for entry in entries:
                    fh.write(entry.to_line())
                    new_entries.append(entry)
                fh.flush()
    if previous:
        redone = {(e.source_image, e.aug_index) for e in new_entries}
        kept = [e for e in previous if e.accepted or (e.source_image, e.aug_index) not in redone]
        return kept + new_entries
    return new_entries

